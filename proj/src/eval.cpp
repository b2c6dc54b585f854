#include "arcus/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "arcus/error.hpp"

namespace arcus {

namespace {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw DimensionError("auc: scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        // Ranks i+1..j share their mean.
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                pos_rank_sum += mid_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw InvalidArgument("auc: labels must contain both classes");
    }
    const double p = static_cast<double>(n_pos);
    const double q = static_cast<double>(n_neg);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double stream_auc(const RunResult& result) {
    if (!result.has_labels()) {
        throw InvalidArgument("stream_auc: run has no labels");
    }
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t t = 0; t < result.scores.size(); ++t) {
        scores.insert(scores.end(), result.scores[t].begin(), result.scores[t].end());
        labels.insert(labels.end(), result.labels[t].begin(), result.labels[t].end());
    }
    return auc(scores, labels);
}

std::vector<double> batch_aucs(const RunResult& result) {
    std::vector<double> out;
    for (std::size_t t = 0; t < result.scores.size(); ++t) {
        const auto& l = result.labels[t];
        const bool both = std::any_of(l.begin(), l.end(), [](int v) { return v != 0; }) &&
                          std::any_of(l.begin(), l.end(), [](int v) { return v == 0; });
        out.push_back(both ? auc(result.scores[t], l) : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

void write_scores_csv(std::ostream& out, const RunResult& result) {
    const bool labelled = result.has_labels();
    out << "batch_index,point_index,score" << (labelled ? ",label" : "") << '\n';
    for (std::size_t t = 0; t < result.scores.size(); ++t) {
        const auto& s = result.scores[t];
        for (std::size_t i = 0; i < s.size(); ++i) {
            out << result.batch_indices[t] << ',' << i << ',' << format_double(s[i]);
            if (labelled) {
                out << ',' << result.labels[t][i];
            }
            out << '\n';
        }
    }
}

void write_trace_csv(std::ostream& out, const RunResult& result) {
    out << "batch_index,pool_reliability,pool_size,event\n";
    if (!result.events.empty() && result.events.front().kind == EventKind::init) {
        out << result.init_batch_index << ",," << result.events.front().pool_size << ",init\n";
    }
    const std::size_t offset = result.events.size() - result.scores.size();
    for (std::size_t t = 0; t < result.scores.size(); ++t) {
        out << result.batch_indices[t] << ',' << format_double(result.pool_reliability[t]) << ','
            << result.pool_size[t] << ',' << to_string(result.events[t + offset].kind) << '\n';
    }
}

std::vector<Variant> benchmark_variants(const PoolConfig& base, bool ablations) {
    std::vector<Variant> out;
    PoolConfig arcus = base;
    arcus.inference_mode = InferenceMode::concept_driven;
    arcus.merge_mode = MergeMode::similarity;
    arcus.update_mode = UpdateMode::drift_aware;
    out.push_back({"arcus", arcus});

    PoolConfig incremental = arcus;
    incremental.update_mode = UpdateMode::incremental;
    out.push_back({"incremental", incremental});

    if (ablations) {
        PoolConfig single = arcus;
        single.inference_mode = InferenceMode::single_model;
        out.push_back({"single_model", single});
        PoolConfig always = arcus;
        always.merge_mode = MergeMode::always;
        out.push_back({"always_merge", always});
        PoolConfig never = arcus;
        never.merge_mode = MergeMode::never;
        out.push_back({"no_merge", never});
    }
    return out;
}

MeanError mean_and_std_error(std::span<const double> values) {
    if (values.empty()) {
        return {};
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

const VariantSummary& BenchmarkReport::summary(const std::string& variant) const {
    for (const auto& s : summaries) {
        if (s.variant == variant) {
            return s;
        }
    }
    throw InvalidArgument("benchmark report has no variant '" + variant + "'");
}

BenchmarkReport run_benchmark(const DriftScenario& scenario, const BenchmarkConfig& config) {
    if (config.variants.empty()) {
        throw InvalidArgument("run_benchmark: no variants");
    }
    if (config.seeds == 0) {
        throw InvalidArgument("run_benchmark: seeds must be >= 1");
    }
    BenchmarkReport report;
    for (std::size_t s = 0; s < config.seeds; ++s) {
        DriftScenario sc = scenario;
        sc.seed = scenario.seed + s;
        const auto stream = generate_drift_stream(sc);
        ModelConfig model = config.model;
        model.seed = config.model.seed + s;
        for (const auto& v : config.variants) {
            VectorSource src(stream);
            const auto run = run_prequential(src, v.pool, model);
            BenchmarkRow row;
            row.variant = v.name;
            row.seed = sc.seed;
            row.auc = stream_auc(run);
            const auto& ps = run.pool_size;
            row.mean_pool_size =
                ps.empty() ? 0.0
                           : static_cast<double>(std::accumulate(ps.begin(), ps.end(), std::size_t{0})) /
                                 static_cast<double>(ps.size());
            row.max_pool_size = ps.empty() ? 0 : *std::max_element(ps.begin(), ps.end());
            row.major_updates = run.major_updates();
            const auto& bs = run.batch_seconds;
            row.mean_batch_seconds =
                bs.empty() ? 0.0 : std::accumulate(bs.begin(), bs.end(), 0.0) / static_cast<double>(bs.size());
            report.rows.push_back(std::move(row));
        }
    }

    for (const auto& v : config.variants) {
        std::vector<double> auc_v, mean_ps, max_ps, majors, secs;
        for (const auto& r : report.rows) {
            if (r.variant != v.name) continue;
            auc_v.push_back(r.auc);
            mean_ps.push_back(r.mean_pool_size);
            max_ps.push_back(static_cast<double>(r.max_pool_size));
            majors.push_back(static_cast<double>(r.major_updates));
            secs.push_back(r.mean_batch_seconds);
        }
        report.summaries.push_back({v.name, mean_and_std_error(auc_v), mean_and_std_error(mean_ps),
                                    mean_and_std_error(max_ps), mean_and_std_error(majors),
                                    mean_and_std_error(secs)});
    }
    return report;
}

void write_report_csv(std::ostream& out, const BenchmarkReport& report) {
    out << "variant,seed,auc,mean_pool_size,max_pool_size,major_updates,mean_batch_seconds\n";
    for (const auto& r : report.rows) {
        out << r.variant << ',' << r.seed << ',' << format_double(r.auc) << ','
            << format_double(r.mean_pool_size) << ',' << r.max_pool_size << ',' << r.major_updates
            << ',' << format_double(r.mean_batch_seconds) << '\n';
    }
}

void write_report_table(std::ostream& out, const BenchmarkReport& report) {
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %-17s %-17s %-9s %-15s %-12s\n", "variant", "auc",
                  "mean_pool_size", "max_pool", "major_updates", "ms/batch");
    out << line;
    for (const auto& s : report.summaries) {
        std::snprintf(line, sizeof line,
                      "%-14s %.4f +- %.4f  %6.2f +- %5.2f   %6.2f    %6.2f +- %4.2f  %8.2f\n",
                      s.variant.c_str(), s.auc.mean, s.auc.std_error, s.mean_pool_size.mean,
                      s.mean_pool_size.std_error, s.max_pool_size.mean, s.major_updates.mean,
                      s.major_updates.std_error, 1e3 * s.mean_batch_seconds.mean);
        out << line;
    }
}

}  // namespace arcus
