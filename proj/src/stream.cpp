#include "arcus/stream.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string_view>

#include "arcus/error.hpp"
#include "json.hpp"

namespace arcus {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

}  // namespace

std::optional<Batch> VectorSource::next() {
    if (pos_ >= batches_.size()) {
        return std::nullopt;
    }
    return batches_[pos_++];
}

CsvBatchSource::CsvBatchSource(const std::filesystem::path& path, std::size_t batch_size,
                               std::optional<std::string> label_column)
    : in_(path), path_(path.string()), batch_size_(batch_size) {
    if (batch_size_ == 0) {
        throw InvalidArgument("batch size must be positive");
    }
    if (!in_) {
        throw ParseError(path_ + ": cannot open file");
    }
    std::string header;
    if (!std::getline(in_, header)) {
        throw ParseError(path_ + ": missing header row");
    }
    if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        header.erase(0, 3);
    }
    const auto names = split_fields(header);
    n_cols_ = names.size();
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (label_column && trim(names[c]) == *label_column) {
            label_col_ = c;
        } else {
            feature_cols_.push_back(c);
        }
    }
    if (label_column && !label_col_) {
        throw ParseError(path_ + ": label column '" + *label_column + "' not found in header");
    }
    if (feature_cols_.empty()) {
        throw ParseError(path_ + ": no feature columns");
    }
}

std::optional<Batch> CsvBatchSource::next() {
    Batch batch;
    batch.data = Matrix(batch_size_, feature_cols_.size());
    if (label_col_) {
        batch.labels.resize(batch_size_);
    }
    std::size_t filled = 0;
    std::string line;
    while (filled < batch_size_ && std::getline(in_, line)) {
        ++line_no_;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != n_cols_) {
            throw ParseError(path_ + ": row " + std::to_string(line_no_) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(n_cols_));
        }
        auto row = batch.data.row(filled);
        for (std::size_t k = 0; k < feature_cols_.size(); ++k) {
            const auto cell = trim(fields[feature_cols_[k]]);
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw ParseError(path_ + ": row " + std::to_string(line_no_) + ", column " +
                                 std::to_string(feature_cols_[k] + 1) + ": '" + std::string(cell) +
                                 "' is not a finite number");
            }
            row[k] = v;
        }
        if (label_col_) {
            const auto cell = trim(fields[*label_col_]);
            int v = 0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || (v != 0 && v != 1)) {
                throw ParseError(path_ + ": row " + std::to_string(line_no_) + ", column " +
                                 std::to_string(*label_col_ + 1) + ": label '" + std::string(cell) +
                                 "' is not 0 or 1");
            }
            batch.labels[filled] = v;
        }
        ++filled;
    }
    if (filled < batch_size_) {
        dropped_ += filled;
        return std::nullopt;
    }
    batch.index = next_index_++;
    return batch;
}

std::vector<Batch> read_csv_stream(const std::filesystem::path& path, std::size_t batch_size,
                                   std::optional<std::string> label_column) {
    CsvBatchSource src(path, batch_size, std::move(label_column));
    std::vector<Batch> out;
    while (auto b = src.next()) {
        out.push_back(std::move(*b));
    }
    return out;
}

void write_stream_csv(std::ostream& out, const std::vector<Batch>& batches) {
    if (batches.empty()) {
        return;
    }
    const std::size_t d = batches.front().data.cols();
    const bool labelled = batches.front().has_labels();
    std::string line;
    for (std::size_t k = 0; k < d; ++k) {
        line += (k ? ",f" : "f") + std::to_string(k);
    }
    if (labelled) {
        line += ",label";
    }
    out << line << '\n';
    for (const auto& b : batches) {
        if (b.data.cols() != d || b.has_labels() != labelled) {
            throw DimensionError("write_stream_csv: batches disagree in shape");
        }
        for (std::size_t i = 0; i < b.data.rows(); ++i) {
            line.clear();
            const auto row = b.data.row(i);
            for (std::size_t k = 0; k < d; ++k) {
                if (k) line += ',';
                append_double(line, row[k]);
            }
            if (labelled) {
                line += ',';
                line += b.labels[i] ? '1' : '0';
            }
            out << line << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Scenarios

void DriftScenario::validate() const {
    if (dim == 0) throw InvalidArgument("scenario: dim must be positive");
    if (batch_size == 0) throw InvalidArgument("scenario: batch_size must be positive");
    if (!(anomaly_ratio > 0.0 && anomaly_ratio < 0.5)) {
        throw InvalidArgument("scenario: anomaly_ratio must lie in (0, 0.5)");
    }
    if (concepts.empty()) throw InvalidArgument("scenario: no concepts");
    if (schedule.empty()) throw InvalidArgument("scenario: empty schedule");
    for (std::size_t c = 0; c < concepts.size(); ++c) {
        const auto& cs = concepts[c];
        for (const auto* v : {&cs.normal_mean, &cs.normal_var, &cs.anomaly_mean, &cs.anomaly_var}) {
            if (v->size() != dim) {
                throw InvalidArgument("scenario: concept " + std::to_string(c) +
                                      " has a vector of the wrong length");
            }
            if (!std::all_of(v->begin(), v->end(), [](double x) { return std::isfinite(x); })) {
                throw InvalidArgument("scenario: concept " + std::to_string(c) + " is not finite");
            }
        }
        for (const auto* v : {&cs.normal_var, &cs.anomaly_var}) {
            if (std::any_of(v->begin(), v->end(), [](double x) { return x < 0.0; })) {
                throw InvalidArgument("scenario: concept " + std::to_string(c) +
                                      " has a negative variance");
            }
        }
    }
    for (const auto& s : schedule) {
        if (s.duration == 0) throw InvalidArgument("scenario: segment durations must be >= 1");
        if (s.concept_index >= concepts.size()) {
            throw InvalidArgument("scenario: segment refers to unknown concept " +
                                  std::to_string(s.concept_index));
        }
    }
}

std::size_t DriftScenario::total_batches() const noexcept {
    std::size_t n = 0;
    for (const auto& s : schedule) n += s.duration;
    return n;
}

std::size_t DriftScenario::anomalies_per_batch() const noexcept {
    const auto normals = static_cast<std::size_t>(
        std::llround(static_cast<double>(batch_size) * (1.0 - anomaly_ratio)));
    return batch_size - normals;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& where) {
    if (!obj.is_object()) {
        throw ParseError("scenario: " + where + " must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ParseError("scenario: unknown key '" + key + "' in " + where);
        }
    }
}

const json& required(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) {
        throw ParseError("scenario: missing key '" + std::string(key) + "' in " + where);
    }
    return obj.at(key);
}

std::vector<double> feature_vector(const json& v, std::size_t dim, const std::string& where) {
    if (v.is_number()) {
        return std::vector<double>(dim, v.get<double>());
    }
    if (!v.is_array() || v.size() != dim) {
        throw ParseError("scenario: " + where + " must be a number or an array of " +
                         std::to_string(dim) + " numbers");
    }
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ParseError("scenario: " + where + " has a non-numeric entry");
        out.push_back(x.get<double>());
    }
    return out;
}

Transition parse_transition(const std::string& s) {
    if (s == "abrupt") return Transition::abrupt;
    if (s == "gradual") return Transition::gradual;
    if (s == "incremental") return Transition::incremental;
    throw ParseError("scenario: unknown transition '" + s + "'");
}

}  // namespace

DriftScenario parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    reject_unknown(doc, {"concepts", "schedule", "anomaly_ratio", "dim", "batch_size", "seed"},
                   "scenario");
    try {
        DriftScenario sc;
        sc.dim = required(doc, "dim", "scenario").get<std::size_t>();
        if (doc.contains("batch_size")) sc.batch_size = doc["batch_size"].get<std::size_t>();
        if (doc.contains("anomaly_ratio")) sc.anomaly_ratio = doc["anomaly_ratio"].get<double>();
        if (doc.contains("seed")) sc.seed = doc["seed"].get<std::uint64_t>();

        const auto& concepts = required(doc, "concepts", "scenario");
        if (!concepts.is_array()) throw ParseError("scenario: 'concepts' must be an array");
        for (std::size_t c = 0; c < concepts.size(); ++c) {
            const std::string where = "concepts[" + std::to_string(c) + "]";
            const auto& cj = concepts[c];
            reject_unknown(cj, {"normal_mean", "normal_var", "anomaly_mean", "anomaly_var"}, where);
            sc.concepts.push_back(ConceptSpec{
                feature_vector(required(cj, "normal_mean", where), sc.dim, where + ".normal_mean"),
                feature_vector(required(cj, "normal_var", where), sc.dim, where + ".normal_var"),
                feature_vector(required(cj, "anomaly_mean", where), sc.dim, where + ".anomaly_mean"),
                feature_vector(required(cj, "anomaly_var", where), sc.dim, where + ".anomaly_var"),
            });
        }

        const auto& schedule = required(doc, "schedule", "scenario");
        if (!schedule.is_array()) throw ParseError("scenario: 'schedule' must be an array");
        for (std::size_t s = 0; s < schedule.size(); ++s) {
            const std::string where = "schedule[" + std::to_string(s) + "]";
            const auto& sj = schedule[s];
            reject_unknown(sj, {"concept", "duration", "transition"}, where);
            Segment seg;
            seg.concept_index = required(sj, "concept", where).get<std::size_t>();
            seg.duration = required(sj, "duration", where).get<std::size_t>();
            if (sj.contains("transition")) {
                seg.transition = parse_transition(sj["transition"].get<std::string>());
            }
            sc.schedule.push_back(seg);
        }
        sc.validate();
        return sc;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
}

DriftScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string() + ": cannot open scenario file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

// ---------------------------------------------------------------------------
// Generator

DriftStreamSource::DriftStreamSource(DriftScenario scenario)
    : sc_(std::move(scenario)), rng_(sc_.seed) {
    sc_.validate();
}

std::optional<Batch> DriftStreamSource::next() {
    if (segment_ >= sc_.schedule.size()) {
        return std::nullopt;
    }
    const Segment& seg = sc_.schedule[segment_];
    const ConceptSpec& target = sc_.concepts[seg.concept_index];
    const ConceptSpec* source = segment_ == 0
                                    ? &target
                                    : &sc_.concepts[sc_.schedule[segment_ - 1].concept_index];
    const Transition tr = segment_ == 0 ? Transition::abrupt : seg.transition;
    // Share of the new concept at this point of the segment; 1 on its last batch.
    const double progress = static_cast<double>(in_segment_ + 1) / static_cast<double>(seg.duration);

    const std::size_t b = sc_.batch_size;
    const std::size_t d = sc_.dim;
    const std::size_t n_anom = sc_.anomalies_per_batch();

    Batch batch;
    batch.index = index_;
    batch.data = Matrix(b, d);
    batch.labels.assign(b, 0);
    std::fill(batch.labels.begin(), batch.labels.begin() + static_cast<std::ptrdiff_t>(n_anom), 1);
    std::shuffle(batch.labels.begin(), batch.labels.end(), rng_);

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t i = 0; i < b; ++i) {
        const bool anomaly = batch.labels[i] == 1;
        const ConceptSpec* from = &target;
        double mix = 1.0;  // weight of `target` when interpolating
        if (tr == Transition::gradual) {
            from = coin(rng_) < progress ? &target : source;
        } else if (tr == Transition::incremental) {
            mix = progress;
        }
        const auto& mean_new = anomaly ? target.anomaly_mean : target.normal_mean;
        const auto& var_new = anomaly ? target.anomaly_var : target.normal_var;
        const auto& mean_src = anomaly ? from->anomaly_mean : from->normal_mean;
        const auto& var_src = anomaly ? from->anomaly_var : from->normal_var;
        const auto& mean_old = anomaly ? source->anomaly_mean : source->normal_mean;
        const auto& var_old = anomaly ? source->anomaly_var : source->normal_var;
        auto row = batch.data.row(i);
        for (std::size_t k = 0; k < d; ++k) {
            double mu = mean_src[k];
            double var = var_src[k];
            if (tr == Transition::incremental) {
                mu = (1.0 - mix) * mean_old[k] + mix * mean_new[k];
                var = (1.0 - mix) * var_old[k] + mix * var_new[k];
            }
            row[k] = mu + std::sqrt(var) * gauss(rng_);
        }
    }

    ++index_;
    if (++in_segment_ >= seg.duration) {
        in_segment_ = 0;
        ++segment_;
    }
    return batch;
}

std::vector<Batch> generate_drift_stream(const DriftScenario& scenario) {
    DriftStreamSource src(scenario);
    std::vector<Batch> out;
    out.reserve(scenario.total_batches());
    while (auto b = src.next()) {
        out.push_back(std::move(*b));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Prequential driver

bool RunResult::has_labels() const noexcept {
    return !labels.empty() &&
           std::all_of(labels.begin(), labels.end(), [](const auto& l) { return !l.empty(); });
}

std::size_t RunResult::major_updates() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        events.begin(), events.end(), [](const AdaptationEvent& e) { return e.kind == EventKind::major; }));
}

RunResult run_prequential(BatchSource& source, const PoolConfig& pool_config,
                          const ModelConfig& model_config, const RunHooks& hooks) {
    auto first = source.next();
    if (!first) {
        throw InvalidArgument("run_prequential: empty stream");
    }
    const std::size_t b = first->data.rows();
    const std::size_t d = first->data.cols();
    ModelPool pool(d, pool_config, model_config);

    RunResult result;
    result.init_batch_index = first->index;
    const ModelId init_id = pool.initialize(first->data);
    result.events.push_back(AdaptationEvent{EventKind::init, init_id, {}, pool.size(), first->index});

    using clock = std::chrono::steady_clock;
    while (auto batch = source.next()) {
        if (batch->data.rows() != b || batch->data.cols() != d) {
            throw DimensionError("run_prequential: batch " + std::to_string(batch->index) +
                                 " is " + std::to_string(batch->data.rows()) + "x" +
                                 std::to_string(batch->data.cols()) + ", expected " +
                                 std::to_string(b) + "x" + std::to_string(d));
        }
        const auto t0 = clock::now();
        auto inference = concept_driven_scores(pool, batch->data);
        const double r_pool = pool_reliability(inference.reliabilities);
        double seconds = std::chrono::duration<double>(clock::now() - t0).count();
        if (hooks.after_scoring) {
            hooks.after_scoring(*batch, pool, inference);
        }
        const auto t1 = clock::now();
        auto event = adapt(pool, batch->data, inference.reliabilities);
        event.batch_index = batch->index;
        seconds += std::chrono::duration<double>(clock::now() - t1).count();
        if (hooks.after_adapt) {
            hooks.after_adapt(*batch, pool, event);
        }

        result.batch_indices.push_back(batch->index);
        result.scores.push_back(std::move(inference.scores));
        result.labels.push_back(batch->labels);
        result.pool_reliability.push_back(r_pool);
        result.pool_size.push_back(pool.size());
        result.events.push_back(std::move(event));
        result.batch_seconds.push_back(seconds);
    }
    return result;
}

}  // namespace arcus
