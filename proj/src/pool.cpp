#include "arcus/pool.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "arcus/error.hpp"

namespace arcus {

InferenceMode parse_inference_mode(std::string_view s) {
    if (s == "concept_driven") return InferenceMode::concept_driven;
    if (s == "single_model") return InferenceMode::single_model;
    throw InvalidArgument("unknown inference mode '" + std::string(s) + "'");
}

MergeMode parse_merge_mode(std::string_view s) {
    if (s == "similarity") return MergeMode::similarity;
    if (s == "always") return MergeMode::always;
    if (s == "never") return MergeMode::never;
    throw InvalidArgument("unknown merge mode '" + std::string(s) + "'");
}

UpdateMode parse_update_mode(std::string_view s) {
    if (s == "drift_aware") return UpdateMode::drift_aware;
    if (s == "incremental") return UpdateMode::incremental;
    throw InvalidArgument("unknown update mode '" + std::string(s) + "'");
}

std::string_view to_string(InferenceMode m) {
    return m == InferenceMode::concept_driven ? "concept_driven" : "single_model";
}

std::string_view to_string(MergeMode m) {
    switch (m) {
        case MergeMode::similarity: return "similarity";
        case MergeMode::always: return "always";
        case MergeMode::never: return "never";
    }
    return "?";
}

std::string_view to_string(UpdateMode m) {
    return m == UpdateMode::drift_aware ? "drift_aware" : "incremental";
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::init: return "init";
        case EventKind::minor: return "minor";
        case EventKind::major: return "major";
    }
    return "?";
}

void PoolConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("alpha must lie in (0, 1)");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw InvalidArgument("gamma must lie in (0, 1)");
    }
    if (epochs_init < 1 || epochs_update < 1) {
        throw InvalidArgument("epoch counts must be >= 1");
    }
}

ModelPool::ModelPool(std::size_t input_dim, PoolConfig pool_config, ModelConfig model_config)
    : input_dim_(input_dim), config_(pool_config), model_config_(model_config) {
    config_.validate();
    // Surfaces bad architecture settings before the first batch arrives.
    (void)encoder_dims(input_dim_, model_config_.latent_dim, model_config_.hidden_layers);
}

std::size_t ModelPool::find(ModelId id) const noexcept {
    const auto it = std::find_if(models_.begin(), models_.end(),
                                 [id](const PooledModel& m) { return m.id == id; });
    return static_cast<std::size_t>(it - models_.begin());
}

PooledModel ModelPool::build_model(const Matrix& batch) {
    const ModelId id = allocate_id();
    const std::uint64_t seed = model_config_.seed * 0x9E3779B97F4A7C15ULL + id;
    auto ae = init_model(input_dim_, model_config_.latent_dim, model_config_.hidden_layers, seed);
    OptimizerState opt(ae.param_count(), model_config_.adam);
    train_epochs(ae, opt, batch, config_.epochs_init);
    const auto stats = compute_stats(reconstruction_scores(ae, batch));
    return PooledModel{id, std::move(ae), std::move(opt), stats, 1};
}

ModelId ModelPool::initialize(const Matrix& batch) {
    if (!models_.empty()) {
        throw InvalidArgument("model pool is already initialized");
    }
    models_.push_back(build_model(batch));
    return models_.back().id;
}

double pool_reliability(std::span<const double> reliabilities) {
    if (reliabilities.empty()) {
        throw InvalidArgument("pool_reliability: empty pool");
    }
    double none_reliable = 1.0;
    double best = 0.0;
    for (double r : reliabilities) {
        none_reliable *= 1.0 - r;
        best = std::max(best, r);
    }
    // 1 - (1 - r) can round below r; the exact value never does.
    return std::max(1.0 - none_reliable, best);
}

std::size_t most_reliable(const ModelPool& pool, std::span<const double> reliabilities) {
    if (reliabilities.empty() || reliabilities.size() != pool.size()) {
        throw DimensionError("most_reliable: reliabilities do not match the pool");
    }
    const auto& models = pool.models();
    std::size_t best = 0;
    for (std::size_t i = 1; i < reliabilities.size(); ++i) {
        if (reliabilities[i] > reliabilities[best] ||
            (reliabilities[i] == reliabilities[best] && models[i].id < models[best].id)) {
            best = i;
        }
    }
    return best;
}

InferenceResult concept_driven_scores(const ModelPool& pool, const Matrix& batch) {
    if (pool.empty()) {
        throw InvalidArgument("concept_driven_scores: empty pool");
    }
    if (batch.cols() != pool.input_dim()) {
        throw DimensionError("concept_driven_scores: batch width does not match the pool");
    }
    const auto& models = pool.models();
    InferenceResult out;
    out.reliabilities.reserve(models.size());
    std::vector<std::vector<double>> z_scores;
    z_scores.reserve(models.size());
    for (const auto& m : models) {
        const auto scores = reconstruction_scores(m.ae, batch);
        out.reliabilities.push_back(model_reliability(compute_stats(scores), m.last_stats));
        z_scores.push_back(standardize(scores));
    }

    out.scores.assign(batch.rows(), 0.0);
    auto accumulate = [&](std::size_t i) {
        const double r = out.reliabilities[i];
        for (std::size_t j = 0; j < out.scores.size(); ++j) {
            out.scores[j] += r * z_scores[i][j];
        }
    };
    if (pool.config().inference_mode == InferenceMode::single_model) {
        accumulate(most_reliable(pool, out.reliabilities));
    } else {
        for (std::size_t i = 0; i < models.size(); ++i) {
            accumulate(i);
        }
    }
    return out;
}

namespace {

Matrix centered(const Matrix& z) {
    Matrix c = z;
    for (std::size_t k = 0; k < z.cols(); ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) {
            mean += z(i, k);
        }
        mean /= static_cast<double>(z.rows());
        for (std::size_t i = 0; i < z.rows(); ++i) {
            c(i, k) -= mean;
        }
    }
    return c;
}

// Squared Frobenius norm of a^T b.
double cross_gram_norm2(const Matrix& a, const Matrix& b) {
    double total = 0.0;
    for (std::size_t p = 0; p < a.cols(); ++p) {
        for (std::size_t q = 0; q < b.cols(); ++q) {
            double dot = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i) {
                dot += a(i, p) * b(i, q);
            }
            total += dot * dot;
        }
    }
    return total;
}

}  // namespace

double cka_similarity(const Matrix& z1, const Matrix& z2) {
    if (z1.rows() != z2.rows()) {
        throw DimensionError("cka_similarity: row counts differ");
    }
    if (z1.rows() < 2) {
        throw InvalidArgument("cka_similarity: need at least two rows");
    }
    const Matrix c1 = centered(z1);
    const Matrix c2 = centered(z2);
    auto is_zero = [](const Matrix& m) {
        return std::all_of(m.values().begin(), m.values().end(), [](double v) { return v == 0.0; });
    };
    if (is_zero(c1) || is_zero(c2)) {
        throw DegenerateRepresentation("cka_similarity: representation is constant over the batch");
    }
    const double cross = cross_gram_norm2(c1, c2);
    const double self1 = std::sqrt(cross_gram_norm2(c1, c1));
    const double self2 = std::sqrt(cross_gram_norm2(c2, c2));
    return std::clamp(cross / (self1 * self2), 0.0, 1.0);
}

PooledModel merge_models(const PooledModel& m1, const PooledModel& m2, ModelId new_id) {
    if (!m1.ae.same_architecture(m2.ae)) {
        throw DimensionError("merge_models: architectures differ");
    }
    const double n1 = static_cast<double>(m1.num_batches);
    const double n2 = static_cast<double>(m2.num_batches);
    const double total = n1 + n2;
    DenseAutoencoder ae = m1.ae;
    auto p = ae.parameters();
    const auto p2 = m2.ae.parameters();
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = (n1 * p[i] + n2 * p2[i]) / total;
    }
    const ScoreStats& stats = m2.num_batches > m1.num_batches ? m2.last_stats : m1.last_stats;
    return PooledModel{new_id, std::move(ae), m1.opt.fresh(), stats,
                       m1.num_batches + m2.num_batches};
}

namespace {

double similarity_or_zero(const Matrix& a, const Matrix& b) {
    try {
        return cka_similarity(a, b);
    } catch (const DegenerateRepresentation&) {
        return 0.0;
    }
}

}  // namespace

CompactionResult compact(ModelPool& pool, PooledModel new_model, const Matrix& batch) {
    auto& models = pool.models();
    const MergeMode mode = pool.config().merge_mode;
    const double gamma = pool.config().gamma;

    CompactionResult result;
    if (mode != MergeMode::never && !models.empty()) {
        std::vector<Matrix> existing;
        existing.reserve(models.size());
        for (const auto& m : models) {
            existing.push_back(latent(m.ae, batch));
        }
        Matrix z_new = latent(new_model.ae, batch);
        while (!models.empty()) {
            std::size_t best = models.size();
            double best_sim = -1.0;
            for (std::size_t i = 0; i < models.size(); ++i) {
                const double sim = similarity_or_zero(z_new, existing[i]);
                if (sim > best_sim) {
                    best_sim = sim;
                    best = i;
                }
            }
            if (mode == MergeMode::similarity && best_sim < gamma) {
                break;
            }
            result.merged.push_back(models[best].id);
            new_model = merge_models(new_model, models[best], pool.allocate_id());
            const auto offset = static_cast<std::ptrdiff_t>(best);
            models.erase(models.begin() + offset);
            existing.erase(existing.begin() + offset);
            z_new = latent(new_model.ae, batch);
        }
    }
    // The average of two networks scores differently from either parent, so
    // its reference statistics are taken on the batch it was formed with.
    if (!result.merged.empty()) {
        new_model.last_stats = compute_stats(reconstruction_scores(new_model.ae, batch));
    }
    result.model = new_model.id;
    models.push_back(std::move(new_model));
    return result;
}

AdaptationEvent adapt(ModelPool& pool, const Matrix& batch, std::span<const double> reliabilities) {
    if (reliabilities.size() != pool.size()) {
        throw DimensionError("adapt: reliabilities do not match the pool");
    }
    const auto& cfg = pool.config();
    const double r_pool = pool_reliability(reliabilities);

    AdaptationEvent ev;
    if (cfg.update_mode == UpdateMode::incremental || r_pool >= cfg.alpha) {
        auto& m = pool.models()[most_reliable(pool, reliabilities)];
        train_epochs(m.ae, m.opt, batch, cfg.epochs_update);
        ++m.num_batches;
        m.last_stats = compute_stats(reconstruction_scores(m.ae, batch));
        ev.kind = EventKind::minor;
        ev.model = m.id;
    } else {
        auto fresh = pool.build_model(batch);
        auto res = compact(pool, std::move(fresh), batch);
        ev.kind = EventKind::major;
        ev.model = res.model;
        ev.merged = std::move(res.merged);
    }
    ev.pool_size = pool.size();
    return ev;
}

}  // namespace arcus
