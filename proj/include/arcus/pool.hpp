#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "arcus/matrix.hpp"
#include "arcus/nn.hpp"
#include "arcus/scoring.hpp"

namespace arcus {

using ModelId = std::uint64_t;

/// An autoencoder together with the bookkeeping the pool needs about it.
struct PooledModel {
    ModelId id = 0;
    DenseAutoencoder ae;
    OptimizerState opt;
    /// Scores of `ae` on the batch it was last updated with.
    ScoreStats last_stats;
    /// Number of batches that went into this model (N_M). Always >= 1.
    std::uint64_t num_batches = 1;
};

enum class InferenceMode { concept_driven, single_model };
enum class MergeMode { similarity, always, never };
/// `incremental` is the single-model baseline: one model, only minor updates.
enum class UpdateMode { drift_aware, incremental };

InferenceMode parse_inference_mode(std::string_view s);
MergeMode parse_merge_mode(std::string_view s);
UpdateMode parse_update_mode(std::string_view s);
std::string_view to_string(InferenceMode m);
std::string_view to_string(MergeMode m);
std::string_view to_string(UpdateMode m);

/// Architecture and optimizer settings for every model the pool creates.
struct ModelConfig {
    std::size_t latent_dim = 4;
    int hidden_layers = 2;
    AdamOptions adam{};
    /// Base seed; each new model is initialized from this seed and its id.
    std::uint64_t seed = 0;
};

struct PoolConfig {
    double alpha = 0.95;
    double gamma = 0.8;
    int epochs_init = 5;
    int epochs_update = 1;
    InferenceMode inference_mode = InferenceMode::concept_driven;
    MergeMode merge_mode = MergeMode::similarity;
    UpdateMode update_mode = UpdateMode::drift_aware;

    /// Throws InvalidArgument on out-of-range thresholds or epoch counts.
    void validate() const;
};

/// The dynamic set of models plus the thresholds that govern it.
class ModelPool {
public:
    ModelPool(std::size_t input_dim, PoolConfig pool_config, ModelConfig model_config);

    const PoolConfig& config() const noexcept { return config_; }
    const ModelConfig& model_config() const noexcept { return model_config_; }
    std::size_t input_dim() const noexcept { return input_dim_; }

    const std::vector<PooledModel>& models() const noexcept { return models_; }
    std::vector<PooledModel>& models() noexcept { return models_; }
    std::size_t size() const noexcept { return models_.size(); }
    bool empty() const noexcept { return models_.empty(); }

    /// Index of the model with the given id, or size() if absent.
    std::size_t find(ModelId id) const noexcept;

    ModelId allocate_id() noexcept { return next_id_++; }

    /// Fresh model trained `epochs_init` epochs on `batch`, N = 1, stats on `batch`.
    PooledModel build_model(const Matrix& batch);

    /// Seeds the pool with one model built from the first batch.
    ModelId initialize(const Matrix& batch);

private:
    std::size_t input_dim_;
    PoolConfig config_;
    ModelConfig model_config_;
    std::vector<PooledModel> models_;
    ModelId next_id_ = 0;
};

/// 1 - prod(1 - r_i).
double pool_reliability(std::span<const double> reliabilities);

struct InferenceResult {
    std::vector<double> scores;
    /// One per pool member, in pool order.
    std::vector<double> reliabilities;
};

/// Reliability-weighted sum of each member's standardized reconstruction
/// scores. In single_model mode only the most reliable member contributes.
InferenceResult concept_driven_scores(const ModelPool& pool, const Matrix& batch);

/// Linear-kernel CKA between two representations of the same rows. Columns
/// are centered first. Throws DegenerateRepresentation when either side is
/// identically zero after centering.
double cka_similarity(const Matrix& z1, const Matrix& z2);

/// N-weighted parameter average. Optimizer moments start fresh; last_stats
/// come from the parent with more batches (m1 on ties).
PooledModel merge_models(const PooledModel& m1, const PooledModel& m2, ModelId new_id);

/// Argmax of `reliabilities`, ties going to the lowest model id.
std::size_t most_reliable(const ModelPool& pool, std::span<const double> reliabilities);

enum class EventKind { init, minor, major };
std::string_view to_string(EventKind k);

struct AdaptationEvent {
    EventKind kind = EventKind::minor;
    /// Updated model (minor) or the final new model after compaction (major).
    ModelId model = 0;
    /// Ids of pre-existing models absorbed during compaction.
    std::vector<ModelId> merged;
    std::size_t pool_size = 0;
    /// Stream position of the batch that triggered the event.
    std::size_t batch_index = 0;
};

/// Updates the pool with the batch it has just scored. `reliabilities` must
/// be the ones concept_driven_scores returned for this batch and pool.
AdaptationEvent adapt(ModelPool& pool, const Matrix& batch, std::span<const double> reliabilities);

struct CompactionResult {
    ModelId model = 0;
    std::vector<ModelId> merged;
};

/// Adds `new_model` to the pool, first merging it into every existing model
/// whose latent representation of `batch` is at least gamma-similar to its
/// own (most similar first, re-encoding after each merge). A model that
/// absorbed others gets its last_stats recomputed on `batch`.
CompactionResult compact(ModelPool& pool, PooledModel new_model, const Matrix& batch);

}  // namespace arcus
