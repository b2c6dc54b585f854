#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "arcus/matrix.hpp"
#include "arcus/pool.hpp"

namespace arcus {

struct Batch {
    Matrix data;
    /// Empty when the stream carries no ground truth; otherwise one 0/1 per row.
    std::vector<int> labels;
    std::size_t index = 0;

    bool has_labels() const noexcept { return !labels.empty(); }
};

/// Sequential producer of equally sized batches.
class BatchSource {
public:
    virtual ~BatchSource() = default;
    /// Next batch, or nullopt once the stream is exhausted.
    virtual std::optional<Batch> next() = 0;
};

/// Replays an in-memory list of batches.
class VectorSource final : public BatchSource {
public:
    explicit VectorSource(std::vector<Batch> batches) : batches_(std::move(batches)) {}
    std::optional<Batch> next() override;

private:
    std::vector<Batch> batches_;
    std::size_t pos_ = 0;
};

/// Reads a headered, comma-separated file in blocks of `batch_size` rows.
/// A trailing partial block is dropped.
class CsvBatchSource final : public BatchSource {
public:
    CsvBatchSource(const std::filesystem::path& path, std::size_t batch_size,
                   std::optional<std::string> label_column = std::nullopt);

    std::optional<Batch> next() override;

    std::size_t dim() const noexcept { return feature_cols_.size(); }
    /// Rows read but not emitted because the final block was short.
    std::size_t dropped_rows() const noexcept { return dropped_; }

private:
    std::ifstream in_;
    std::string path_;
    std::size_t batch_size_;
    std::vector<std::size_t> feature_cols_;
    std::optional<std::size_t> label_col_;
    std::size_t n_cols_ = 0;
    std::size_t line_no_ = 1;
    std::size_t next_index_ = 0;
    std::size_t dropped_ = 0;
};

/// Convenience wrapper collecting every batch of a CSV file.
std::vector<Batch> read_csv_stream(const std::filesystem::path& path, std::size_t batch_size,
                                   std::optional<std::string> label_column = std::nullopt);

/// Writes batches as CSV with columns f0..f{d-1} and, if labelled, `label`.
/// Values use 17 significant digits so they read back bit-exact.
void write_stream_csv(std::ostream& out, const std::vector<Batch>& batches);

enum class Transition { abrupt, gradual, incremental };

/// Diagonal Gaussians for the normal and anomalous points of one concept.
struct ConceptSpec {
    std::vector<double> normal_mean;
    std::vector<double> normal_var;
    std::vector<double> anomaly_mean;
    std::vector<double> anomaly_var;
};

struct Segment {
    std::size_t concept_index = 0;
    std::size_t duration = 1;  ///< In batches.
    /// How the stream moves into this segment from the previous one. Ignored
    /// for the first segment.
    Transition transition = Transition::abrupt;
};

struct DriftScenario {
    std::vector<ConceptSpec> concepts;
    std::vector<Segment> schedule;
    double anomaly_ratio = 0.01;
    std::size_t dim = 0;
    std::size_t batch_size = 512;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t total_batches() const noexcept;
    /// Anomalies per batch: b - round(b * (1 - anomaly_ratio)).
    std::size_t anomalies_per_batch() const noexcept;
};

/// Parses a JSON scenario file. Unknown keys are rejected. Any per-feature
/// vector may be written as a single number, meaning that value for all features.
DriftScenario load_scenario(const std::filesystem::path& path);
DriftScenario parse_scenario(const std::string& json_text);

/// Lazily generates the batches described by a scenario.
class DriftStreamSource final : public BatchSource {
public:
    explicit DriftStreamSource(DriftScenario scenario);
    std::optional<Batch> next() override;

private:
    DriftScenario sc_;
    std::mt19937_64 rng_;
    std::size_t segment_ = 0;
    std::size_t in_segment_ = 0;
    std::size_t index_ = 0;
};

std::vector<Batch> generate_drift_stream(const DriftScenario& scenario);

/// Everything a prequential run records. Traces hold one entry per scored batch.
struct RunResult {
    std::size_t init_batch_index = 0;
    std::vector<std::size_t> batch_indices;
    std::vector<std::vector<double>> scores;
    /// Empty inner vectors when the stream is unlabelled.
    std::vector<std::vector<int>> labels;
    std::vector<double> pool_reliability;
    std::vector<std::size_t> pool_size;
    /// Init event first, then one event per scored batch.
    std::vector<AdaptationEvent> events;
    std::vector<double> batch_seconds;

    std::size_t scored_batches() const noexcept { return scores.size(); }
    bool has_labels() const noexcept;
    std::size_t major_updates() const noexcept;
};

/// Optional observers, called synchronously by run_prequential.
struct RunHooks {
    /// After a batch is scored and before the pool adapts to it.
    std::function<void(const Batch&, const ModelPool&, const InferenceResult&)> after_scoring;
    /// After the pool adapted to a batch.
    std::function<void(const Batch&, const ModelPool&, const AdaptationEvent&)> after_adapt;
};

/// Initializes a pool from the first batch, then for every further batch
/// scores it with the current pool and only afterwards adapts the pool to it.
RunResult run_prequential(BatchSource& source, const PoolConfig& pool_config,
                          const ModelConfig& model_config, const RunHooks& hooks = {});

}  // namespace arcus
