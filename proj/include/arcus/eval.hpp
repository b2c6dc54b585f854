#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "arcus/pool.hpp"
#include "arcus/stream.hpp"

namespace arcus {

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Computed from mid-ranks in O(n log n).
double auc(std::span<const double> scores, std::span<const int> labels);

/// AUC over all scored points of a run, batches concatenated.
double stream_auc(const RunResult& result);

/// Per-batch AUC; NaN for batches whose labels are all one class.
std::vector<double> batch_aucs(const RunResult& result);

/// `batch_index,point_index,score[,label]`, scores with 17 significant digits.
void write_scores_csv(std::ostream& out, const RunResult& result);

/// `batch_index,pool_reliability,pool_size,event`. The initialization batch
/// comes first with an empty reliability field.
void write_trace_csv(std::ostream& out, const RunResult& result);

/// One configuration compared by the benchmark.
struct Variant {
    std::string name;
    PoolConfig pool;
};

/// "arcus" and the single-model "incremental" baseline, plus, with
/// `ablations`, "single_model", "always_merge" and "no_merge".
std::vector<Variant> benchmark_variants(const PoolConfig& base, bool ablations);

struct BenchmarkConfig {
    ModelConfig model;
    std::vector<Variant> variants;
    std::size_t seeds = 5;
};

struct BenchmarkRow {
    std::string variant;
    std::uint64_t seed = 0;
    double auc = 0.0;
    double mean_pool_size = 0.0;
    std::size_t max_pool_size = 0;
    std::size_t major_updates = 0;
    double mean_batch_seconds = 0.0;
};

struct MeanError {
    double mean = 0.0;
    double std_error = 0.0;
};

MeanError mean_and_std_error(std::span<const double> values);

struct VariantSummary {
    std::string variant;
    MeanError auc;
    MeanError mean_pool_size;
    MeanError max_pool_size;
    MeanError major_updates;
    MeanError mean_batch_seconds;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;
    std::vector<VariantSummary> summaries;

    const VariantSummary& summary(const std::string& variant) const;
};

/// Runs every variant on the same generated stream for each seed offset
/// 0..seeds-1. The offset is added to both the scenario seed and the model seed.
BenchmarkReport run_benchmark(const DriftScenario& scenario, const BenchmarkConfig& config);

/// Machine-readable rows:
/// `variant,seed,auc,mean_pool_size,max_pool_size,major_updates,mean_batch_seconds`.
void write_report_csv(std::ostream& out, const BenchmarkReport& report);

/// Aligned per-variant summary table (mean +- standard error).
void write_report_table(std::ostream& out, const BenchmarkReport& report);

}  // namespace arcus
