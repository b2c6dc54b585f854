#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace arcus {

/// Summary of one model's anomaly scores on one batch.
struct ScoreStats {
    double min = 0.0;
    double max = 0.0;
    double avg = 0.0;
    std::size_t count = 0;

    friend bool operator==(const ScoreStats&, const ScoreStats&) = default;
};

ScoreStats compute_stats(std::span<const double> scores);

/// Hoeffding-derived reliability of a model whose scores moved from `last`
/// (the batch it was last updated on) to `curr`:
///
///     exp(-b * eps^2 / (s_max - s_min)^2)
///
/// with eps the difference of the means and the range taken over both
/// batches. Both stats must come from batches of the same size b.
double model_reliability(const ScoreStats& curr, const ScoreStats& last);

/// Z-scores with the population standard deviation. A constant input maps to zeros.
std::vector<double> standardize(std::span<const double> scores);

}  // namespace arcus
