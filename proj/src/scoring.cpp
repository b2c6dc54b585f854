#include "arcus/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "arcus/error.hpp"

namespace arcus {

ScoreStats compute_stats(std::span<const double> scores) {
    if (scores.empty()) {
        throw InvalidArgument("compute_stats: empty score vector");
    }
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) {
        sum += s;
    }
    ScoreStats st{*lo, *hi, sum / static_cast<double>(scores.size()), scores.size()};
    // Rounding in the mean can nudge it a hair outside [min, max].
    st.avg = std::clamp(st.avg, st.min, st.max);
    return st;
}

double model_reliability(const ScoreStats& curr, const ScoreStats& last) {
    if (curr.count != last.count) {
        throw DimensionError("model_reliability: batch sizes differ (" +
                             std::to_string(curr.count) + " vs " + std::to_string(last.count) + ")");
    }
    if (curr.count == 0) {
        throw InvalidArgument("model_reliability: empty statistics");
    }
    const double eps = std::abs(curr.avg - last.avg);
    if (eps == 0.0) {
        return 1.0;
    }
    const double range = std::max(curr.max, last.max) - std::min(curr.min, last.min);
    const double b = static_cast<double>(curr.count);
    return std::exp(-b * eps * eps / (range * range));
}

std::vector<double> standardize(std::span<const double> scores) {
    if (scores.empty()) {
        throw InvalidArgument("standardize: empty score vector");
    }
    const double n = static_cast<double>(scores.size());
    double mean = 0.0;
    for (double s : scores) {
        mean += s;
    }
    mean /= n;
    double var = 0.0;
    for (double s : scores) {
        var += (s - mean) * (s - mean);
    }
    const double sd = std::sqrt(var / n);
    std::vector<double> z(scores.size(), 0.0);
    if (sd == 0.0) {
        return z;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        z[i] = (scores[i] - mean) / sd;
    }
    return z;
}

}  // namespace arcus
