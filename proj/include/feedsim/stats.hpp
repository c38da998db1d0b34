#pragma once

#include <optional>
#include <span>
#include <vector>

namespace feedsim
{
    /// 1-based ranks; tied values share the average of their positions.
    std::vector<double> average_ranks(std::span<const double> values);

    /// Pearson correlation; nullopt when either side has zero variance or size < 2.
    std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

    /// Spearman rank correlation with average ranks for ties.
    std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

    double mean(std::span<const double> values);
}
