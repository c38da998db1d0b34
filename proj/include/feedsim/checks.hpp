#pragma once

#include "feedsim/analytics.hpp"
#include "feedsim/detector.hpp"
#include "feedsim/feed_app.hpp"
#include "feedsim/network_gen.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace feedsim
{
    struct CheckResult
    {
        std::string name;
        bool pass = false;
        std::string detail;
    };

    std::string format_check(const CheckResult &check);

    /// Thresholds shared by `feedsim repro` and the acceptance suite.
    namespace thresholds
    {
        inline constexpr double workload_mean_tolerance = 0.10;
        inline constexpr double workload_independence = 0.10;
        inline constexpr double strong_correlation = 0.5;
        inline constexpr double weak_correlation = 0.2;
        inline constexpr std::size_t min_nonempty_buckets = 5;
        inline constexpr double tail_decay_spearman = -0.8;
    }

    CheckResult check_workload(const ValidationReport &report);

    CheckResult check_zero_conflicts(const DetectionResult &result);

    struct GapBoundViolation
    {
        std::uint64_t response_id = 0;
        std::uint64_t tweet_seq = 0;
        VirtualTime G;
        VirtualTime bound;
    };

    /// Every record's T - t against its tweet's traced completion delay plus lag.
    std::vector<GapBoundViolation> gap_bound_violations(const DetectionResult &result,
                                                        std::span<const TweetTrace> traces);
    CheckResult check_gap_bound(const DetectionResult &result, std::span<const TweetTrace> traces);

    struct TailShape
    {
        std::size_t nonempty_buckets = 0;
        std::int64_t mode_bucket = 0;
        std::int64_t last_bucket = 0;
        std::optional<double> decay_spearman; // bucket index vs count, mode..last inclusive
        bool decaying = false;
    };

    /// Monotone-decaying tail: enough nonempty buckets, counts falling from the mode
    /// onward (empty buckets count as zero), and the last bucket below the mode.
    TailShape tail_shape(const GapHistogram &histogram);

    CheckResult check_anomaly_regime(const AnalyticsReport &report);

    CheckResult check_correlations(const std::array<CorrelationStudy, 4> &studies);
}
