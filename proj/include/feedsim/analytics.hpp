#pragma once

#include "feedsim/detector.hpp"
#include "feedsim/feed_app.hpp"
#include "feedsim/network_gen.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace feedsim
{
    /// Conflicting responses / analyzed responses. Throws std::domain_error when nothing was analyzed.
    double inconsistency_rate(const DetectionResult &result);

    struct GapHistogram
    {
        VirtualTime bucket_width = VirtualTime::from_seconds(100.0);
        std::map<std::int64_t, std::uint64_t> counts; // bucket k covers [k*w, (k+1)*w)

        std::uint64_t total() const;
    };

    /// Buckets each conflicting response's G. Throws std::invalid_argument for a non-positive width.
    GapHistogram gap_histogram(const DetectionResult &result, double bucket_width_s = 100.0);

    struct GapSummary
    {
        std::uint64_t count = 0;
        double mean_G_s = 0.0;
        std::uint64_t count_G_above_1s = 0;
        double max_G_s = 0.0;
    };

    GapSummary summarize_gaps(const DetectionResult &result);

    /// Conflict records per producer of the missing tweet; producers with none are absent.
    std::map<std::uint32_t, std::uint64_t> attribute_to_producers(const DetectionResult &result,
                                                                 const FollowingNetwork &network);

    /// Realized activity: tweets per producer over the whole run, queries per consumer
    /// inside the analysis window.
    struct ActivityCounts
    {
        std::vector<std::uint64_t> producer_tweets;
        std::vector<std::uint64_t> consumer_queries;
    };

    ActivityCounts count_activity(std::span<const TweetEvent> tweets, std::span<const TimelineResponse> responses,
                                  const FollowingNetwork &network, std::size_t first_analyzed);

    struct CorrelationStudy
    {
        std::string name;
        std::string x_label;
        std::string y_label;
        std::vector<std::pair<double, double>> points;
        std::optional<double> spearman;
        /// Plotted on log-log axes: only points with x > 0 and y > 0 are kept.
        bool log_log = true;
        bool degenerate = false;
        std::size_t population = 0; // entities before the positivity filter
    };

    /// Builds a study from raw per-entity (x, y) pairs. Fewer than three distinct x values,
    /// or an undefined coefficient, marks it degenerate.
    CorrelationStudy make_study(std::string name, std::string x_label, std::string y_label,
                                std::span<const double> x, std::span<const double> y, bool log_log = true);

    /// Producer followers / producer tweets vs conflicts caused; consumer follows /
    /// consumer queries vs conflicts encountered.
    std::array<CorrelationStudy, 4> correlation_studies(const DetectionResult &result, const FollowingNetwork &network,
                                                        const ActivityCounts &activity);

    struct AnalyticsReport
    {
        DetectionTotals totals;
        std::optional<double> inconsistency_rate;
        GapHistogram histogram;
        GapSummary gaps;
        std::map<std::uint32_t, std::uint64_t> producer_conflicts;
        std::array<CorrelationStudy, 4> studies;
    };

    AnalyticsReport analyze(const DetectionResult &result, const FollowingNetwork &network,
                            const ActivityCounts &activity, double bucket_width_s = 100.0);

    /// Writes report_totals.json, gap_histogram.csv, study_<name>.csv and summary.txt.
    /// Output depends only on the report.
    void emit_report(const AnalyticsReport &report, const std::filesystem::path &out_dir);
}
