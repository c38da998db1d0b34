#pragma once

#include "feedsim/detector.hpp"
#include "feedsim/feed_app.hpp"
#include "feedsim/network_gen.hpp"
#include "feedsim/sim_core.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace feedsim
{
    /// Virtual time zero corresponds to this wall-clock instant (no zone).
    inline constexpr std::string_view kEpochLabel = "2013-01-31T00:00:00.000000";

    /// "YYYY-MM-DDTHH:MM:SS.ffffff", microsecond precision.
    std::string format_timestamp(VirtualTime t);
    /// Inverse of format_timestamp; throws IntegrityError on malformed input or pre-epoch times.
    VirtualTime parse_timestamp(std::string_view text);

    // Following network + rates, line-delimited JSON:
    //   {"c": <consumer>, "p": [<producers>...]}       one per consumer, ascending
    //   {"producer": <id>, "rate_per_hour": <real>}    one per producer
    //   {"consumer": <id>, "rate_per_hour": <real>}    one per consumer
    void write_network(std::ostream &out, const FollowingNetwork &network, const WorkloadProfile &profile);

    struct NetworkFile
    {
        FollowingNetwork network;
        std::vector<double> producer_rate;
        std::vector<double> consumer_rate;
    };
    NetworkFile read_network(std::istream &in);

    // {"producer_id": "<id>", "t": "<timestamp>", "seq": <int>}
    void write_tweet_log(std::ostream &out, const std::vector<TweetEvent> &tweets);
    std::vector<TweetEvent> read_tweet_log(std::istream &in);

    // {"response_id": <int>, "consumer_id": "<id>", "T": "<timestamp>",
    //  "entries": [{"producer_id": "<id>", "t": "<timestamp>"}, ...]}
    void write_response_log(std::ostream &out, const std::vector<TimelineResponse> &responses);
    std::vector<TimelineResponse> read_response_log(std::istream &in);

    // {"seq": <int>, "fanout_tasks": n, "completed": n, "retries": n,
    //  "max_completion_delay_us": n, "max_lag_us": n}
    void write_traces(std::ostream &out, const std::vector<TweetTrace> &traces);
    std::vector<TweetTrace> read_traces(std::istream &in);

    // {"response_id": <int>, "consumer_id": "<id>", "producer_id": "<id>", "t": "<timestamp>",
    //  "type": "gap"|"newer_earlier", "witness_response_id": <int>, "G_seconds": <real>}
    // G_seconds is this record's T - t.
    void write_conflicts(std::ostream &out, const std::vector<ConflictRecord> &records);
    /// Missing tweets are resolved against `tweets`; unknown ones raise IntegrityError.
    std::vector<ConflictRecord> read_conflicts(std::istream &in, const TweetIndex &tweets);

    void write_detection_totals(std::ostream &out, const DetectionTotals &totals);
    DetectionTotals read_detection_totals(std::istream &in);

    /// Rebuilds per-response G from records (max contribution per response).
    std::vector<ResponseGap> gaps_from_records(const std::vector<ConflictRecord> &records);

    /// Shortest round-trippable decimal for a double.
    std::string format_real(double value);
}
