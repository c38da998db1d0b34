#pragma once

#include "feedsim/feed_app.hpp"
#include "feedsim/network_gen.hpp"
#include "feedsim/sim_core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace feedsim
{
    /// Read-only view over the global tweet log: identity lookup and per-producer order.
    class TweetIndex
    {
    public:
        /// Throws IntegrityError unless seq == position and (t, seq) strictly increases,
        /// and (producer, t) is unique.
        explicit TweetIndex(std::span<const TweetEvent> log);

        const TweetEvent *find(ProducerId producer, VirtualTime t) const;
        const TweetEvent &at(std::uint64_t seq) const { return log_[seq]; }
        std::size_t size() const noexcept { return log_.size(); }
        std::span<const TweetEvent> log() const noexcept { return log_; }

        /// Seqs of one producer's tweets, oldest first.
        std::span<const std::uint64_t> by_producer(ProducerId producer) const;

    private:
        struct KeyHash
        {
            std::size_t operator()(const std::pair<std::uint32_t, std::int64_t> &k) const noexcept
            {
                return std::hash<std::int64_t>{}(k.second * 1000003 + k.first);
            }
        };

        std::span<const TweetEvent> log_;
        std::unordered_map<std::pair<std::uint32_t, std::int64_t>, std::uint64_t, KeyHash> by_key_;
        std::vector<std::vector<std::uint64_t>> by_producer_;
    };

    /// What a single machine applying the global order would have served.
    struct ConsistentTimeline
    {
        ConsumerId consumer{};
        VirtualTime T;
        std::vector<TweetEvent> entries; // newest first, at most n_timeline
    };

    /// Throws ConfigError for an unknown consumer.
    ConsistentTimeline consistent_timeline(ConsumerId consumer, VirtualTime T, const TweetIndex &tweets,
                                           const FollowingNetwork &network, std::size_t n_timeline);

    enum class MissingPosition : std::uint8_t
    {
        Interior, // the response holds entries both newer and older than the tweet
        Head,     // nothing in the response is newer (includes an empty response)
        Tail,     // everything in the response is newer
    };

    struct MissingTweet
    {
        TweetEvent tweet;
        MissingPosition position{};
    };

    /// Response entries resolved against the log, newest first.
    /// Throws IntegrityError for phantom entries (unknown tweet, unfollowed producer,
    /// timestamp after T) and for entries out of order or duplicated.
    std::vector<TweetEvent> resolve_entries(const TimelineResponse &response, const TweetIndex &tweets,
                                            const FollowingNetwork &network);

    /// oracle.entries minus the response's entries, newest first, with position classes.
    std::vector<MissingTweet> find_missing(std::span<const TweetEvent> response_entries,
                                           const ConsistentTimeline &oracle);

    /// For every tweet: the (T, response_id) pairs of responses that served it, ascending.
    class WitnessIndex
    {
    public:
        struct Sighting
        {
            VirtualTime T;
            std::uint64_t response_id = 0;

            auto operator<=>(const Sighting &) const = default;
        };

        WitnessIndex() = default;
        WitnessIndex(std::span<const TimelineResponse> responses, const TweetIndex &tweets);

        std::span<const Sighting> sightings(std::uint64_t tweet_seq) const;
        std::size_t key_count() const noexcept { return key_count_; }

    private:
        std::vector<std::vector<Sighting>> by_tweet_;
        std::size_t key_count_ = 0;
    };

    WitnessIndex build_witness_index(std::span<const TimelineResponse> responses, const TweetIndex &tweets);

    enum class ConflictType : std::uint8_t
    {
        GapWitnessed,
        NewerWitnessedEarlier,
    };

    std::string_view to_string(ConflictType type) noexcept;
    /// Accepts "gap" and "newer_earlier"; throws IntegrityError otherwise.
    ConflictType conflict_type_from_string(std::string_view name);

    struct ConflictRecord
    {
        std::uint64_t response_id = 0;
        ConsumerId consumer{};
        TweetEvent missing;
        ConflictType type{};
        std::uint64_t witness_response_id = 0;
        VirtualTime gap_contribution; // response T minus the missing tweet's t

        bool operator==(const ConflictRecord &) const = default;
    };

    /// Interior gaps need any witness. Tail gaps count as interior when the response
    /// is shorter than n_timeline (the consistent window extends past its last entry)
    /// and are never observable otherwise. Head-missing tweets need a witness served
    /// strictly before the response. The earliest witness is reported.
    std::optional<ConflictRecord> classify(const TimelineResponse &response, const MissingTweet &missing,
                                           const WitnessIndex &witnesses, std::size_t n_timeline);

    /// max(T - t) over the observable conflicts of one response.
    std::optional<VirtualTime> inconsistency_time_gap(const TimelineResponse &response,
                                                      std::span<const ConflictRecord> observable);

    struct DetectionConfig
    {
        /// Fraction of responses (the most recent ones) analyzed.
        double analysis_window_fraction = 0.5;
        std::size_t n_timeline = 20;
    };

    struct ResponseGap
    {
        std::uint64_t response_id = 0;
        ConsumerId consumer{};
        VirtualTime G;

        bool operator==(const ResponseGap &) const = default;
    };

    struct DetectionTotals
    {
        std::uint64_t total_responses = 0;
        std::uint64_t analyzed_responses = 0;
        std::uint64_t first_analyzed_response_id = 0;
        std::uint64_t conflicting_responses = 0;
        std::uint64_t conflict_records = 0;
        std::uint64_t gap_records = 0;
        std::uint64_t newer_earlier_records = 0;
        std::uint64_t missing_tweets = 0;
        std::uint64_t responses_with_missing = 0;

        bool operator==(const DetectionTotals &) const = default;
    };

    struct DetectionResult
    {
        std::vector<ConflictRecord> records;    // by response_id, then newest missing first
        std::vector<ResponseGap> per_response_G; // one per conflicting response, by response_id
        DetectionTotals totals;
    };

    /// Checks `to_check` against witnesses drawn from `witness_corpus`.
    DetectionResult detect(std::span<const TimelineResponse> to_check, std::span<const TimelineResponse> witness_corpus,
                           const TweetIndex &tweets, const FollowingNetwork &network, std::size_t n_timeline);

    /// Validates the logs, keeps the most recent analysis_window_fraction of responses,
    /// and checks them against each other. Throws IntegrityError on corrupt logs.
    DetectionResult detect_all(std::span<const TimelineResponse> responses, std::span<const TweetEvent> tweet_log,
                               const FollowingNetwork &network, const DetectionConfig &config);

    /// Index of the first analyzed response for a corpus of `count` responses.
    std::size_t analysis_window_start(std::size_t count, double fraction);
}
