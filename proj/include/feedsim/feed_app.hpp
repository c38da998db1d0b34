#pragma once

#include "feedsim/distribution.hpp"
#include "feedsim/kv_store.hpp"
#include "feedsim/network_gen.hpp"
#include "feedsim/sim_core.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace feedsim
{
    /// A publish event. (t, seq) is the global order; (producer, t) is unique per tweet.
    struct TweetEvent
    {
        ProducerId producer{};
        VirtualTime t;
        std::uint64_t seq = 0;

        bool operator==(const TweetEvent &) const = default;
    };

    /// Strictly newer in the global order.
    constexpr bool newer(const TweetEvent &a, const TweetEvent &b) noexcept
    {
        return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }

    /// Materialized view: newest-first, at most n_timeline entries.
    struct TimelineValue
    {
        std::vector<TweetEvent> entries;

        bool operator==(const TimelineValue &) const = default;
    };

    /// Inserts in sorted position (no-op if already present) and truncates to `limit`.
    TimelineValue insert_entry(TimelineValue value, const TweetEvent &tweet, std::size_t limit);

    /// A served entry as it appears on the wire: no sequence number.
    struct ResponseEntry
    {
        ProducerId producer{};
        VirtualTime t;

        bool operator==(const ResponseEntry &) const = default;
    };

    struct TimelineResponse
    {
        std::uint64_t response_id = 0;
        ConsumerId consumer{};
        VirtualTime T;
        std::vector<ResponseEntry> entries; // newest first
        std::uint32_t replica_served = 0;   // not serialized

        bool operator==(const TimelineResponse &other) const
        {
            return response_id == other.response_id && consumer == other.consumer && T == other.T &&
                   entries == other.entries;
        }
    };

    struct FanoutConfig
    {
        DelayDistribution service = DelayDistribution::exponential(20.0);
        /// Multiplies the service-time mean.
        double delay_scale = 1.0;
        /// Maximum in-flight timeline updates; 0 means unlimited.
        std::uint32_t concurrency_cap = 0;
        double retry_backoff_ms = 10.0;

        DelayDistribution effective_service() const { return service.scaled(delay_scale); }

        bool operator==(const FanoutConfig &) const = default;
    };

    /// Per-tweet fan-out bookkeeping used to bound observed gaps.
    struct TweetTrace
    {
        std::uint64_t seq = 0;
        std::uint32_t fanout_tasks = 0;
        std::uint32_t completed = 0;
        std::uint32_t retries = 0;
        /// Latest commit of any of this tweet's timeline writes, relative to its timestamp.
        VirtualTime max_completion_delay;
        /// Largest replication lag sampled for any of this tweet's timeline writes.
        VirtualTime max_lag;

        VirtualTime gap_bound() const { return max_completion_delay + max_lag; }
    };

    using TimelineStore = ReplicatedStore<std::uint32_t, TimelineValue>;

    /// Feed-following frontend: one timestamping writer, asynchronous fan-out into
    /// per-consumer timeline views held in the replicated store, and uncached reads.
    class FeedApp
    {
    public:
        FeedApp(EventLoop &loop, const FollowingNetwork &network, StoreConfig store_config, FanoutConfig fanout,
                std::size_t n_timeline, std::uint64_t seed);

        FeedApp(const FeedApp &) = delete;
        FeedApp &operator=(const FeedApp &) = delete;

        /// Timestamps the tweet and enqueues one timeline update per follower.
        /// Throws ConfigError for an unknown producer.
        const TweetEvent &post_tweet(ProducerId producer);

        /// Enqueues a read-modify-conditional-write of the consumer's timeline.
        /// Throws ConfigError if the consumer does not follow the tweet's producer.
        void apply_timeline_update(ConsumerId consumer, const TweetEvent &tweet);

        /// Reads the consumer's timeline from a random replica and logs the response.
        const TimelineResponse &query_timeline(ConsumerId consumer);

        const std::vector<TweetEvent> &tweet_log() const noexcept { return tweets_; }
        const std::vector<TimelineResponse> &response_log() const noexcept { return responses_; }
        const std::vector<TweetTrace> &tweet_traces() const noexcept { return traces_; }

        const TimelineStore &store() const noexcept { return store_; }
        std::size_t n_timeline() const noexcept { return n_timeline_; }
        std::uint64_t cas_failures() const noexcept { return cas_failures_; }
        std::uint64_t timeline_writes() const noexcept { return timeline_writes_; }
        std::size_t queued_updates() const noexcept { return queue_.size(); }
        std::uint32_t busy_workers() const noexcept { return busy_; }

    private:
        struct Task
        {
            ConsumerId consumer;
            std::uint64_t tweet_seq;
        };

        void pump();
        void start(const Task &task);
        void attempt(const Task &task, const std::optional<TimelineValue> &expected);
        void finish(const Task &task, const WriteAck &ack);

        EventLoop &loop_;
        const FollowingNetwork &network_;
        FanoutConfig fanout_;
        DelayDistribution service_;
        std::size_t n_timeline_;
        TimelineStore store_;
        Rng order_rng_;
        Rng service_rng_;

        std::vector<TweetEvent> tweets_;
        std::vector<TweetTrace> traces_;
        std::vector<TimelineResponse> responses_;
        std::deque<Task> queue_;
        std::uint32_t busy_ = 0;
        bool pumping_ = false;
        std::uint64_t cas_failures_ = 0;
        std::uint64_t timeline_writes_ = 0;
    };

    struct RunStats
    {
        std::uint64_t tweets = 0;
        std::uint64_t responses = 0;
        std::uint64_t events_processed = 0;
        std::uint64_t timeline_writes = 0;
        std::uint64_t cas_failures = 0;
        double virtual_seconds = 0;
        double max_lag_ms = 0;
        double mean_lag_ms = 0;
    };

    struct RunArtifacts
    {
        std::vector<TweetEvent> tweet_log;
        std::vector<TimelineResponse> response_log;
        std::vector<TweetTrace> traces;
        RunStats stats;
    };

    struct ExperimentSettings
    {
        StoreConfig store;
        FanoutConfig fanout;
        std::size_t n_timeline = 20;
        VirtualTime duration = VirtualTime::from_hours(2.0);
        std::uint64_t seed = 0;
    };

    /// Poisson tweet and query arrivals per entity over [0, duration]; pending fan-out
    /// and replication are drained afterwards so traces are complete.
    RunArtifacts run_experiment(const FollowingNetwork &network, const WorkloadProfile &profile,
                                const ExperimentSettings &settings);
}
