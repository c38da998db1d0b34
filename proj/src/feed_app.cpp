#include "feedsim/feed_app.hpp"

#include "feedsim/errors.hpp"

#include <algorithm>
#include <functional>
#include <memory>

#include <fmt/core.h>

namespace feedsim
{
    TimelineValue insert_entry(TimelineValue value, const TweetEvent &tweet, std::size_t limit)
    {
        auto &entries = value.entries;
        auto pos = std::find_if(entries.begin(), entries.end(),
                                [&](const TweetEvent &e) { return !newer(e, tweet); });
        if (pos != entries.end() && *pos == tweet)
            return value;
        entries.insert(pos, tweet);
        if (entries.size() > limit)
            entries.resize(limit);
        return value;
    }

    FeedApp::FeedApp(EventLoop &loop, const FollowingNetwork &network, StoreConfig store_config, FanoutConfig fanout,
                     std::size_t n_timeline, std::uint64_t seed)
        : loop_(loop),
          network_(network),
          fanout_(fanout),
          service_(fanout.effective_service()),
          n_timeline_(n_timeline),
          store_(loop, store_config, rng_stream(seed, "store.lag"), rng_stream(seed, "store.read"),
                 rng_stream(seed, "store.home")),
          order_rng_(rng_stream(seed, "fanout.order")),
          service_rng_(rng_stream(seed, "fanout.service"))
    {
        if (n_timeline_ < 1)
            throw ConfigError("n_timeline must be >= 1");
        if (service_.mean_ms < 0.0 || fanout_.retry_backoff_ms <= 0.0)
            throw ConfigError("fan-out service time must be >= 0 and retry backoff > 0");
    }

    const TweetEvent &FeedApp::post_tweet(ProducerId producer)
    {
        if (index(producer) >= network_.n_producers())
            throw ConfigError(fmt::format("unknown producer {}", index(producer)));

        const TweetEvent &tweet = tweets_.emplace_back(TweetEvent{producer, loop_.now(), tweets_.size()});
        TweetTrace &trace = traces_.emplace_back();
        trace.seq = tweet.seq;

        const auto followers = network_.followers(producer);
        std::vector<ConsumerId> order(followers.begin(), followers.end());
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[order_rng_.below(i)]);
        trace.fanout_tasks = static_cast<std::uint32_t>(order.size());
        for (ConsumerId c : order)
            queue_.push_back(Task{c, tweet.seq});
        pump();
        return tweets_.back();
    }

    void FeedApp::apply_timeline_update(ConsumerId consumer, const TweetEvent &tweet)
    {
        if (!network_.is_following(consumer, tweet.producer))
            throw ConfigError(
                fmt::format("consumer {} does not follow producer {}", index(consumer), index(tweet.producer)));
        if (tweet.seq >= tweets_.size() || !(tweets_[tweet.seq] == tweet))
            throw ConfigError("timeline update for a tweet that was never posted");
        ++traces_[tweet.seq].fanout_tasks;
        queue_.push_back(Task{consumer, tweet.seq});
        pump();
    }

    void FeedApp::pump()
    {
        if (pumping_)
            return;
        pumping_ = true;
        while (!queue_.empty() && (fanout_.concurrency_cap == 0 || busy_ < fanout_.concurrency_cap))
        {
            const Task task = queue_.front();
            queue_.pop_front();
            start(task);
        }
        pumping_ = false;
    }

    void FeedApp::start(const Task &task)
    {
        ++busy_;
        const VirtualTime service = service_.always_zero() ? VirtualTime{} : service_.sample(service_rng_);
        const auto key = index(task.consumer);
        if (service.micros == 0)
        {
            attempt(task, store_.authoritative_read(key));
            return;
        }
        // The worker reads the view now and writes it back when its service time elapses.
        loop_.schedule_after(service, EventKind::FanoutStep,
                             [this, task, expected = store_.authoritative_read(key)] { attempt(task, expected); });
    }

    void FeedApp::attempt(const Task &task, const std::optional<TimelineValue> &expected)
    {
        const TweetEvent &tweet = tweets_[task.tweet_seq];
        const auto key = index(task.consumer);
        ++timeline_writes_;
        auto outcome =
            store_.conditional_write(key, expected, insert_entry(expected.value_or(TimelineValue{}), tweet, n_timeline_));
        if (outcome.ok)
        {
            finish(task, outcome.ack);
            return;
        }
        ++cas_failures_;
        ++traces_[task.tweet_seq].retries;
        loop_.schedule_after(VirtualTime::from_millis(fanout_.retry_backoff_ms), EventKind::RetryWrite,
                             [this, task] { attempt(task, store_.authoritative_read(index(task.consumer))); });
    }

    void FeedApp::finish(const Task &task, const WriteAck &ack)
    {
        TweetTrace &trace = traces_[task.tweet_seq];
        ++trace.completed;
        trace.max_completion_delay = std::max(trace.max_completion_delay, ack.commit_time - tweets_[task.tweet_seq].t);
        trace.max_lag = std::max(trace.max_lag, ack.max_lag);
        --busy_;
        pump();
    }

    const TimelineResponse &FeedApp::query_timeline(ConsumerId consumer)
    {
        if (index(consumer) >= network_.n_consumers())
            throw ConfigError(fmt::format("unknown consumer {}", index(consumer)));
        const auto value = store_.read(index(consumer));
        TimelineResponse response;
        response.response_id = responses_.size();
        response.consumer = consumer;
        response.T = loop_.now();
        response.replica_served = store_.last_read_replica();
        if (value)
        {
            response.entries.reserve(value->entries.size());
            for (const auto &e : value->entries)
                response.entries.push_back(ResponseEntry{e.producer, e.t});
        }
        responses_.push_back(std::move(response));
        return responses_.back();
    }

    namespace
    {
        // Poisson arrival chain for one entity; successive arrivals are at least 1us apart.
        class ArrivalChain
        {
        public:
            ArrivalChain(EventLoop &loop, EventKind kind, double rate_per_hour, VirtualTime duration, Rng rng,
                         std::function<void()> action)
                : loop_(loop), kind_(kind), mean_gap_s_(3600.0 / rate_per_hour), duration_(duration), rng_(rng),
                  action_(std::move(action))
            {
            }

            void arm()
            {
                const auto gap =
                    std::max<std::int64_t>(1, VirtualTime::from_seconds(rng_.exponential(mean_gap_s_)).micros);
                const VirtualTime next = loop_.now() + VirtualTime{gap};
                if (next > duration_)
                    return;
                loop_.schedule(next, kind_, [this] {
                    action_();
                    arm();
                });
            }

        private:
            EventLoop &loop_;
            EventKind kind_;
            double mean_gap_s_;
            VirtualTime duration_;
            Rng rng_;
            std::function<void()> action_;
        };

        // One frontend stamps at most one tweet per microsecond; a colliding post waits 1us.
        void post_distinct(EventLoop &loop, FeedApp &app, ProducerId producer)
        {
            const auto &log = app.tweet_log();
            if (!log.empty() && log.back().t == loop.now())
            {
                loop.schedule(loop.now() + VirtualTime{1}, EventKind::TweetArrival,
                              [&loop, &app, producer] { post_distinct(loop, app, producer); });
                return;
            }
            app.post_tweet(producer);
        }
    }

    RunArtifacts run_experiment(const FollowingNetwork &network, const WorkloadProfile &profile,
                                const ExperimentSettings &settings)
    {
        if (profile.producer_rate.size() != network.n_producers() ||
            profile.consumer_rate.size() != network.n_consumers())
            throw ConfigError("workload profile does not match the network");
        if (settings.duration.micros < 0)
            throw ConfigError("duration must be non-negative");

        EventLoop loop;
        FeedApp app(loop, network, settings.store, settings.fanout, settings.n_timeline, settings.seed);

        std::vector<std::unique_ptr<ArrivalChain>> chains;
        for (std::uint32_t p = 0; p < network.n_producers(); ++p)
        {
            if (!(profile.producer_rate[p] > 0.0))
                continue;
            chains.push_back(std::make_unique<ArrivalChain>(loop, EventKind::TweetArrival, profile.producer_rate[p],
                                                            settings.duration,
                                                            rng_stream(settings.seed, "arrivals.tweet", p),
                                                            [&loop, &app, p] { post_distinct(loop, app, ProducerId{p}); }));
        }
        for (std::uint32_t c = 0; c < network.n_consumers(); ++c)
        {
            if (!(profile.consumer_rate[c] > 0.0))
                continue;
            chains.push_back(std::make_unique<ArrivalChain>(loop, EventKind::TimelineQuery, profile.consumer_rate[c],
                                                            settings.duration,
                                                            rng_stream(settings.seed, "arrivals.query", c),
                                                            [&app, c] { app.query_timeline(ConsumerId{c}); }));
        }
        for (auto &chain : chains)
            chain->arm();

        loop.run_until(settings.duration);
        loop.run_to_completion();

        RunArtifacts out;
        out.tweet_log = app.tweet_log();
        out.response_log = app.response_log();
        out.traces = app.tweet_traces();
        out.stats.tweets = out.tweet_log.size();
        out.stats.responses = out.response_log.size();
        out.stats.events_processed = loop.processed_count();
        out.stats.timeline_writes = app.timeline_writes();
        out.stats.cas_failures = app.cas_failures();
        out.stats.virtual_seconds = settings.duration.seconds();
        out.stats.max_lag_ms = app.store().lag_stats().max.micros / 1e3;
        out.stats.mean_lag_ms = app.store().lag_stats().mean_ms();
        return out;
    }
}
