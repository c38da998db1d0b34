#pragma once

#include "feedsim/distribution.hpp"
#include "feedsim/errors.hpp"
#include "feedsim/sim_core.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

namespace feedsim
{
    struct StoreConfig
    {
        enum class ReadPolicy : std::uint8_t
        {
            UniformRandomReplica,
        };
        enum class WriteHomePolicy : std::uint8_t
        {
            UniformRandomReplica,
        };

        std::uint32_t n_replicas = 3;
        DelayDistribution lag = DelayDistribution::exponential(500.0);
        ReadPolicy read_policy = ReadPolicy::UniformRandomReplica;
        WriteHomePolicy write_home_policy = WriteHomePolicy::UniformRandomReplica;

        bool operator==(const StoreConfig &) const = default;
    };

    struct WriteAck
    {
        std::uint32_t home_replica = 0;
        std::uint64_t version = 0;
        VirtualTime commit_time;
        /// Largest propagation lag sampled for this write (zero for a single replica).
        VirtualTime max_lag;
    };

    template <class Value>
    struct CasOutcome
    {
        bool ok = false;
        WriteAck ack;                // valid when ok
        std::optional<Value> current; // authoritative value when the precondition failed
    };

    struct LagStats
    {
        std::uint64_t count = 0;
        std::int64_t sum_micros = 0;
        VirtualTime max;

        double mean_ms() const { return count == 0 ? 0.0 : static_cast<double>(sum_micros) / 1e3 / count; }
    };

    /// Eventually consistent replicated map. A write commits at one home replica and
    /// reaches every other replica after an independently sampled lag; a replica keeps
    /// the highest version it has seen. Reads hit one uniformly chosen replica.
    /// Conditional writes compare against the authoritative (latest committed) value,
    /// which makes each key linearizable for writers.
    template <class Key, class Value>
    class ReplicatedStore
    {
    public:
        struct Versioned
        {
            Value value;
            std::uint64_t version = 0;
        };

        struct PendingUpdate
        {
            Key key;
            Versioned update;
            VirtualTime arrive_at;
        };

        struct ReplicaState
        {
            std::uint32_t replica_id = 0;
            std::unordered_map<Key, Versioned> data;
            std::map<std::uint64_t, PendingUpdate> inbox; // keyed by event sequence
        };

        ReplicatedStore(EventLoop &loop, StoreConfig config, Rng lag_rng, Rng read_rng, Rng home_rng)
            : loop_(loop), config_(config), lag_rng_(lag_rng), read_rng_(read_rng), home_rng_(home_rng)
        {
            if (config_.n_replicas < 1)
                throw ConfigError("store needs at least one replica");
            if (config_.lag.mean_ms < 0.0)
                throw ConfigError("replication lag must be non-negative");
            replicas_.resize(config_.n_replicas);
            for (std::uint32_t r = 0; r < config_.n_replicas; ++r)
                replicas_[r].replica_id = r;
        }

        ReplicatedStore(const ReplicatedStore &) = delete;
        ReplicatedStore &operator=(const ReplicatedStore &) = delete;

        const StoreConfig &config() const noexcept { return config_; }

        WriteAck write(const Key &key, Value value)
        {
            const std::uint32_t home = static_cast<std::uint32_t>(home_rng_.below(config_.n_replicas));
            const std::uint64_t version = next_version(key);
            Versioned v{std::move(value), version};
            authoritative_[key] = v;
            apply(replicas_[home], key, v);

            WriteAck ack{home, version, loop_.now(), VirtualTime{}};
            for (std::uint32_t r = 0; r < config_.n_replicas; ++r)
            {
                if (r == home)
                    continue;
                const VirtualTime lag = config_.lag.always_zero() ? VirtualTime{} : config_.lag.sample(lag_rng_);
                ack.max_lag = std::max(ack.max_lag, lag);
                ++lag_stats_.count;
                lag_stats_.sum_micros += lag.micros;
                lag_stats_.max = std::max(lag_stats_.max, lag);
                if (lag.micros == 0)
                {
                    apply(replicas_[r], key, v);
                    continue;
                }
                const VirtualTime arrive_at = loop_.now() + lag;
                loop_.schedule(arrive_at, EventKind::PropagationArrival, [this, r, seq = next_ticket_] {
                    auto &replica = replicas_[r];
                    auto it = replica.inbox.find(seq);
                    apply(replica, it->second.key, it->second.update);
                    replica.inbox.erase(it);
                });
                replicas_[r].inbox.emplace(next_ticket_++, PendingUpdate{key, v, arrive_at});
            }
            return ack;
        }

        CasOutcome<Value> conditional_write(const Key &key, const std::optional<Value> &expected, Value new_value)
        {
            auto current = authoritative_read(key);
            if (current != expected)
                return CasOutcome<Value>{false, WriteAck{}, std::move(current)};
            return CasOutcome<Value>{true, write(key, std::move(new_value)), std::nullopt};
        }

        std::optional<Value> read(const Key &key)
        {
            const auto r = static_cast<std::uint32_t>(read_rng_.below(config_.n_replicas));
            last_read_replica_ = r;
            return read_from(r, key);
        }

        std::uint32_t last_read_replica() const noexcept { return last_read_replica_; }

        std::optional<Value> read_from(std::uint32_t replica, const Key &key) const
        {
            const auto &data = replicas_.at(replica).data;
            auto it = data.find(key);
            if (it == data.end())
                return std::nullopt;
            return it->second.value;
        }

        std::optional<Value> authoritative_read(const Key &key) const
        {
            auto it = authoritative_.find(key);
            if (it == authoritative_.end())
                return std::nullopt;
            return it->second.value;
        }

        std::uint64_t version_at(std::uint32_t replica, const Key &key) const
        {
            const auto &data = replicas_.at(replica).data;
            auto it = data.find(key);
            return it == data.end() ? 0 : it->second.version;
        }

        std::uint64_t authoritative_version(const Key &key) const
        {
            auto it = authoritative_.find(key);
            return it == authoritative_.end() ? 0 : it->second.version;
        }

        bool quiescent() const
        {
            return std::all_of(replicas_.begin(), replicas_.end(), [](const auto &r) { return r.inbox.empty(); });
        }

        const std::vector<ReplicaState> &replicas() const noexcept { return replicas_; }
        const LagStats &lag_stats() const noexcept { return lag_stats_; }
        /// Count of arrivals that carried a version older than the replica's (superseded).
        std::uint64_t superseded_arrivals() const noexcept { return superseded_; }

    private:
        std::uint64_t next_version(const Key &key) const { return authoritative_version(key) + 1; }

        void apply(ReplicaState &replica, const Key &key, const Versioned &v)
        {
            auto [it, inserted] = replica.data.try_emplace(key, v);
            if (inserted)
                return;
            if (v.version > it->second.version)
                it->second = v;
            else
                ++superseded_;
        }

        EventLoop &loop_;
        StoreConfig config_;
        Rng lag_rng_;
        Rng read_rng_;
        Rng home_rng_;
        std::vector<ReplicaState> replicas_;
        std::unordered_map<Key, Versioned> authoritative_;
        LagStats lag_stats_;
        std::uint64_t next_ticket_ = 0;
        std::uint64_t superseded_ = 0;
        std::uint32_t last_read_replica_ = 0;
    };
}
