#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace feedsim
{
    /// Microseconds since the simulation epoch. Non-negative during a run.
    struct VirtualTime
    {
        std::int64_t micros = 0;

        constexpr auto operator<=>(const VirtualTime &) const = default;

        static constexpr VirtualTime from_micros(std::int64_t us) noexcept { return VirtualTime{us}; }
        static constexpr VirtualTime from_millis(double ms) noexcept
        {
            return VirtualTime{static_cast<std::int64_t>(ms * 1e3 + 0.5)};
        }
        static constexpr VirtualTime from_seconds(double s) noexcept
        {
            return VirtualTime{static_cast<std::int64_t>(s * 1e6 + 0.5)};
        }
        static constexpr VirtualTime from_hours(double h) noexcept { return from_seconds(h * 3600.0); }

        constexpr double seconds() const noexcept { return static_cast<double>(micros) / 1e6; }

        constexpr VirtualTime operator+(VirtualTime d) const noexcept { return VirtualTime{micros + d.micros}; }
        constexpr VirtualTime operator-(VirtualTime d) const noexcept { return VirtualTime{micros - d.micros}; }
    };

    /// xoshiro256** seeded through splitmix64. Small enough to keep one per entity.
    class Rng
    {
    public:
        using result_type = std::uint64_t;

        explicit Rng(std::uint64_t seed = 0) noexcept;

        static constexpr result_type min() noexcept { return 0; }
        static constexpr result_type max() noexcept { return ~result_type{0}; }

        result_type operator()() noexcept;

        /// Uniform in [0, 1) with 53 bits of resolution.
        double uniform() noexcept;
        /// Uniform integer in [0, n). n must be > 0.
        std::uint64_t below(std::uint64_t n) noexcept;
        /// Exponential with the given mean, by inversion.
        double exponential(double mean) noexcept;

    private:
        std::uint64_t s_[4];
    };

    /// Derives an independent generator from (master seed, label).
    Rng rng_stream(std::uint64_t master_seed, std::string_view label);
    /// Same, with a numeric sub-index (per-entity streams).
    Rng rng_stream(std::uint64_t master_seed, std::string_view label, std::uint64_t index);

    enum class EventKind : std::uint8_t
    {
        TweetArrival,
        FanoutStep,
        PropagationArrival,
        TimelineQuery,
        RetryWrite,
    };

    std::string_view to_string(EventKind kind) noexcept;

    struct EventHandle
    {
        std::uint64_t seq = 0;
    };

    struct TraceEntry
    {
        VirtualTime fire_at;
        std::uint64_t seq = 0;
        EventKind kind{};

        bool operator==(const TraceEntry &) const = default;
    };

    /// Single-threaded virtual-time event loop. Events at equal fire_at run in
    /// ascending insertion sequence.
    class EventLoop
    {
    public:
        using Callback = std::function<void()>;

        EventLoop() = default;
        EventLoop(const EventLoop &) = delete;
        EventLoop &operator=(const EventLoop &) = delete;

        VirtualTime now() const noexcept { return now_; }

        /// Throws std::logic_error if fire_at < now().
        EventHandle schedule(VirtualTime fire_at, EventKind kind, Callback cb);
        EventHandle schedule_after(VirtualTime delay, EventKind kind, Callback cb)
        {
            return schedule(now_ + delay, kind, std::move(cb));
        }

        /// Returns false if the event already fired or was cancelled.
        bool cancel(EventHandle handle);

        /// Processes every event with fire_at <= t_end; leaves now() == t_end.
        std::uint64_t run_until(VirtualTime t_end);
        /// Processes events until the queue is empty.
        std::uint64_t run_to_completion();

        std::uint64_t scheduled_count() const noexcept { return next_seq_; }
        std::uint64_t processed_count() const noexcept { return processed_; }
        std::uint64_t cancelled_count() const noexcept { return cancelled_total_; }
        std::size_t pending_count() const noexcept { return queue_.size() - cancelled_.size(); }

        void enable_trace(bool on) { tracing_ = on; }
        const std::vector<TraceEntry> &trace() const noexcept { return trace_; }

    private:
        struct Pending
        {
            VirtualTime fire_at;
            std::uint64_t seq;
            EventKind kind;
            Callback cb;
        };
        struct Later
        {
            bool operator()(const Pending &a, const Pending &b) const noexcept
            {
                if (a.fire_at != b.fire_at)
                    return a.fire_at > b.fire_at;
                return a.seq > b.seq;
            }
        };

        bool step(VirtualTime limit);

        std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
        std::unordered_set<std::uint64_t> cancelled_;
        std::unordered_set<std::uint64_t> live_;
        VirtualTime now_{};
        std::uint64_t next_seq_ = 0;
        std::uint64_t processed_ = 0;
        std::uint64_t cancelled_total_ = 0;
        bool tracing_ = false;
        std::vector<TraceEntry> trace_;
    };
}
