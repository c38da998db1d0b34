#include "feedsim/sim_core.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace feedsim
{
    namespace
    {
        std::uint64_t splitmix64(std::uint64_t &state) noexcept
        {
            std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            return z ^ (z >> 31);
        }

        constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
        {
            return (x << k) | (x >> (64 - k));
        }

        std::uint64_t fnv1a(std::string_view s) noexcept
        {
            std::uint64_t h = 0xCBF29CE484222325ULL;
            for (unsigned char c : s)
            {
                h ^= c;
                h *= 0x100000001B3ULL;
            }
            return h;
        }
    }

    Rng::Rng(std::uint64_t seed) noexcept
    {
        std::uint64_t state = seed;
        for (auto &word : s_)
            word = splitmix64(state);
    }

    Rng::result_type Rng::operator()() noexcept
    {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double Rng::uniform() noexcept
    {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    std::uint64_t Rng::below(std::uint64_t n) noexcept
    {
        // Lemire's multiply-shift with rejection; exact and portable.
        std::uint64_t x = (*this)();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n)
        {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold)
            {
                x = (*this)();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double Rng::exponential(double mean) noexcept
    {
        return -mean * std::log1p(-uniform());
    }

    Rng rng_stream(std::uint64_t master_seed, std::string_view label)
    {
        std::uint64_t state = master_seed ^ fnv1a(label);
        return Rng(splitmix64(state));
    }

    Rng rng_stream(std::uint64_t master_seed, std::string_view label, std::uint64_t index)
    {
        std::uint64_t state = master_seed ^ fnv1a(label);
        state = splitmix64(state) ^ (index * 0xD1B54A32D192ED03ULL);
        return Rng(splitmix64(state));
    }

    std::string_view to_string(EventKind kind) noexcept
    {
        switch (kind)
        {
        case EventKind::TweetArrival:
            return "TweetArrival";
        case EventKind::FanoutStep:
            return "FanoutStep";
        case EventKind::PropagationArrival:
            return "PropagationArrival";
        case EventKind::TimelineQuery:
            return "TimelineQuery";
        case EventKind::RetryWrite:
            return "RetryWrite";
        }
        return "?";
    }

    EventHandle EventLoop::schedule(VirtualTime fire_at, EventKind kind, Callback cb)
    {
        if (fire_at < now_)
        {
            throw std::logic_error("event scheduled in the past: fire_at=" + std::to_string(fire_at.micros) +
                                   "us now=" + std::to_string(now_.micros) + "us");
        }
        const std::uint64_t seq = next_seq_++;
        queue_.push(Pending{fire_at, seq, kind, std::move(cb)});
        live_.insert(seq);
        return EventHandle{seq};
    }

    bool EventLoop::cancel(EventHandle handle)
    {
        if (live_.erase(handle.seq) == 0)
            return false;
        cancelled_.insert(handle.seq);
        ++cancelled_total_;
        return true;
    }

    bool EventLoop::step(VirtualTime limit)
    {
        while (!queue_.empty())
        {
            if (queue_.top().fire_at > limit)
                return false;
            Pending ev = std::move(const_cast<Pending &>(queue_.top()));
            queue_.pop();
            if (cancelled_.erase(ev.seq) != 0)
                continue;
            live_.erase(ev.seq);
            now_ = ev.fire_at;
            if (tracing_)
                trace_.push_back(TraceEntry{ev.fire_at, ev.seq, ev.kind});
            ++processed_;
            ev.cb();
            return true;
        }
        return false;
    }

    std::uint64_t EventLoop::run_until(VirtualTime t_end)
    {
        if (t_end < now_)
            throw std::logic_error("run_until target precedes now()");
        std::uint64_t n = 0;
        while (step(t_end))
            ++n;
        now_ = t_end;
        return n;
    }

    std::uint64_t EventLoop::run_to_completion()
    {
        std::uint64_t n = 0;
        const VirtualTime forever{std::numeric_limits<std::int64_t>::max()};
        while (step(forever))
            ++n;
        return n;
    }
}
