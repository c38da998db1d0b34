#pragma once

#include "feedsim/sim_core.hpp"

#include <string>

namespace feedsim
{
    /// Non-negative delay distribution, parameterized by its mean in milliseconds.
    struct DelayDistribution
    {
        enum class Kind : std::uint8_t
        {
            Constant,
            Exponential,
        };

        Kind kind = Kind::Exponential;
        double mean_ms = 0.0;

        static DelayDistribution constant(double ms) { return {Kind::Constant, ms}; }
        static DelayDistribution exponential(double ms) { return {Kind::Exponential, ms}; }

        VirtualTime sample(Rng &rng) const
        {
            if (kind == Kind::Constant || mean_ms <= 0.0)
                return VirtualTime::from_millis(mean_ms > 0.0 ? mean_ms : 0.0);
            return VirtualTime::from_millis(rng.exponential(mean_ms));
        }

        bool always_zero() const noexcept { return mean_ms <= 0.0; }

        DelayDistribution scaled(double factor) const { return {kind, mean_ms * factor}; }

        bool operator==(const DelayDistribution &) const = default;
    };

    std::string to_string(DelayDistribution::Kind kind);
    /// Throws ConfigError on unknown names.
    DelayDistribution::Kind delay_kind_from_string(const std::string &name);
}
