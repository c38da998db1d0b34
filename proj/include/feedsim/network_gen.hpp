#pragma once

#include "feedsim/sim_core.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace feedsim
{
    enum class ProducerId : std::uint32_t
    {
    };
    enum class ConsumerId : std::uint32_t
    {
    };

    constexpr std::uint32_t index(ProducerId p) noexcept { return static_cast<std::uint32_t>(p); }
    constexpr std::uint32_t index(ConsumerId c) noexcept { return static_cast<std::uint32_t>(c); }

    /// Average and Zipf exponent of one distribution.
    struct ZipfTarget
    {
        double mean = 1.0;
        double s = 0.0;

        bool operator==(const ZipfTarget &) const = default;
    };

    /// Default desk workload shape.
    struct ZipfParams
    {
        ZipfTarget consumers_per_producer{13.38, 0.39};
        ZipfTarget producers_per_consumer{4.63, 0.62};
        ZipfTarget producer_rate{1.0, 0.57};  // tweets per hour
        ZipfTarget consumer_rate{5.8, 0.62};  // queries per hour

        bool operator==(const ZipfParams &) const = default;
    };

    /// Rank-frequency sampler: P(r) proportional to r^-s over r in [1, rank_count].
    class ZipfSampler
    {
    public:
        ZipfSampler(std::uint64_t rank_count, double s);

        std::uint64_t operator()(Rng &rng) const;
        double pmf(std::uint64_t rank) const;
        std::uint64_t rank_count() const noexcept { return cdf_.size(); }

    private:
        std::vector<double> cdf_;
        double s_;
    };

    /// One draw; builds the table each call, so prefer ZipfSampler for repeated use.
    std::uint64_t zipf_sample(std::uint64_t rank_count, double s, Rng &rng);

    /// Static consumer -> producer follow relation plus its exact inverse.
    class FollowingNetwork
    {
    public:
        FollowingNetwork() = default;

        /// Validates ids, sortedness, uniqueness and out-degree >= 1; builds the inverse.
        static FollowingNetwork from_follows(std::uint32_t n_producers, std::vector<std::vector<ProducerId>> follows);

        std::uint32_t n_producers() const noexcept { return static_cast<std::uint32_t>(followers_.size()); }
        std::uint32_t n_consumers() const noexcept { return static_cast<std::uint32_t>(follows_.size()); }
        std::uint64_t edge_count() const noexcept { return edges_; }

        std::span<const ProducerId> follows(ConsumerId c) const { return follows_.at(index(c)); }
        std::span<const ConsumerId> followers(ProducerId p) const { return followers_.at(index(p)); }
        bool is_following(ConsumerId c, ProducerId p) const;

        bool operator==(const FollowingNetwork &) const = default;

    private:
        std::vector<std::vector<ProducerId>> follows_;
        std::vector<std::vector<ConsumerId>> followers_;
        std::uint64_t edges_ = 0;
    };

    struct WorkloadProfile
    {
        std::vector<double> producer_rate; // tweets per hour, indexed by producer
        std::vector<double> consumer_rate; // queries per hour, indexed by consumer
        ZipfParams zipf_params;
        double scale = 1.0;

        bool operator==(const WorkloadProfile &) const = default;
    };

    /// Out-degrees follow the producers_per_consumer rank-frequency law, rescaled to
    /// its mean; targets are drawn with Zipf(consumers_per_producer.s) popularity.
    /// Throws ConfigError when the two degree means disagree with the population sizes.
    FollowingNetwork build_network(std::uint32_t n_producers, std::uint32_t n_consumers, const ZipfParams &params,
                                   Rng &rng);

    WorkloadProfile build_profile(const FollowingNetwork &network, const ZipfParams &params, double scale, Rng &rng);

    /// Positive values following a rank-frequency law of exponent s over a random rank
    /// permutation, rescaled so their mean is exactly `mean`.
    std::vector<double> zipf_rank_values(std::size_t count, double s, double mean, Rng &rng);

    struct DistributionCheck
    {
        std::string name;
        double target_mean = 0;
        double realized_mean = 0;
        double target_s = 0;
        double fitted_s = 0;
        bool pass = false;
    };

    struct IndependenceCheck
    {
        std::string name;
        double spearman = 0;
        double threshold = 0;
        bool applicable = false;
        bool pass = true;
    };

    struct ValidationReport
    {
        std::vector<DistributionCheck> distributions;
        std::vector<IndependenceCheck> independence;
        double tolerance = 0;
        bool pass = false;
    };

    /// Least-squares slope of ln(value) against ln(rank) for values sorted descending, negated.
    double fit_zipf_exponent(std::span<const double> values);

    /// Compares realized means against targets (relative tolerance) and checks that
    /// degree and activity are uncorrelated (|Spearman| < independence_threshold).
    /// Independence is only gated for populations of at least 100.
    ValidationReport validate_profile(const FollowingNetwork &network, const WorkloadProfile &profile,
                                      const ZipfParams &targets, double tolerance,
                                      double independence_threshold = 0.1);
}
