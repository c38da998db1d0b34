#include "feedsim/network_gen.hpp"

#include "feedsim/errors.hpp"
#include "feedsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_set>

#include <fmt/core.h>

namespace feedsim
{
    ZipfSampler::ZipfSampler(std::uint64_t rank_count, double s) : s_(s)
    {
        if (rank_count < 1)
            throw ConfigError("zipf: rank_count must be >= 1");
        if (!(s >= 0.0))
            throw ConfigError("zipf: exponent must be >= 0");
        cdf_.resize(rank_count);
        double acc = 0.0;
        for (std::uint64_t r = 1; r <= rank_count; ++r)
        {
            acc += std::pow(static_cast<double>(r), -s);
            cdf_[r - 1] = acc;
        }
        for (auto &c : cdf_)
            c /= acc;
        cdf_.back() = 1.0;
    }

    std::uint64_t ZipfSampler::operator()(Rng &rng) const
    {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto pos = static_cast<std::uint64_t>(it - cdf_.begin());
        return std::min<std::uint64_t>(pos, cdf_.size() - 1) + 1;
    }

    double ZipfSampler::pmf(std::uint64_t rank) const
    {
        if (rank < 1 || rank > cdf_.size())
            return 0.0;
        return rank == 1 ? cdf_[0] : cdf_[rank - 1] - cdf_[rank - 2];
    }

    std::uint64_t zipf_sample(std::uint64_t rank_count, double s, Rng &rng)
    {
        return ZipfSampler(rank_count, s)(rng);
    }

    FollowingNetwork FollowingNetwork::from_follows(std::uint32_t n_producers,
                                                    std::vector<std::vector<ProducerId>> follows)
    {
        FollowingNetwork net;
        net.followers_.resize(n_producers);
        for (std::uint32_t c = 0; c < follows.size(); ++c)
        {
            const auto &list = follows[c];
            if (list.empty())
                throw ConfigError(fmt::format("consumer {} follows no producer", c));
            for (std::size_t i = 0; i < list.size(); ++i)
            {
                if (index(list[i]) >= n_producers)
                    throw ConfigError(fmt::format("consumer {} follows unknown producer {}", c, index(list[i])));
                if (i > 0 && !(list[i - 1] < list[i]))
                    throw ConfigError(fmt::format("consumer {} follow list not strictly sorted", c));
                net.followers_[index(list[i])].push_back(ConsumerId{c});
            }
            net.edges_ += list.size();
        }
        net.follows_ = std::move(follows);
        return net;
    }

    bool FollowingNetwork::is_following(ConsumerId c, ProducerId p) const
    {
        const auto list = follows(c);
        return std::binary_search(list.begin(), list.end(), p);
    }

    namespace
    {
        std::vector<std::uint32_t> random_permutation(std::size_t n, Rng &rng)
        {
            std::vector<std::uint32_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0u);
            for (std::size_t i = n; i > 1; --i)
                std::swap(perm[i - 1], perm[rng.below(i)]);
            return perm;
        }

        // Clamps to [lo, hi] and rescales the free entries until the sum is `total`,
        // then rounds by largest remainder so the integer sum is exactly `total`.
        std::vector<std::uint32_t> integerize(std::vector<double> x, double lo, double hi, std::uint64_t total)
        {
            const double target = static_cast<double>(total);
            for (int iter = 0; iter < 200; ++iter)
            {
                double bounded = 0.0, free = 0.0;
                for (auto &v : x)
                {
                    v = std::clamp(v, lo, hi);
                    if (v == lo || v == hi)
                        bounded += v;
                    else
                        free += v;
                }
                const double sum = bounded + free;
                if (std::abs(sum - target) < 1e-9 * std::max(1.0, target) || free == 0.0)
                    break;
                const double factor = (target - bounded) / free;
                for (auto &v : x)
                    if (v != lo && v != hi)
                        v *= factor;
            }

            std::vector<std::uint32_t> out(x.size());
            std::uint64_t floor_sum = 0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                out[i] = static_cast<std::uint32_t>(std::floor(x[i]));
                floor_sum += out[i];
            }
            std::vector<std::size_t> order(x.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return (x[a] - std::floor(x[a])) > (x[b] - std::floor(x[b]));
            });
            std::int64_t remaining = static_cast<std::int64_t>(total) - static_cast<std::int64_t>(floor_sum);
            for (std::size_t k = 0; remaining > 0 && k < order.size(); ++k)
            {
                if (out[order[k]] < hi)
                {
                    ++out[order[k]];
                    --remaining;
                }
            }
            for (std::size_t k = 0; remaining < 0 && k < order.size(); ++k)
            {
                const std::size_t i = order[order.size() - 1 - k];
                if (out[i] > lo)
                {
                    --out[i];
                    ++remaining;
                }
            }
            return out;
        }

        // Efraimidis-Spirakis weighted sampling without replacement.
        std::vector<ProducerId> weighted_top_k(std::span<const double> weights, std::uint32_t k, Rng &rng)
        {
            using Keyed = std::pair<double, std::uint32_t>;
            std::priority_queue<Keyed, std::vector<Keyed>, std::greater<>> heap;
            for (std::uint32_t p = 0; p < weights.size(); ++p)
            {
                const double key = std::log(std::max(rng.uniform(), 1e-300)) / weights[p];
                if (heap.size() < k)
                    heap.emplace(key, p);
                else if (key > heap.top().first)
                {
                    heap.pop();
                    heap.emplace(key, p);
                }
            }
            std::vector<ProducerId> out;
            out.reserve(k);
            while (!heap.empty())
            {
                out.push_back(ProducerId{heap.top().second});
                heap.pop();
            }
            return out;
        }
    }

    std::vector<double> zipf_rank_values(std::size_t count, double s, double mean, Rng &rng)
    {
        if (count == 0)
            return {};
        const auto ranks = random_permutation(count, rng);
        std::vector<double> values(count);
        double sum = 0.0;
        for (std::size_t i = 0; i < count; ++i)
        {
            values[i] = std::pow(static_cast<double>(ranks[i] + 1), -s);
            sum += values[i];
        }
        const double factor = mean * static_cast<double>(count) / sum;
        for (auto &v : values)
            v *= factor;
        return values;
    }

    FollowingNetwork build_network(std::uint32_t n_producers, std::uint32_t n_consumers, const ZipfParams &params,
                                   Rng &rng)
    {
        if (n_producers < 1 || n_consumers < 1)
            throw ConfigError("build_network: need at least one producer and one consumer");
        const double mean_out = params.producers_per_consumer.mean;
        const double mean_in = params.consumers_per_producer.mean;
        if (!(mean_out >= 1.0) || mean_out > n_producers)
            throw ConfigError(fmt::format("producers per consumer mean {} outside [1, {}]", mean_out, n_producers));
        const double edges_out = mean_out * n_consumers;
        const double edges_in = mean_in * n_producers;
        if (std::abs(edges_out - edges_in) > std::max(1.0, 0.01 * std::max(edges_out, edges_in)))
        {
            throw ConfigError(fmt::format(
                "infeasible degree means: {} consumers x {} producers/consumer = {:.1f} edges, but {} producers x {} "
                "consumers/producer = {:.1f} edges",
                n_consumers, mean_out, edges_out, n_producers, mean_in, edges_in));
        }

        const auto total_edges = static_cast<std::uint64_t>(std::llround(edges_out));
        auto raw = zipf_rank_values(n_consumers, params.producers_per_consumer.s, mean_out, rng);
        const auto degrees = integerize(std::move(raw), 1.0, static_cast<double>(n_producers), total_edges);

        const auto popularity_rank = random_permutation(n_producers, rng);
        std::vector<ProducerId> producer_at_rank(n_producers);
        std::vector<double> weight(n_producers);
        for (std::uint32_t p = 0; p < n_producers; ++p)
        {
            producer_at_rank[popularity_rank[p]] = ProducerId{p};
            weight[p] = std::pow(static_cast<double>(popularity_rank[p] + 1), -params.consumers_per_producer.s);
        }
        const ZipfSampler popularity(n_producers, params.consumers_per_producer.s);

        std::vector<std::vector<ProducerId>> follows(n_consumers);
        std::unordered_set<std::uint32_t> chosen;
        for (std::uint32_t c = 0; c < n_consumers; ++c)
        {
            const std::uint32_t d = degrees[c];
            auto &list = follows[c];
            if (2ull * d > n_producers)
            {
                list = weighted_top_k(weight, d, rng);
            }
            else
            {
                chosen.clear();
                list.reserve(d);
                while (list.size() < d)
                {
                    const ProducerId p = producer_at_rank[popularity(rng) - 1];
                    if (chosen.insert(index(p)).second)
                        list.push_back(p);
                }
            }
            std::sort(list.begin(), list.end());
        }
        return FollowingNetwork::from_follows(n_producers, std::move(follows));
    }

    WorkloadProfile build_profile(const FollowingNetwork &network, const ZipfParams &params, double scale, Rng &rng)
    {
        if (!(scale > 0.0) || scale > 1.0)
            throw ConfigError("profile scale must be in (0, 1]");
        WorkloadProfile profile;
        profile.zipf_params = params;
        profile.scale = scale;
        profile.producer_rate =
            zipf_rank_values(network.n_producers(), params.producer_rate.s, scale * params.producer_rate.mean, rng);
        profile.consumer_rate =
            zipf_rank_values(network.n_consumers(), params.consumer_rate.s, scale * params.consumer_rate.mean, rng);
        return profile;
    }

    double fit_zipf_exponent(std::span<const double> values)
    {
        std::vector<double> sorted;
        for (double v : values)
            if (v > 0.0)
                sorted.push_back(v);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        if (sorted.size() < 2)
            return 0.0;
        std::vector<double> lx(sorted.size()), ly(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i)
        {
            lx[i] = std::log(static_cast<double>(i + 1));
            ly[i] = std::log(sorted[i]);
        }
        const double mx = mean(lx), my = mean(ly);
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lx.size(); ++i)
        {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        return sxx == 0.0 ? 0.0 : -sxy / sxx;
    }

    ValidationReport validate_profile(const FollowingNetwork &network, const WorkloadProfile &profile,
                                      const ZipfParams &targets, double tolerance, double independence_threshold)
    {
        ValidationReport report;
        report.tolerance = tolerance;

        std::vector<double> in_degree(network.n_producers()), out_degree(network.n_consumers());
        for (std::uint32_t p = 0; p < network.n_producers(); ++p)
            in_degree[p] = static_cast<double>(network.followers(ProducerId{p}).size());
        for (std::uint32_t c = 0; c < network.n_consumers(); ++c)
            out_degree[c] = static_cast<double>(network.follows(ConsumerId{c}).size());

        auto check = [&](std::string name, const ZipfTarget &target, double scale, std::span<const double> values) {
            DistributionCheck d;
            d.name = std::move(name);
            d.target_mean = target.mean * scale;
            d.realized_mean = mean(values);
            d.target_s = target.s;
            d.fitted_s = fit_zipf_exponent(values);
            d.pass = !values.empty() && d.target_mean > 0 &&
                     std::abs(d.realized_mean - d.target_mean) <= tolerance * d.target_mean;
            report.distributions.push_back(std::move(d));
        };
        check("consumers_per_producer", targets.consumers_per_producer, 1.0, in_degree);
        check("producers_per_consumer", targets.producers_per_consumer, 1.0, out_degree);
        check("producer_rate", targets.producer_rate, profile.scale, profile.producer_rate);
        check("consumer_rate", targets.consumer_rate, profile.scale, profile.consumer_rate);

        auto independence = [&](std::string name, std::span<const double> degree, std::span<const double> rate) {
            IndependenceCheck ic;
            ic.name = std::move(name);
            ic.threshold = independence_threshold;
            if (degree.size() == rate.size())
            {
                const auto rho = spearman(degree, rate);
                ic.spearman = rho.value_or(0.0);
                ic.applicable = rho.has_value() && degree.size() >= 100;
                ic.pass = !ic.applicable || std::abs(ic.spearman) < independence_threshold;
            }
            else
            {
                ic.applicable = true;
                ic.pass = false;
            }
            report.independence.push_back(std::move(ic));
        };
        independence("producer_followers_vs_rate", in_degree, profile.producer_rate);
        independence("consumer_follows_vs_rate", out_degree, profile.consumer_rate);

        report.pass = std::all_of(report.distributions.begin(), report.distributions.end(),
                                  [](const auto &d) { return d.pass; }) &&
                      std::all_of(report.independence.begin(), report.independence.end(),
                                  [](const auto &i) { return i.pass; });
        return report;
    }
}
