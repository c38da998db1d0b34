#include "feedsim/errors.hpp"
#include "feedsim/network_gen.hpp"
#include "feedsim/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace feedsim;

namespace
{
    std::vector<double> in_degrees(const FollowingNetwork &n)
    {
        std::vector<double> v;
        for (std::uint32_t p = 0; p < n.n_producers(); ++p)
            v.push_back(static_cast<double>(n.followers(ProducerId{p}).size()));
        return v;
    }
}

TEST_CASE("zipf with s=0 is uniform (chi-square, alpha 0.01)")
{
    Rng rng = rng_stream(1, "zipf.uniform");
    ZipfSampler z(10, 0.0);
    std::vector<double> counts(10, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i)
    {
        const auto r = z(rng);
        REQUIRE(r >= 1);
        REQUIRE(r <= 10);
        counts[r - 1] += 1;
    }
    double chi2 = 0;
    for (double c : counts)
        chi2 += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
    CHECK(chi2 < 21.666); // df = 9
}

TEST_CASE("zipf with one rank always returns 1")
{
    Rng rng(4);
    for (int i = 0; i < 100; ++i)
        CHECK(zipf_sample(1, 0.8, rng) == 1);
    CHECK_THROWS_AS(ZipfSampler(0, 0.5), ConfigError);
    CHECK_THROWS_AS(ZipfSampler(5, -0.1), ConfigError);
}

TEST_CASE("zipf rank-1 to rank-2 ratio and pmf")
{
    const double s = 0.62;
    ZipfSampler z(1000, s);
    double norm = 0;
    for (int r = 1; r <= 1000; ++r)
        norm += std::pow(r, -s);
    CHECK(z.pmf(1) == doctest::Approx(1.0 / norm).epsilon(1e-12));
    CHECK(z.pmf(2) == doctest::Approx(std::pow(2.0, -s) / norm).epsilon(1e-12));

    Rng rng = rng_stream(2, "zipf.ratio");
    std::uint64_t one = 0, two = 0;
    for (int i = 0; i < 1000000; ++i)
    {
        const auto r = z(rng);
        one += r == 1;
        two += r == 2;
    }
    const double ratio = static_cast<double>(one) / static_cast<double>(two);
    CHECK(std::abs(ratio / std::pow(2.0, s) - 1.0) < 0.05);
}

TEST_CASE("tiny network: every consumer follows the only producer")
{
    ZipfParams params;
    params.producers_per_consumer = {1.0, 0.62};
    params.consumers_per_producer = {3.0, 0.39};
    Rng rng(5);
    const auto net = build_network(1, 3, params, rng);
    for (std::uint32_t c = 0; c < 3; ++c)
    {
        REQUIRE(net.follows(ConsumerId{c}).size() == 1);
        CHECK(net.follows(ConsumerId{c})[0] == ProducerId{0});
    }
    CHECK(net.followers(ProducerId{0}).size() == 3);
}

TEST_CASE("desk network structure")
{
    Rng rng = rng_stream(20130131, "network");
    const auto net = build_network(679, 1963, ZipfParams{}, rng);
    std::uint64_t out_sum = 0, in_sum = 0;
    for (std::uint32_t c = 0; c < net.n_consumers(); ++c)
    {
        const auto f = net.follows(ConsumerId{c});
        REQUIRE(!f.empty());
        std::set<ProducerId> uniq(f.begin(), f.end());
        REQUIRE(uniq.size() == f.size());
        out_sum += f.size();
        for (ProducerId p : f)
        {
            const auto fl = net.followers(p);
            REQUIRE(std::find(fl.begin(), fl.end(), ConsumerId{c}) != fl.end());
            REQUIRE(net.is_following(ConsumerId{c}, p));
        }
    }
    for (std::uint32_t p = 0; p < net.n_producers(); ++p)
        in_sum += net.followers(ProducerId{p}).size();
    CHECK(out_sum == net.edge_count());
    CHECK(in_sum == net.edge_count());
    const double mean_out = static_cast<double>(out_sum) / net.n_consumers();
    CHECK(std::abs(mean_out - 4.63) <= 0.1 * 4.63);
}

TEST_CASE("regeneration with the same seed is identical")
{
    Rng a = rng_stream(9, "network"), b = rng_stream(9, "network"), c = rng_stream(10, "network");
    ZipfParams params;
    params.consumers_per_producer.mean = 4.63 * 3;
    const auto na = build_network(200, 600, params, a);
    const auto nb = build_network(200, 600, params, b);
    const auto nc = build_network(200, 600, params, c);
    CHECK(na == nb);
    CHECK_FALSE(na == nc);
    Rng pa = rng_stream(9, "profile"), pb = rng_stream(9, "profile");
    CHECK(build_profile(na, ZipfParams{}, 1.0, pa) == build_profile(nb, ZipfParams{}, 1.0, pb));
}

TEST_CASE("infeasible degree means are rejected")
{
    Rng rng(1);
    CHECK_THROWS_AS(build_network(679, 1963, ZipfParams{{20.0, 0.39}, {4.63, 0.62}, {}, {}}, rng), ConfigError);
    CHECK_THROWS_AS(build_network(0, 10, ZipfParams{}, rng), ConfigError);
    CHECK_THROWS_AS(build_network(10, 0, ZipfParams{}, rng), ConfigError);
}

TEST_CASE("from_follows validates its input")
{
    using P = ProducerId;
    CHECK_THROWS_AS(FollowingNetwork::from_follows(2, {{}}), ConfigError);
    CHECK_THROWS_AS(FollowingNetwork::from_follows(2, {{P{2}}}), ConfigError);
    CHECK_THROWS_AS(FollowingNetwork::from_follows(2, {{P{1}, P{0}}}), ConfigError);
    CHECK_THROWS_AS(FollowingNetwork::from_follows(2, {{P{1}, P{1}}}), ConfigError);
    const auto n = FollowingNetwork::from_follows(3, {{P{0}, P{2}}, {P{2}}});
    CHECK(n.edge_count() == 3);
    CHECK(n.followers(P{1}).empty());
    CHECK(n.followers(P{2}).size() == 2);
}

TEST_CASE("profile means and positivity")
{
    Rng rng = rng_stream(3, "network");
    const auto net = build_network(679, 1963, ZipfParams{}, rng);
    for (double scale : {1.0, 0.25})
    {
        Rng prng = rng_stream(3, "profile");
        const auto prof = build_profile(net, ZipfParams{}, scale, prng);
        REQUIRE(prof.producer_rate.size() == 679);
        REQUIRE(prof.consumer_rate.size() == 1963);
        CHECK(*std::min_element(prof.producer_rate.begin(), prof.producer_rate.end()) > 0.0);
        CHECK(*std::min_element(prof.consumer_rate.begin(), prof.consumer_rate.end()) > 0.0);
        CHECK(std::abs(mean(prof.producer_rate) - 1.0 * scale) < 1e-6);
        CHECK(std::abs(mean(prof.consumer_rate) - 5.8 * scale) < 1e-6);
    }
    Rng bad(1);
    CHECK_THROWS_AS(build_profile(net, ZipfParams{}, 0.0, bad), ConfigError);
    CHECK_THROWS_AS(build_profile(net, ZipfParams{}, 1.5, bad), ConfigError);
}

TEST_CASE("single producer gets exactly the mean rate")
{
    const auto net = FollowingNetwork::from_follows(1, {{ProducerId{0}}});
    Rng rng(8);
    const auto prof = build_profile(net, ZipfParams{}, 1.0, rng);
    CHECK(prof.producer_rate == std::vector<double>{1.0});
    CHECK(prof.consumer_rate == std::vector<double>{5.8});
}

TEST_CASE("rank values follow the power law and hit the mean")
{
    Rng rng(12);
    auto v = zipf_rank_values(5000, 0.62, 4.0, rng);
    CHECK(mean(v) == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(fit_zipf_exponent(v) == doctest::Approx(0.62).epsilon(1e-6));
    std::sort(v.begin(), v.end(), std::greater<>());
    CHECK(v[0] / v[1] == doctest::Approx(std::pow(2.0, 0.62)));
}

TEST_CASE("validation reports exact means on a hand-built network")
{
    // consumer 0 follows both producers, consumer 1 follows producer 1
    const auto net = FollowingNetwork::from_follows(2, {{ProducerId{0}, ProducerId{1}}, {ProducerId{1}}});
    WorkloadProfile prof{{1.0, 3.0}, {4.0, 8.0}, ZipfParams{}, 1.0};
    ZipfParams targets{{1.5, 0.0}, {1.5, 0.0}, {2.0, 0.0}, {6.0, 0.0}};
    const auto rep = validate_profile(net, prof, targets, 0.1);
    REQUIRE(rep.distributions.size() == 4);
    CHECK(rep.distributions[0].realized_mean == 1.5);
    CHECK(rep.distributions[1].realized_mean == 1.5);
    CHECK(rep.distributions[2].realized_mean == 2.0);
    CHECK(rep.distributions[3].realized_mean == 6.0);
    CHECK(rep.pass); // independence not gated below 100 entities

    WorkloadProfile mis = prof;
    for (double &r : mis.consumer_rate)
        r *= 1.5;
    const auto bad = validate_profile(net, mis, targets, 0.1);
    CHECK_FALSE(bad.pass);
    CHECK_FALSE(bad.distributions[3].pass);
}

TEST_CASE("full-scale generation: means and degree/rate independence")
{
    Rng rng = rng_stream(20130131, "network");
    const auto net = build_network(67882, 196283, ZipfParams{}, rng);
    Rng prng = rng_stream(20130131, "profile");
    const auto prof = build_profile(net, ZipfParams{}, 1.0, prng);
    const auto rep = validate_profile(net, prof, ZipfParams{}, 0.1, 0.1);
    for (const auto &d : rep.distributions)
    {
        INFO(d.name);
        CHECK(d.pass);
    }
    for (const auto &i : rep.independence)
    {
        INFO(i.name << " rho=" << i.spearman);
        CHECK(i.applicable);
        CHECK(std::abs(i.spearman) < 0.1);
    }
    const auto in = in_degrees(net);
    CHECK(*std::max_element(in.begin(), in.end()) > 100.0);
}
