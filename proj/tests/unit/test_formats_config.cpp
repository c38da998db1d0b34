#include "feedsim/config.hpp"
#include "feedsim/errors.hpp"
#include "feedsim/formats.hpp"

#include "../support/brute_force.hpp"

#include <doctest.h>

#include <sstream>

using namespace feedsim;

TEST_CASE("timestamps")
{
    CHECK(format_timestamp(VirtualTime{}) == kEpochLabel);
    const VirtualTime t = VirtualTime::from_hours(4) + VirtualTime::from_seconds(32) + VirtualTime{256647};
    CHECK(format_timestamp(t) == "2013-01-31T04:00:32.256647");
    CHECK(format_timestamp(VirtualTime::from_hours(24)) == "2013-02-01T00:00:00.000000");
    CHECK(format_timestamp(VirtualTime::from_hours(24 * 29)) == "2013-03-01T00:00:00.000000");
    CHECK(format_timestamp(VirtualTime::from_hours(24 * 335)) == "2014-01-01T00:00:00.000000");
    CHECK(parse_timestamp("2013-01-31T04:00:32.256647") == t);

    Rng rng(2);
    for (int i = 0; i < 1000; ++i)
    {
        const VirtualTime v{static_cast<std::int64_t>(rng.below(400ull * 86'400'000'000ull))};
        REQUIRE(parse_timestamp(format_timestamp(v)) == v);
    }
    for (const char *bad : {"", "2013-01-31 04:00:32.256647", "2013-01-31T04:00:32.25664", "2013-13-01T00:00:00.000000",
                            "2013-01-30T23:59:59.999999", "2013-01-31T24:00:00.000000", "2013-01-31T0a:00:00.000000"})
    {
        INFO(bad);
        CHECK_THROWS_AS(parse_timestamp(bad), IntegrityError);
    }
}

TEST_CASE("tweet log line format and round trip")
{
    const std::vector<TweetEvent> log{{ProducerId{1353955}, VirtualTime::from_seconds(1), 0},
                                      {ProducerId{7}, VirtualTime::from_seconds(1), 1}};
    std::ostringstream out;
    write_tweet_log(out, log);
    CHECK(out.str() == "{\"producer_id\": \"1353955\", \"t\": \"2013-01-31T00:00:01.000000\", \"seq\": 0}\n"
                       "{\"producer_id\": \"7\", \"t\": \"2013-01-31T00:00:01.000000\", \"seq\": 1}\n");
    std::istringstream in(out.str());
    CHECK(read_tweet_log(in) == log);

    std::istringstream corrupt("{\"producer_id\": \"1\", \"t\": \"2013-01-31T00:00:01.000000\", \"seq\": 0}\n{\"producer_id\": \n");
    try
    {
        read_tweet_log(corrupt);
        FAIL("expected an integrity error");
    }
    catch (const IntegrityError &e)
    {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::istringstream missing_field("{\"producer_id\": \"1\", \"seq\": 0}\n");
    CHECK_THROWS_AS(read_tweet_log(missing_field), IntegrityError);
    std::istringstream bad_id("{\"producer_id\": \"x1\", \"t\": \"2013-01-31T00:00:01.000000\", \"seq\": 0}\n");
    CHECK_THROWS_AS(read_tweet_log(bad_id), IntegrityError);
}

TEST_CASE("response log, traces, conflicts and totals round trip")
{
    Rng rng(3);
    const auto in = testing::random_instance(rng);
    std::stringstream rs;
    write_response_log(rs, in.responses);
    CHECK(read_response_log(rs) == in.responses);

    std::vector<TweetTrace> traces{{0, 3, 3, 1, VirtualTime{1500}, VirtualTime{700}}, {1, 0, 0, 0, {}, {}}};
    std::stringstream ts;
    write_traces(ts, traces);
    const auto back = read_traces(ts);
    REQUIRE(back.size() == 2);
    CHECK(back[0].retries == 1);
    CHECK(back[0].gap_bound() == VirtualTime{2200});

    Rng r2(4);
    testing::Instance inst;
    do
        inst = testing::random_instance(r2);
    while (inst.responses.size() < 50);
    const auto result = detect_all(inst.responses, inst.tweets, inst.network, DetectionConfig{inst.fraction, inst.n_timeline});
    std::stringstream cs;
    write_conflicts(cs, result.records);
    const TweetIndex idx(inst.tweets);
    CHECK(read_conflicts(cs, idx) == result.records);
    CHECK(gaps_from_records(result.records) == result.per_response_G);

    std::stringstream tot;
    write_detection_totals(tot, result.totals);
    CHECK(read_detection_totals(tot) == result.totals);
    std::istringstream broken("{\"total_responses\": 1}");
    CHECK_THROWS_AS(read_detection_totals(broken), IntegrityError);
}

TEST_CASE("network file round trip")
{
    Rng rng = rng_stream(5, "network");
    const auto net = build_network(50, 120, ZipfParams{{12.0, 0.39}, {5.0, 0.62}, {}, {}}, rng);
    Rng prng(6);
    const auto prof = build_profile(net, ZipfParams{}, 0.5, prng);
    std::stringstream s;
    write_network(s, net, prof);
    const auto back = read_network(s);
    CHECK(back.network == net);
    CHECK(back.producer_rate == prof.producer_rate);
    CHECK(back.consumer_rate == prof.consumer_rate);
    std::istringstream bad("{\"c\": 0, \"p\": [3, 1]}\n");
    CHECK_THROWS(read_network(bad));
}

TEST_CASE("config defaults, round trip and strictness")
{
    const ExperimentConfig d;
    CHECK(d.n_producers == 679);
    CHECK(d.n_consumers == 1963);
    CHECK(d.zipf.consumers_per_producer == ZipfTarget{13.38, 0.39});
    CHECK(d.zipf.producers_per_consumer == ZipfTarget{4.63, 0.62});
    CHECK(d.zipf.producer_rate == ZipfTarget{1.0, 0.57});
    CHECK(d.zipf.consumer_rate == ZipfTarget{5.8, 0.62});
    CHECK(d.store.n_replicas == 3);
    CHECK(d.store.lag == DelayDistribution::exponential(500));
    CHECK(d.fanout.service == DelayDistribution::exponential(20));
    CHECK(d.fanout.concurrency_cap == 0);
    CHECK(d.n_timeline == 20);
    CHECK(d.duration_hours == 2.0);
    CHECK(d.analysis_window_fraction == 0.5);

    CHECK(parse_config(serialize_config(d)) == d);
    CHECK(parse_config("{}") == d);

    ExperimentConfig c;
    c.seed = 99;
    c.scale = 0.3;
    c.store.lag = DelayDistribution::constant(0);
    c.fanout.delay_scale = 12.5;
    c.fanout.concurrency_cap = 4;
    c.out_dir = "x/y";
    c.zipf.consumer_rate.s = 0.7;
    const auto text = serialize_config(c);
    CHECK(parse_config(text) == c);
    CHECK(serialize_config(parse_config(text)) == text);
    CHECK(c.settings().duration == VirtualTime::from_hours(2));
    CHECK_FALSE(c.zero_delay());
    c.fanout.service = DelayDistribution::constant(0);
    CHECK(c.zero_delay());

    for (const char *bad : {"not json", "[]", "{\"sede\": 1}", "{\"seed\": \"1\"}", "{\"seed\": -1}",
                            "{\"store\": {\"lag\": {\"kind\": \"normal\"}}}", "{\"zipf\": {\"producer_rate\": {\"mu\": 1}}}",
                            "{\"n_consumers\": 0}", "{\"scale\": 0}", "{\"analysis_window_fraction\": 1.5}",
                            "{\"store\": {\"n_replicas\": 0}}", "{\"fanout\": {\"retry_backoff_ms\": 0}}",
                            "{\"duration_hours\": -1}", "{\"n_timeline\": 0}"})
    {
        INFO(bad);
        CHECK_THROWS_AS(parse_config(bad), ConfigError);
    }
}
