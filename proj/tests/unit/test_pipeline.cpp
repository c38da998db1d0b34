#include "feedsim/errors.hpp"
#include "feedsim/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace feedsim;
namespace fs = std::filesystem;

namespace
{
    fs::path scratch(const std::string &name)
    {
        auto p = fs::temp_directory_path() / ("feedsim_pipeline_" + name);
        fs::remove_all(p);
        return p;
    }

    ExperimentConfig small(const std::string &name)
    {
        ExperimentConfig c;
        c.n_producers = 120;
        c.n_consumers = 350;
        c.zipf.producers_per_consumer.mean = 4.63;
        c.zipf.consumers_per_producer.mean = 4.63 * 350 / 120.0;
        c.duration_hours = 1.0;
        c.out_dir = scratch(name).string();
        return c;
    }

    std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    std::vector<fs::path> files_under(const fs::path &root)
    {
        std::vector<fs::path> out;
        for (const auto &e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file())
                out.push_back(fs::relative(e.path(), root));
        std::sort(out.begin(), out.end());
        return out;
    }

    int run_cli(const std::string &args, const std::string &env = "")
    {
        const std::string cmd = env + " " FEEDSIM_CLI " " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
}

TEST_CASE("gen validates and is reproducible")
{
    std::ostringstream log;
    auto c = small("gen_a");
    const auto g = cmd_gen(c, log);
    CHECK(g.validation.pass);
    const auto paths = artifact_paths(c.out_dir);
    CHECK(fs::exists(paths.network));
    CHECK(fs::exists(paths.validation));

    auto c2 = small("gen_b");
    cmd_gen(c2, log);
    CHECK(slurp(paths.network) == slurp(artifact_paths(c2.out_dir).network));
    CHECK(slurp(paths.validation) == slurp(artifact_paths(c2.out_dir).validation));

    const auto loaded = load_generated(c);
    CHECK(loaded.network == g.network);
    CHECK(loaded.profile == g.profile);

    auto bad = small("gen_bad");
    bad.n_consumers = 0;
    CHECK_THROWS_AS(cmd_gen(bad, log), ConfigError);
}

TEST_CASE("default desk generation passes validation")
{
    const auto g = generate(ExperimentConfig{});
    CHECK(g.validation.pass);
}

TEST_CASE("run: missing inputs, zero duration, reruns")
{
    std::ostringstream log;
    auto c = small("run_missing");
    CHECK_THROWS_AS(cmd_run(c, log), IntegrityError);

    auto z = small("run_zero");
    z.duration_hours = 0;
    cmd_gen(z, log);
    const auto a = cmd_run(z, log);
    CHECK(a.tweet_log.empty());
    CHECK(a.response_log.empty());
    CHECK(slurp(artifact_paths(z.out_dir).tweets).empty());

    auto r = small("run_twice");
    cmd_gen(r, log);
    cmd_run(r, log);
    const auto first = slurp(artifact_paths(r.out_dir).responses);
    const auto first_tweets = slurp(artifact_paths(r.out_dir).tweets);
    cmd_run(r, log);
    CHECK(slurp(artifact_paths(r.out_dir).responses) == first);
    CHECK(slurp(artifact_paths(r.out_dir).tweets) == first_tweets);
    CHECK_FALSE(first.empty());
    CHECK(log.str().find("responses/s") != std::string::npos);
}

TEST_CASE("detect: zero lag finds nothing, corrupt logs are rejected")
{
    std::ostringstream log;
    auto c = small("detect_zero");
    c.store.lag = DelayDistribution::constant(0);
    c.fanout.service = DelayDistribution::constant(0);
    cmd_gen(c, log);
    cmd_run(c, log);
    const auto r = cmd_detect(c, log);
    CHECK(r.records.empty());
    CHECK(r.totals.analyzed_responses > 0);

    const auto paths = artifact_paths(c.out_dir);
    {
        std::ofstream out(paths.responses, std::ios::app);
        out << "{\"response_id\": 1, \"consumer_id\": \"0\"\n";
    }
    CHECK_THROWS_AS(cmd_detect(c, log), IntegrityError);
}

TEST_CASE("report reads detection artifacts back")
{
    std::ostringstream log;
    auto c = small("report");
    c.fanout.delay_scale = 10000;
    c.duration_hours = 2;
    cmd_gen(c, log);
    cmd_run(c, log);
    const auto r = cmd_detect(c, log);
    REQUIRE(r.totals.conflict_records > 0);
    const auto report = cmd_report(c, log);
    CHECK(report.totals == r.totals);
    CHECK(report.histogram.total() == r.totals.conflicting_responses);
    const auto dir = artifact_paths(c.out_dir).report_dir;
    for (const char *f : {"report_totals.json", "gap_histogram.csv", "summary.txt", "study_producer_followers.csv",
                          "study_producer_tweets.csv", "study_consumer_follows.csv", "study_consumer_queries.csv"})
        CHECK(fs::exists(dir / f));

    // totals that disagree with the records are caught
    fs::remove(artifact_paths(c.out_dir).conflicts);
    std::ofstream(artifact_paths(c.out_dir).conflicts).close();
    CHECK_THROWS_AS(cmd_report(c, log), IntegrityError);
}

TEST_CASE("repro: zero-lag check and lagged run, byte-identical reruns")
{
    std::ostringstream log;
    auto z = small("repro_zero");
    z.store.lag = DelayDistribution::constant(0);
    z.fanout.service = DelayDistribution::constant(0);
    const auto out = cmd_repro(z, log);
    CHECK(out.stages_ok);
    bool saw_conflicts = false;
    for (const auto &c : out.checks)
        if (c.name == "conflicts")
        {
            saw_conflicts = true;
            CHECK(c.pass);
        }
    CHECK(saw_conflicts);
    CHECK(log.str().find("PASS conflicts: 0") != std::string::npos);

    auto a = small("repro_a"), b = small("repro_b");
    a.fanout.delay_scale = b.fanout.delay_scale = 10000;
    const auto ra = cmd_repro(a, log);
    cmd_repro(b, log);
    CHECK(ra.checks.size() == 4);
    const auto fa = files_under(a.out_dir), fb = files_under(b.out_dir);
    REQUIRE(fa == fb);
    for (const auto &f : fa)
    {
        INFO(f.string());
        CHECK(slurp(fs::path(a.out_dir) / f) == slurp(fs::path(b.out_dir) / f));
    }
}

TEST_CASE("repro names the failing stage")
{
    std::ostringstream log;
    auto c = small("repro_fail");
    c.zipf.consumers_per_producer.mean = 50; // infeasible against the consumer side
    try
    {
        cmd_repro(c, log);
        FAIL("expected a stage error");
    }
    catch (const StageError &e)
    {
        CHECK(e.stage() == "gen");
    }
}

TEST_CASE("command line: exit codes and output precedence")
{
    const auto root = scratch("cli");
    fs::create_directories(root);
    const auto cfg = root / "small.json";
    {
        std::ofstream out(cfg);
        out << R"({"n_producers": 120, "n_consumers": 350, "zipf": {"consumers_per_producer": {"mean": 13.504166666666666, "s": 0.39}},
                   "duration_hours": 0.5, "out_dir": ")"
            << (root / "from_file").string() << "\"}\n";
    }
    const auto malformed = root / "bad.json";
    std::ofstream(malformed) << "{\"seed\": ";

    CHECK(run_cli("repro --config " + malformed.string()) == 2);
    CHECK(run_cli("gen --config " + (root / "absent.json").string()) != 0);
    CHECK(run_cli("") != 0);
    CHECK(run_cli("run --config " + cfg.string() + " --out " + (root / "empty").string()) == 3);

    CHECK(run_cli("gen --config " + cfg.string()) == 0);
    CHECK(fs::exists(root / "from_file" / "network.jsonl"));
    CHECK(run_cli("gen --config " + cfg.string(), "FEEDSIM_OUT=" + (root / "from_env").string()) == 0);
    CHECK(fs::exists(root / "from_env" / "network.jsonl"));
    CHECK(run_cli("gen --config " + cfg.string() + " --out " + (root / "from_flag").string(),
                  "FEEDSIM_OUT=" + (root / "from_env2").string()) == 0);
    CHECK(fs::exists(root / "from_flag" / "network.jsonl"));
    CHECK_FALSE(fs::exists(root / "from_env2"));

    CHECK(run_cli("gen --config " + cfg.string() + " --seed 5 --out " + (root / "seed5").string()) == 0);
    CHECK(slurp(root / "seed5" / "network.jsonl") != slurp(root / "from_flag" / "network.jsonl"));

    const auto out = (root / "chain").string();
    for (const char *stage : {"gen", "run", "detect", "report"})
        CHECK(run_cli(std::string(stage) + " --config " + cfg.string() + " --out " + out) == 0);
    CHECK(fs::exists(root / "chain" / "report" / "summary.txt"));

    CHECK(run_cli("repro --config " FEEDSIM_CONFIG_DIR "/zero_delay.json --strict --out " + (root / "zero").string()) == 0);
}
