#include "feedsim/pipeline.hpp"

#include "feedsim/errors.hpp"
#include "feedsim/formats.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include <fmt/core.h>
#include <json.hpp>

namespace feedsim
{
    namespace
    {
        using ojson = nlohmann::ordered_json;

        std::ifstream open_in(const std::filesystem::path &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw IntegrityError(fmt::format("missing input {}", path.string()));
            return in;
        }

        template <class Fn>
        void write_file(const std::filesystem::path &path, Fn &&fn)
        {
            std::filesystem::create_directories(path.parent_path());
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw std::runtime_error(fmt::format("cannot write {}", path.string()));
            fn(out);
            out.close();
            if (!out)
                throw std::runtime_error(fmt::format("error writing {}", path.string()));
        }

        template <class T, class Reader>
        T read_file(const std::filesystem::path &path, Reader &&reader)
        {
            auto in = open_in(path);
            try
            {
                return reader(in);
            }
            catch (const IntegrityError &e)
            {
                throw IntegrityError(fmt::format("{}: {}", path.string(), e.what()));
            }
        }

        ojson validation_json(const ValidationReport &r)
        {
            ojson j;
            j["pass"] = r.pass;
            j["tolerance"] = r.tolerance;
            ojson dists = ojson::array();
            for (const auto &d : r.distributions)
            {
                dists.push_back(ojson{{"name", d.name},
                                      {"target_mean", d.target_mean},
                                      {"realized_mean", d.realized_mean},
                                      {"target_s", d.target_s},
                                      {"fitted_s", d.fitted_s},
                                      {"pass", d.pass}});
            }
            j["distributions"] = std::move(dists);
            ojson indep = ojson::array();
            for (const auto &i : r.independence)
            {
                indep.push_back(ojson{{"name", i.name},
                                      {"spearman", i.spearman},
                                      {"threshold", i.threshold},
                                      {"applicable", i.applicable},
                                      {"pass", i.pass}});
            }
            j["independence"] = std::move(indep);
            return j;
        }

        ojson run_stats_json(const RunStats &s)
        {
            return ojson{{"tweets", s.tweets},
                         {"responses", s.responses},
                         {"events_processed", s.events_processed},
                         {"timeline_writes", s.timeline_writes},
                         {"cas_failures", s.cas_failures},
                         {"virtual_seconds", s.virtual_seconds},
                         {"max_lag_ms", s.max_lag_ms},
                         {"mean_lag_ms", s.mean_lag_ms}};
        }

        template <class Fn>
        auto stage(const char *name, Fn &&fn)
        {
            try
            {
                return fn();
            }
            catch (const StageError &)
            {
                throw;
            }
            catch (const std::exception &e)
            {
                throw StageError(name, e.what());
            }
        }
    }

    ArtifactPaths artifact_paths(const std::filesystem::path &out_dir)
    {
        ArtifactPaths p;
        p.root = out_dir;
        p.network = out_dir / "network.jsonl";
        p.validation = out_dir / "validation.json";
        p.tweets = out_dir / "tweets.jsonl";
        p.responses = out_dir / "responses.jsonl";
        p.traces = out_dir / "tweet_trace.jsonl";
        p.run_stats = out_dir / "run_stats.json";
        p.conflicts = out_dir / "conflicts.jsonl";
        p.detection_totals = out_dir / "detection_totals.json";
        p.report_dir = out_dir / "report";
        return p;
    }

    GenOutcome generate(const ExperimentConfig &config)
    {
        validate_config(config);
        GenOutcome g;
        Rng net_rng = rng_stream(config.seed, "network");
        g.network = build_network(config.n_producers, config.n_consumers, config.zipf, net_rng);
        Rng profile_rng = rng_stream(config.seed, "profile");
        g.profile = build_profile(g.network, config.zipf, config.scale, profile_rng);
        g.validation = validate_generated(g);
        return g;
    }

    ValidationReport validate_generated(const GenOutcome &gen)
    {
        return validate_profile(gen.network, gen.profile, gen.profile.zipf_params,
                                thresholds::workload_mean_tolerance, thresholds::workload_independence);
    }

    GenOutcome cmd_gen(const ExperimentConfig &config, std::ostream &log)
    {
        GenOutcome g = generate(config);
        const auto paths = artifact_paths(config.out_dir);
        write_file(paths.network, [&](std::ostream &out) { write_network(out, g.network, g.profile); });
        write_file(paths.validation, [&](std::ostream &out) { out << validation_json(g.validation).dump(2) << '\n'; });
        log << fmt::format("gen: {} producers, {} consumers, {} follow edges -> {}\n", g.network.n_producers(),
                           g.network.n_consumers(), g.network.edge_count(), paths.network.string());
        return g;
    }

    GenOutcome load_generated(const ExperimentConfig &config)
    {
        const auto paths = artifact_paths(config.out_dir);
        NetworkFile file = read_file<NetworkFile>(paths.network, [](std::istream &in) { return read_network(in); });
        GenOutcome g;
        g.network = std::move(file.network);
        g.profile.producer_rate = std::move(file.producer_rate);
        g.profile.consumer_rate = std::move(file.consumer_rate);
        g.profile.zipf_params = config.zipf;
        g.profile.scale = config.scale;
        if (g.profile.producer_rate.size() != g.network.n_producers() ||
            g.profile.consumer_rate.size() != g.network.n_consumers())
            throw IntegrityError(fmt::format("{}: rate records do not match the network", paths.network.string()));
        g.validation = validate_generated(g);
        return g;
    }

    std::vector<TweetEvent> load_tweets(const ArtifactPaths &paths)
    {
        return read_file<std::vector<TweetEvent>>(paths.tweets, [](std::istream &in) { return read_tweet_log(in); });
    }

    std::vector<TimelineResponse> load_responses(const ArtifactPaths &paths)
    {
        return read_file<std::vector<TimelineResponse>>(paths.responses,
                                                        [](std::istream &in) { return read_response_log(in); });
    }

    std::vector<TweetTrace> load_traces(const ArtifactPaths &paths)
    {
        return read_file<std::vector<TweetTrace>>(paths.traces, [](std::istream &in) { return read_traces(in); });
    }

    DetectionResult load_detection(const ArtifactPaths &paths, const TweetIndex &tweets)
    {
        DetectionResult r;
        r.records = read_file<std::vector<ConflictRecord>>(
            paths.conflicts, [&](std::istream &in) { return read_conflicts(in, tweets); });
        r.totals = read_file<DetectionTotals>(paths.detection_totals,
                                              [](std::istream &in) { return read_detection_totals(in); });
        r.per_response_G = gaps_from_records(r.records);
        if (r.records.size() != r.totals.conflict_records || r.per_response_G.size() != r.totals.conflicting_responses)
            throw IntegrityError("conflict records disagree with detection totals");
        return r;
    }

    RunArtifacts cmd_run(const ExperimentConfig &config, std::ostream &log)
    {
        const GenOutcome g = load_generated(config);
        const auto paths = artifact_paths(config.out_dir);

        const auto wall_start = std::chrono::steady_clock::now();
        RunArtifacts a = run_experiment(g.network, g.profile, config.settings());
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

        write_file(paths.tweets, [&](std::ostream &out) { write_tweet_log(out, a.tweet_log); });
        write_file(paths.responses, [&](std::ostream &out) { write_response_log(out, a.response_log); });
        write_file(paths.traces, [&](std::ostream &out) { write_traces(out, a.traces); });
        write_file(paths.run_stats, [&](std::ostream &out) { out << run_stats_json(a.stats).dump(2) << '\n'; });

        const double vs = a.stats.virtual_seconds;
        log << fmt::format("run: {} tweets, {} responses, {} events over {:.0f} virtual s\n", a.stats.tweets,
                           a.stats.responses, a.stats.events_processed, vs);
        if (vs > 0.0)
            log << fmt::format("run: {:.3f} tweets/s, {:.3f} responses/s, {:.3f} timeline writes/s (virtual)\n",
                               static_cast<double>(a.stats.tweets) / vs, static_cast<double>(a.stats.responses) / vs,
                               static_cast<double>(a.stats.timeline_writes) / vs);
        log << fmt::format("run: {} CAS failures, mean lag {:.1f} ms, wall {:.2f} s\n", a.stats.cas_failures,
                           a.stats.mean_lag_ms, wall);
        return a;
    }

    DetectionResult cmd_detect(const ExperimentConfig &config, std::ostream &log)
    {
        const GenOutcome g = load_generated(config);
        const auto paths = artifact_paths(config.out_dir);
        const auto tweets = load_tweets(paths);
        const auto responses = load_responses(paths);

        DetectionResult r = detect_all(responses, tweets, g.network,
                                       DetectionConfig{config.analysis_window_fraction, config.n_timeline});
        write_file(paths.conflicts, [&](std::ostream &out) { write_conflicts(out, r.records); });
        write_file(paths.detection_totals, [&](std::ostream &out) { write_detection_totals(out, r.totals); });
        log << fmt::format("detect: {} of {} responses analyzed, {} conflicting, {} records ({} gap, {} newer-earlier)\n",
                           r.totals.analyzed_responses, r.totals.total_responses, r.totals.conflicting_responses,
                           r.totals.conflict_records, r.totals.gap_records, r.totals.newer_earlier_records);
        return r;
    }

    AnalyticsReport cmd_report(const ExperimentConfig &config, std::ostream &log)
    {
        const GenOutcome g = load_generated(config);
        const auto paths = artifact_paths(config.out_dir);
        const auto tweets = load_tweets(paths);
        const auto responses = load_responses(paths);
        const TweetIndex index(tweets);
        const DetectionResult r = load_detection(paths, index);

        const std::size_t first = analysis_window_start(responses.size(), config.analysis_window_fraction);
        if (responses.size() != r.totals.total_responses || responses.size() - first != r.totals.analyzed_responses)
            throw IntegrityError("detection totals do not match the response log and analysis window");

        const ActivityCounts activity = count_activity(tweets, responses, g.network, first);
        AnalyticsReport report = analyze(r, g.network, activity);
        emit_report(report, paths.report_dir);
        log << fmt::format("report: written to {}\n", paths.report_dir.string());
        return report;
    }

    bool ReproOutcome::all_pass() const
    {
        if (!stages_ok)
            return false;
        for (const auto &c : checks)
            if (!c.pass)
                return false;
        return true;
    }

    ReproOutcome cmd_repro(const ExperimentConfig &config, std::ostream &log)
    {
        ReproOutcome out;
        const GenOutcome g = stage("gen", [&] { return cmd_gen(config, log); });
        const RunArtifacts a = stage("run", [&] { return cmd_run(config, log); });
        const DetectionResult r = stage("detect", [&] { return cmd_detect(config, log); });
        const AnalyticsReport report = stage("report", [&] { return cmd_report(config, log); });
        out.stages_ok = g.validation.pass;

        out.checks.push_back(check_workload(g.validation));
        if (config.zero_delay())
        {
            out.checks.push_back(check_zero_conflicts(r));
        }
        else
        {
            out.checks.push_back(check_gap_bound(r, a.traces));
            out.checks.push_back(check_anomaly_regime(report));
            out.checks.push_back(check_correlations(report.studies));
        }
        for (const auto &c : out.checks)
            log << format_check(c) << '\n';
        return out;
    }
}
