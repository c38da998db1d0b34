#pragma once

#include "feedsim/analytics.hpp"
#include "feedsim/checks.hpp"
#include "feedsim/config.hpp"
#include "feedsim/detector.hpp"
#include "feedsim/feed_app.hpp"
#include "feedsim/network_gen.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace feedsim
{
    /// A stage failed; what() carries the cause, stage() the stage name.
    class StageError : public std::runtime_error
    {
    public:
        StageError(std::string stage, const std::string &what)
            : std::runtime_error(stage + ": " + what), stage_(std::move(stage))
        {
        }
        const std::string &stage() const noexcept { return stage_; }

    private:
        std::string stage_;
    };

    struct ArtifactPaths
    {
        std::filesystem::path root;
        std::filesystem::path network;
        std::filesystem::path validation;
        std::filesystem::path tweets;
        std::filesystem::path responses;
        std::filesystem::path traces;
        std::filesystem::path run_stats;
        std::filesystem::path conflicts;
        std::filesystem::path detection_totals;
        std::filesystem::path report_dir;
    };

    ArtifactPaths artifact_paths(const std::filesystem::path &out_dir);

    struct GenOutcome
    {
        FollowingNetwork network;
        WorkloadProfile profile;
        ValidationReport validation;
    };

    /// In-memory generation; the same seed yields the same network and profile.
    GenOutcome generate(const ExperimentConfig &config);
    ValidationReport validate_generated(const GenOutcome &gen);

    /// Each cmd_* reads its inputs from and writes its outputs to config.out_dir.
    /// Progress lines go to `log`.
    GenOutcome cmd_gen(const ExperimentConfig &config, std::ostream &log);
    RunArtifacts cmd_run(const ExperimentConfig &config, std::ostream &log);
    DetectionResult cmd_detect(const ExperimentConfig &config, std::ostream &log);
    AnalyticsReport cmd_report(const ExperimentConfig &config, std::ostream &log);

    struct ReproOutcome
    {
        bool stages_ok = false; // generation validated and every stage completed
        std::vector<CheckResult> checks;

        bool all_pass() const;
    };

    /// gen, run, detect, report, then the checks that apply to the config.
    /// Throws StageError when a stage cannot complete.
    ReproOutcome cmd_repro(const ExperimentConfig &config, std::ostream &log);

    // Artifact loaders; missing or corrupt files raise IntegrityError.
    GenOutcome load_generated(const ExperimentConfig &config);
    std::vector<TweetEvent> load_tweets(const ArtifactPaths &paths);
    std::vector<TimelineResponse> load_responses(const ArtifactPaths &paths);
    std::vector<TweetTrace> load_traces(const ArtifactPaths &paths);
    DetectionResult load_detection(const ArtifactPaths &paths, const TweetIndex &tweets);
}
