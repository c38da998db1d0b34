#include "feedsim/config.hpp"
#include "feedsim/errors.hpp"
#include "feedsim/pipeline.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

namespace
{
    enum ExitCode : int
    {
        kOk = 0,
        kCheckFailed = 1,
        kUsage = 2,
        kStageFailed = 3,
    };

    struct Options
    {
        std::string config_path;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> out;
        bool strict = false;
    };

    feedsim::ExperimentConfig resolve_config(const Options &opt)
    {
        feedsim::ExperimentConfig config;
        if (!opt.config_path.empty())
            config = feedsim::load_config(opt.config_path);
        if (const char *env = std::getenv("FEEDSIM_OUT"); env && *env)
            config.out_dir = env;
        if (opt.out)
            config.out_dir = *opt.out;
        if (opt.seed)
            config.seed = *opt.seed;
        feedsim::validate_config(config);
        return config;
    }

    int dispatch(const std::string &command, const feedsim::ExperimentConfig &config, const Options &opt)
    {
        auto &log = std::cout;
        if (command == "gen")
        {
            const auto check = feedsim::check_workload(feedsim::cmd_gen(config, log).validation);
            log << feedsim::format_check(check) << '\n';
            return check.pass ? kOk : kCheckFailed;
        }
        if (command == "run")
        {
            feedsim::cmd_run(config, log);
            return kOk;
        }
        if (command == "detect")
        {
            feedsim::cmd_detect(config, log);
            return kOk;
        }
        if (command == "report")
        {
            feedsim::cmd_report(config, log);
            return kOk;
        }
        const auto outcome = feedsim::cmd_repro(config, log);
        if (!outcome.stages_ok)
            return kCheckFailed;
        return opt.strict && !outcome.all_pass() ? kCheckFailed : kOk;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"feedsim: feed-following consistency experiments"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", opt.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--out", opt.out, "output directory (overrides config and FEEDSIM_OUT)");
    };

    std::string command;
    for (const char *name : {"gen", "run", "detect", "report", "repro"})
    {
        static const std::map<std::string, std::string> help = {
            {"gen", "generate the following network and workload profile"},
            {"run", "simulate and write tweet/response logs"},
            {"detect", "find observable conflicts in the logs"},
            {"report", "compute statistics and write report files"},
            {"repro", "gen, run, detect and report, then print PASS/FAIL checks"},
        };
        auto *sub = app.add_subcommand(name, help.at(name));
        add_common(sub);
        if (std::string(name) == "repro")
            sub->add_flag("--strict", opt.strict, "exit nonzero when any check fails");
        sub->callback([&command, name] { command = name; });
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e);
    }

    feedsim::ExperimentConfig config;
    try
    {
        config = resolve_config(opt);
    }
    catch (const feedsim::ConfigError &e)
    {
        std::cerr << "usage error: " << e.what() << '\n' << app.help();
        return kUsage;
    }

    try
    {
        return dispatch(command, config, opt);
    }
    catch (const feedsim::StageError &e)
    {
        std::cerr << "stage failed: " << e.what() << '\n';
    }
    catch (const feedsim::ConfigError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
    }
    catch (const std::exception &e)
    {
        std::cerr << command << " failed: " << e.what() << '\n';
    }
    return kStageFailed;
}
