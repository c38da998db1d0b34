#pragma once

#include "feedsim/feed_app.hpp"
#include "feedsim/kv_store.hpp"
#include "feedsim/network_gen.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace feedsim
{
    /// Everything one reproducible experiment needs. Serialized as JSON with these key names.
    struct ExperimentConfig
    {
        std::uint64_t seed = 20130131;
        double scale = 1.0; // multiplies both activity rates
        std::uint32_t n_producers = 679;
        std::uint32_t n_consumers = 1963;
        ZipfParams zipf;
        StoreConfig store;
        FanoutConfig fanout;
        std::size_t n_timeline = 20;
        double duration_hours = 2.0;
        double analysis_window_fraction = 0.5;
        std::string out_dir = "feedsim_out";

        bool operator==(const ExperimentConfig &) const = default;

        ExperimentSettings settings() const;
        /// Zero replication lag and zero fan-out service time.
        bool zero_delay() const;
    };

    /// Throws ConfigError on malformed text, unknown keys or out-of-range values.
    ExperimentConfig parse_config(const std::string &text);
    ExperimentConfig load_config(const std::filesystem::path &path);
    std::string serialize_config(const ExperimentConfig &config);

    /// Throws ConfigError on values no stage could run with.
    void validate_config(const ExperimentConfig &config);
}
