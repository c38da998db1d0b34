#include "feedsim/config.hpp"

#include "feedsim/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

namespace feedsim
{
    using ojson = nlohmann::ordered_json;

    std::string to_string(DelayDistribution::Kind kind)
    {
        return kind == DelayDistribution::Kind::Constant ? "constant" : "exponential";
    }

    DelayDistribution::Kind delay_kind_from_string(const std::string &name)
    {
        if (name == "constant")
            return DelayDistribution::Kind::Constant;
        if (name == "exponential")
            return DelayDistribution::Kind::Exponential;
        throw ConfigError(fmt::format("unknown distribution '{}' (expected constant|exponential)", name));
    }

    ExperimentSettings ExperimentConfig::settings() const
    {
        ExperimentSettings s;
        s.store = store;
        s.fanout = fanout;
        s.n_timeline = n_timeline;
        s.duration = VirtualTime::from_hours(duration_hours);
        s.seed = seed;
        return s;
    }

    bool ExperimentConfig::zero_delay() const
    {
        return store.lag.always_zero() && fanout.effective_service().always_zero();
    }

    namespace
    {
        ojson zipf_to_json(const ZipfTarget &t) { return ojson{{"mean", t.mean}, {"s", t.s}}; }
        ojson delay_to_json(const DelayDistribution &d)
        {
            return ojson{{"kind", to_string(d.kind)}, {"mean_ms", d.mean_ms}};
        }

        // Reads `obj` strictly: only `allowed` keys, each with the expected JSON type.
        class Reader
        {
        public:
            Reader(const ojson &obj, std::string path, std::set<std::string> allowed) : obj_(obj), path_(std::move(path))
            {
                if (!obj_.is_object())
                    throw ConfigError(fmt::format("'{}' must be an object", path_));
                for (const auto &[key, value] : obj_.items())
                {
                    (void)value;
                    if (!allowed.contains(key))
                        throw ConfigError(fmt::format("unknown key '{}{}'", prefix(), key));
                }
            }

            template <class T>
            void get(const char *key, T &out) const
            {
                auto it = obj_.find(key);
                if (it == obj_.end())
                    return;
                try
                {
                    if constexpr (std::is_floating_point_v<T>)
                    {
                        if (!it->is_number())
                            throw ConfigError("");
                    }
                    else if constexpr (std::is_integral_v<T>)
                    {
                        if (!it->is_number_unsigned())
                            throw ConfigError("");
                    }
                    else if constexpr (std::is_same_v<T, std::string>)
                    {
                        if (!it->is_string())
                            throw ConfigError("");
                    }
                    out = it->template get<T>();
                }
                catch (const std::exception &)
                {
                    throw ConfigError(fmt::format("key '{}{}' has the wrong type", prefix(), key));
                }
            }

            const ojson *child(const char *key) const
            {
                auto it = obj_.find(key);
                return it == obj_.end() ? nullptr : &*it;
            }

            std::string prefix() const { return path_.empty() ? "" : path_ + "."; }

        private:
            const ojson &obj_;
            std::string path_;
        };

        void read_zipf_target(const ojson *j, const std::string &path, ZipfTarget &t)
        {
            if (!j)
                return;
            Reader r(*j, path, {"mean", "s"});
            r.get("mean", t.mean);
            r.get("s", t.s);
        }

        void read_delay(const ojson *j, const std::string &path, DelayDistribution &d)
        {
            if (!j)
                return;
            Reader r(*j, path, {"kind", "mean_ms"});
            std::string kind = to_string(d.kind);
            r.get("kind", kind);
            d.kind = delay_kind_from_string(kind);
            r.get("mean_ms", d.mean_ms);
        }
    }

    std::string serialize_config(const ExperimentConfig &c)
    {
        ojson j;
        j["seed"] = c.seed;
        j["scale"] = c.scale;
        j["n_producers"] = c.n_producers;
        j["n_consumers"] = c.n_consumers;
        j["zipf"] = ojson{{"consumers_per_producer", zipf_to_json(c.zipf.consumers_per_producer)},
                          {"producers_per_consumer", zipf_to_json(c.zipf.producers_per_consumer)},
                          {"producer_rate", zipf_to_json(c.zipf.producer_rate)},
                          {"consumer_rate", zipf_to_json(c.zipf.consumer_rate)}};
        j["store"] = ojson{{"n_replicas", c.store.n_replicas}, {"lag", delay_to_json(c.store.lag)}};
        j["fanout"] = ojson{{"service", delay_to_json(c.fanout.service)},
                            {"delay_scale", c.fanout.delay_scale},
                            {"concurrency_cap", c.fanout.concurrency_cap},
                            {"retry_backoff_ms", c.fanout.retry_backoff_ms}};
        j["n_timeline"] = c.n_timeline;
        j["duration_hours"] = c.duration_hours;
        j["analysis_window_fraction"] = c.analysis_window_fraction;
        j["out_dir"] = c.out_dir;
        return j.dump(2) + "\n";
    }

    ExperimentConfig parse_config(const std::string &text)
    {
        ojson j;
        try
        {
            j = ojson::parse(text);
        }
        catch (const ojson::exception &e)
        {
            throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
        }

        ExperimentConfig c;
        Reader top(j, "",
                   {"seed", "scale", "n_producers", "n_consumers", "zipf", "store", "fanout", "n_timeline",
                    "duration_hours", "analysis_window_fraction", "out_dir"});
        top.get("seed", c.seed);
        top.get("scale", c.scale);
        top.get("n_producers", c.n_producers);
        top.get("n_consumers", c.n_consumers);
        top.get("n_timeline", c.n_timeline);
        top.get("duration_hours", c.duration_hours);
        top.get("analysis_window_fraction", c.analysis_window_fraction);
        top.get("out_dir", c.out_dir);

        if (const auto *z = top.child("zipf"))
        {
            Reader r(*z, "zipf", {"consumers_per_producer", "producers_per_consumer", "producer_rate", "consumer_rate"});
            read_zipf_target(r.child("consumers_per_producer"), "zipf.consumers_per_producer",
                             c.zipf.consumers_per_producer);
            read_zipf_target(r.child("producers_per_consumer"), "zipf.producers_per_consumer",
                             c.zipf.producers_per_consumer);
            read_zipf_target(r.child("producer_rate"), "zipf.producer_rate", c.zipf.producer_rate);
            read_zipf_target(r.child("consumer_rate"), "zipf.consumer_rate", c.zipf.consumer_rate);
        }
        if (const auto *s = top.child("store"))
        {
            Reader r(*s, "store", {"n_replicas", "lag"});
            r.get("n_replicas", c.store.n_replicas);
            read_delay(r.child("lag"), "store.lag", c.store.lag);
        }
        if (const auto *f = top.child("fanout"))
        {
            Reader r(*f, "fanout", {"service", "delay_scale", "concurrency_cap", "retry_backoff_ms"});
            read_delay(r.child("service"), "fanout.service", c.fanout.service);
            r.get("delay_scale", c.fanout.delay_scale);
            r.get("concurrency_cap", c.fanout.concurrency_cap);
            r.get("retry_backoff_ms", c.fanout.retry_backoff_ms);
        }
        validate_config(c);
        return c;
    }

    ExperimentConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ConfigError(fmt::format("cannot read config {}", path.string()));
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_config(buf.str());
    }

    void validate_config(const ExperimentConfig &c)
    {
        if (c.n_producers < 1 || c.n_consumers < 1)
            throw ConfigError("n_producers and n_consumers must be >= 1");
        if (!(c.scale > 0.0) || c.scale > 1.0)
            throw ConfigError("scale must be in (0, 1]");
        if (c.store.n_replicas < 1)
            throw ConfigError("store.n_replicas must be >= 1");
        if (c.store.lag.mean_ms < 0.0 || c.fanout.service.mean_ms < 0.0 || c.fanout.delay_scale < 0.0)
            throw ConfigError("delays must be non-negative");
        if (!(c.fanout.retry_backoff_ms > 0.0))
            throw ConfigError("fanout.retry_backoff_ms must be positive");
        if (c.n_timeline < 1)
            throw ConfigError("n_timeline must be >= 1");
        if (!(c.duration_hours >= 0.0))
            throw ConfigError("duration_hours must be non-negative");
        if (!(c.analysis_window_fraction > 0.0) || c.analysis_window_fraction > 1.0)
            throw ConfigError("analysis_window_fraction must be in (0, 1]");
        for (const ZipfTarget *t : {&c.zipf.consumers_per_producer, &c.zipf.producers_per_consumer,
                                    &c.zipf.producer_rate, &c.zipf.consumer_rate})
        {
            if (!(t->mean > 0.0) || !(t->s >= 0.0))
                throw ConfigError("zipf means must be positive and exponents non-negative");
        }
    }
}
