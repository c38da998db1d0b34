#include "feedsim/formats.hpp"

#include "feedsim/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/core.h>
#include <json.hpp>

namespace feedsim
{
    namespace
    {
        using json = nlohmann::json;

        // Howard Hinnant's civil calendar conversions.
        constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept
        {
            y -= m <= 2;
            const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
            const auto yoe = static_cast<unsigned>(y - era * 400);
            const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
            const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
            return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
        }

        struct Civil
        {
            std::int64_t y;
            unsigned m, d;
        };

        constexpr Civil civil_from_days(std::int64_t z) noexcept
        {
            z += 719468;
            const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
            const auto doe = static_cast<unsigned>(z - era * 146097);
            const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
            const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
            const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
            const unsigned mp = (5 * doy + 2) / 153;
            const unsigned d = doy - (153 * mp + 2) / 5 + 1;
            const unsigned m = mp < 10 ? mp + 3 : mp - 9;
            return {y + (m <= 2), m, d};
        }

        constexpr std::int64_t kEpochDays = days_from_civil(2013, 1, 31);
        constexpr std::int64_t kMicrosPerDay = 86'400'000'000LL;

        int parse_digits(std::string_view text, std::size_t pos, std::size_t count)
        {
            if (pos + count > text.size())
                throw IntegrityError(fmt::format("malformed timestamp '{}'", text));
            int value = 0;
            for (std::size_t i = pos; i < pos + count; ++i)
            {
                const char c = text[i];
                if (c < '0' || c > '9')
                    throw IntegrityError(fmt::format("malformed timestamp '{}'", text));
                value = value * 10 + (c - '0');
            }
            return value;
        }

        std::uint32_t parse_id(const json &value, std::string_view field)
        {
            std::uint64_t id = 0;
            if (value.is_string())
            {
                const auto &s = value.get_ref<const std::string &>();
                auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
                if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
                    throw IntegrityError(fmt::format("field '{}' is not a numeric id: '{}'", field, s));
            }
            else if (value.is_number_unsigned())
            {
                id = value.get<std::uint64_t>();
            }
            else
            {
                throw IntegrityError(fmt::format("field '{}' has the wrong type", field));
            }
            if (id > 0xFFFFFFFFull)
                throw IntegrityError(fmt::format("field '{}' id out of range", field));
            return static_cast<std::uint32_t>(id);
        }

        template <class Fn>
        void for_each_json_line(std::istream &in, Fn &&fn)
        {
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line))
            {
                ++line_no;
                if (line.empty())
                    continue;
                json j;
                try
                {
                    j = json::parse(line);
                    fn(j);
                }
                catch (const json::exception &e)
                {
                    throw IntegrityError(fmt::format("line {}: {}", line_no, e.what()));
                }
                catch (const IntegrityError &e)
                {
                    throw IntegrityError(fmt::format("line {}: {}", line_no, e.what()));
                }
            }
        }

        const json &field(const json &j, const char *name)
        {
            auto it = j.find(name);
            if (it == j.end())
                throw IntegrityError(fmt::format("missing field '{}'", name));
            return *it;
        }
    }

    std::string format_timestamp(VirtualTime t)
    {
        const std::int64_t days = t.micros / kMicrosPerDay;
        std::int64_t rem = t.micros % kMicrosPerDay;
        const Civil c = civil_from_days(kEpochDays + days);
        const auto us = rem % 1'000'000;
        rem /= 1'000'000;
        return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:06d}", c.y, c.m, c.d, rem / 3600,
                           (rem / 60) % 60, rem % 60, us);
    }

    VirtualTime parse_timestamp(std::string_view text)
    {
        if (text.size() != 26 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
            text[16] != ':' || text[19] != '.')
            throw IntegrityError(fmt::format("malformed timestamp '{}'", text));
        const int y = parse_digits(text, 0, 4);
        const int mo = parse_digits(text, 5, 2);
        const int d = parse_digits(text, 8, 2);
        const int h = parse_digits(text, 11, 2);
        const int mi = parse_digits(text, 14, 2);
        const int s = parse_digits(text, 17, 2);
        const int us = parse_digits(text, 20, 6);
        if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 59)
            throw IntegrityError(fmt::format("timestamp out of range '{}'", text));
        const std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) - kEpochDays;
        const std::int64_t micros = days * kMicrosPerDay + ((h * 60LL + mi) * 60LL + s) * 1'000'000LL + us;
        if (micros < 0)
            throw IntegrityError(fmt::format("timestamp precedes the simulation epoch '{}'", text));
        return VirtualTime{micros};
    }

    std::string format_real(double value)
    {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
        (void)ec;
        return std::string(buf, ptr);
    }

    void write_network(std::ostream &out, const FollowingNetwork &network, const WorkloadProfile &profile)
    {
        for (std::uint32_t c = 0; c < network.n_consumers(); ++c)
        {
            out << "{\"c\": " << c << ", \"p\": [";
            const auto follows = network.follows(ConsumerId{c});
            for (std::size_t i = 0; i < follows.size(); ++i)
                out << (i ? ", " : "") << index(follows[i]);
            out << "]}\n";
        }
        for (std::size_t p = 0; p < profile.producer_rate.size(); ++p)
            out << "{\"producer\": " << p << ", \"rate_per_hour\": " << format_real(profile.producer_rate[p]) << "}\n";
        for (std::size_t c = 0; c < profile.consumer_rate.size(); ++c)
            out << "{\"consumer\": " << c << ", \"rate_per_hour\": " << format_real(profile.consumer_rate[c]) << "}\n";
    }

    NetworkFile read_network(std::istream &in)
    {
        std::vector<std::vector<ProducerId>> follows;
        std::vector<double> producer_rate, consumer_rate;
        std::uint32_t max_producer_plus_one = 0;
        for_each_json_line(in, [&](const json &j) {
            if (j.contains("c"))
            {
                if (parse_id(field(j, "c"), "c") != follows.size())
                    throw IntegrityError("consumer lines must be dense and ascending");
                auto &list = follows.emplace_back();
                for (const auto &p : field(j, "p"))
                {
                    const auto id = parse_id(p, "p");
                    list.push_back(ProducerId{id});
                    max_producer_plus_one = std::max(max_producer_plus_one, id + 1);
                }
            }
            else if (j.contains("producer"))
            {
                if (parse_id(field(j, "producer"), "producer") != producer_rate.size())
                    throw IntegrityError("producer rate lines must be dense and ascending");
                producer_rate.push_back(field(j, "rate_per_hour").get<double>());
            }
            else if (j.contains("consumer"))
            {
                if (parse_id(field(j, "consumer"), "consumer") != consumer_rate.size())
                    throw IntegrityError("consumer rate lines must be dense and ascending");
                consumer_rate.push_back(field(j, "rate_per_hour").get<double>());
            }
            else
            {
                throw IntegrityError("unrecognized network record");
            }
        });
        const auto n_producers = std::max<std::uint32_t>(max_producer_plus_one, static_cast<std::uint32_t>(producer_rate.size()));
        if (consumer_rate.size() != follows.size() || producer_rate.size() != n_producers)
            throw IntegrityError("network file: rate sections do not match the population");
        NetworkFile out;
        try
        {
            out.network = FollowingNetwork::from_follows(n_producers, std::move(follows));
        }
        catch (const ConfigError &e)
        {
            throw IntegrityError(e.what());
        }
        out.producer_rate = std::move(producer_rate);
        out.consumer_rate = std::move(consumer_rate);
        return out;
    }

    void write_tweet_log(std::ostream &out, const std::vector<TweetEvent> &tweets)
    {
        for (const auto &t : tweets)
        {
            out << fmt::format("{{\"producer_id\": \"{}\", \"t\": \"{}\", \"seq\": {}}}\n", index(t.producer),
                               format_timestamp(t.t), t.seq);
        }
    }

    std::vector<TweetEvent> read_tweet_log(std::istream &in)
    {
        std::vector<TweetEvent> tweets;
        for_each_json_line(in, [&](const json &j) {
            TweetEvent t;
            t.producer = ProducerId{parse_id(field(j, "producer_id"), "producer_id")};
            t.t = parse_timestamp(field(j, "t").get<std::string>());
            t.seq = field(j, "seq").get<std::uint64_t>();
            tweets.push_back(t);
        });
        return tweets;
    }

    void write_response_log(std::ostream &out, const std::vector<TimelineResponse> &responses)
    {
        std::string line;
        for (const auto &r : responses)
        {
            line = fmt::format("{{\"response_id\": {}, \"consumer_id\": \"{}\", \"T\": \"{}\", \"entries\": [",
                               r.response_id, index(r.consumer), format_timestamp(r.T));
            for (std::size_t i = 0; i < r.entries.size(); ++i)
            {
                line += fmt::format("{}{{\"producer_id\": \"{}\", \"t\": \"{}\"}}", i ? ", " : "",
                                    index(r.entries[i].producer), format_timestamp(r.entries[i].t));
            }
            line += "]}\n";
            out << line;
        }
    }

    std::vector<TimelineResponse> read_response_log(std::istream &in)
    {
        std::vector<TimelineResponse> responses;
        for_each_json_line(in, [&](const json &j) {
            TimelineResponse r;
            r.response_id = field(j, "response_id").get<std::uint64_t>();
            r.consumer = ConsumerId{parse_id(field(j, "consumer_id"), "consumer_id")};
            r.T = parse_timestamp(field(j, "T").get<std::string>());
            for (const auto &e : field(j, "entries"))
            {
                r.entries.push_back(ResponseEntry{ProducerId{parse_id(field(e, "producer_id"), "producer_id")},
                                                  parse_timestamp(field(e, "t").get<std::string>())});
            }
            responses.push_back(std::move(r));
        });
        return responses;
    }

    void write_traces(std::ostream &out, const std::vector<TweetTrace> &traces)
    {
        for (const auto &t : traces)
        {
            out << fmt::format("{{\"seq\": {}, \"fanout_tasks\": {}, \"completed\": {}, \"retries\": {}, "
                               "\"max_completion_delay_us\": {}, \"max_lag_us\": {}}}\n",
                               t.seq, t.fanout_tasks, t.completed, t.retries, t.max_completion_delay.micros,
                               t.max_lag.micros);
        }
    }

    std::vector<TweetTrace> read_traces(std::istream &in)
    {
        std::vector<TweetTrace> traces;
        for_each_json_line(in, [&](const json &j) {
            TweetTrace t;
            t.seq = field(j, "seq").get<std::uint64_t>();
            t.fanout_tasks = field(j, "fanout_tasks").get<std::uint32_t>();
            t.completed = field(j, "completed").get<std::uint32_t>();
            t.retries = field(j, "retries").get<std::uint32_t>();
            t.max_completion_delay = VirtualTime{field(j, "max_completion_delay_us").get<std::int64_t>()};
            t.max_lag = VirtualTime{field(j, "max_lag_us").get<std::int64_t>()};
            traces.push_back(t);
        });
        return traces;
    }

    void write_conflicts(std::ostream &out, const std::vector<ConflictRecord> &records)
    {
        for (const auto &r : records)
        {
            out << fmt::format("{{\"response_id\": {}, \"consumer_id\": \"{}\", \"producer_id\": \"{}\", \"t\": \"{}\", "
                               "\"type\": \"{}\", \"witness_response_id\": {}, \"G_seconds\": {}.{:06d}}}\n",
                               r.response_id, index(r.consumer), index(r.missing.producer),
                               format_timestamp(r.missing.t), to_string(r.type), r.witness_response_id,
                               r.gap_contribution.micros / 1'000'000, r.gap_contribution.micros % 1'000'000);
        }
    }

    std::vector<ConflictRecord> read_conflicts(std::istream &in, const TweetIndex &tweets)
    {
        std::vector<ConflictRecord> records;
        for_each_json_line(in, [&](const json &j) {
            ConflictRecord r;
            r.response_id = field(j, "response_id").get<std::uint64_t>();
            r.consumer = ConsumerId{parse_id(field(j, "consumer_id"), "consumer_id")};
            const ProducerId producer{parse_id(field(j, "producer_id"), "producer_id")};
            const VirtualTime t = parse_timestamp(field(j, "t").get<std::string>());
            const TweetEvent *tweet = tweets.find(producer, t);
            if (tweet == nullptr)
                throw IntegrityError("conflict record names a tweet missing from the tweet log");
            r.missing = *tweet;
            r.type = conflict_type_from_string(field(j, "type").get<std::string>());
            r.witness_response_id = field(j, "witness_response_id").get<std::uint64_t>();
            r.gap_contribution = VirtualTime{std::llround(field(j, "G_seconds").get<double>() * 1e6)};
            records.push_back(r);
        });
        return records;
    }

    void write_detection_totals(std::ostream &out, const DetectionTotals &t)
    {
        nlohmann::ordered_json j;
        j["total_responses"] = t.total_responses;
        j["analyzed_responses"] = t.analyzed_responses;
        j["first_analyzed_response_id"] = t.first_analyzed_response_id;
        j["conflicting_responses"] = t.conflicting_responses;
        j["conflict_records"] = t.conflict_records;
        j["gap_records"] = t.gap_records;
        j["newer_earlier_records"] = t.newer_earlier_records;
        j["missing_tweets"] = t.missing_tweets;
        j["responses_with_missing"] = t.responses_with_missing;
        out << j.dump(2) << '\n';
    }

    DetectionTotals read_detection_totals(std::istream &in)
    {
        json j;
        try
        {
            j = json::parse(in);
        }
        catch (const json::exception &e)
        {
            throw IntegrityError(fmt::format("detection totals: {}", e.what()));
        }
        DetectionTotals t;
        auto get = [&](const char *name) {
            try
            {
                return field(j, name).get<std::uint64_t>();
            }
            catch (const json::exception &e)
            {
                throw IntegrityError(fmt::format("detection totals: {}", e.what()));
            }
        };
        t.total_responses = get("total_responses");
        t.analyzed_responses = get("analyzed_responses");
        t.first_analyzed_response_id = get("first_analyzed_response_id");
        t.conflicting_responses = get("conflicting_responses");
        t.conflict_records = get("conflict_records");
        t.gap_records = get("gap_records");
        t.newer_earlier_records = get("newer_earlier_records");
        t.missing_tweets = get("missing_tweets");
        t.responses_with_missing = get("responses_with_missing");
        return t;
    }

    std::vector<ResponseGap> gaps_from_records(const std::vector<ConflictRecord> &records)
    {
        std::vector<ResponseGap> gaps;
        for (const auto &r : records)
        {
            if (!gaps.empty() && gaps.back().response_id == r.response_id)
            {
                gaps.back().G = std::max(gaps.back().G, r.gap_contribution);
                continue;
            }
            if (!gaps.empty() && r.response_id < gaps.back().response_id)
                throw IntegrityError("conflict records are not grouped by ascending response id");
            gaps.push_back(ResponseGap{r.response_id, r.consumer, r.gap_contribution});
        }
        return gaps;
    }
}
