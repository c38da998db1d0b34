#include "feedsim/analytics.hpp"

#include "feedsim/errors.hpp"
#include "feedsim/formats.hpp"
#include "feedsim/stats.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <fmt/core.h>
#include <json.hpp>

namespace feedsim
{
    double inconsistency_rate(const DetectionResult &result)
    {
        if (result.totals.analyzed_responses == 0)
            throw std::domain_error("inconsistency rate undefined: no responses analyzed");
        return static_cast<double>(result.totals.conflicting_responses) /
               static_cast<double>(result.totals.analyzed_responses);
    }

    std::uint64_t GapHistogram::total() const
    {
        std::uint64_t n = 0;
        for (const auto &[bucket, count] : counts)
            n += count;
        return n;
    }

    GapHistogram gap_histogram(const DetectionResult &result, double bucket_width_s)
    {
        if (!(bucket_width_s > 0.0))
            throw std::invalid_argument("histogram bucket width must be positive");
        GapHistogram h;
        h.bucket_width = VirtualTime::from_seconds(bucket_width_s);
        if (h.bucket_width.micros <= 0)
            throw std::invalid_argument("histogram bucket width below 1us");
        for (const auto &g : result.per_response_G)
            ++h.counts[g.G.micros / h.bucket_width.micros];
        return h;
    }

    GapSummary summarize_gaps(const DetectionResult &result)
    {
        GapSummary s;
        std::int64_t sum = 0, max = 0;
        for (const auto &g : result.per_response_G)
        {
            ++s.count;
            sum += g.G.micros;
            max = std::max(max, g.G.micros);
            if (g.G.micros > 1'000'000)
                ++s.count_G_above_1s;
        }
        if (s.count > 0)
        {
            s.mean_G_s = static_cast<double>(sum) / static_cast<double>(s.count) / 1e6;
            s.max_G_s = static_cast<double>(max) / 1e6;
        }
        return s;
    }

    std::map<std::uint32_t, std::uint64_t> attribute_to_producers(const DetectionResult &result,
                                                                 const FollowingNetwork &network)
    {
        std::map<std::uint32_t, std::uint64_t> out;
        for (const auto &rec : result.records)
        {
            if (index(rec.missing.producer) >= network.n_producers())
                throw IntegrityError(fmt::format("conflict attributed to unknown producer {}",
                                                 index(rec.missing.producer)));
            ++out[index(rec.missing.producer)];
        }
        return out;
    }

    ActivityCounts count_activity(std::span<const TweetEvent> tweets, std::span<const TimelineResponse> responses,
                                  const FollowingNetwork &network, std::size_t first_analyzed)
    {
        ActivityCounts a;
        a.producer_tweets.assign(network.n_producers(), 0);
        a.consumer_queries.assign(network.n_consumers(), 0);
        for (const auto &t : tweets)
            ++a.producer_tweets.at(index(t.producer));
        for (std::size_t i = first_analyzed; i < responses.size(); ++i)
            ++a.consumer_queries.at(index(responses[i].consumer));
        return a;
    }

    CorrelationStudy make_study(std::string name, std::string x_label, std::string y_label,
                                std::span<const double> x, std::span<const double> y, bool log_log)
    {
        if (x.size() != y.size())
            throw std::invalid_argument("study: x and y sizes differ");
        CorrelationStudy s;
        s.name = std::move(name);
        s.x_label = std::move(x_label);
        s.y_label = std::move(y_label);
        s.log_log = log_log;
        s.population = x.size();
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            if (log_log && !(x[i] > 0.0 && y[i] > 0.0))
                continue;
            s.points.emplace_back(x[i], y[i]);
            xs.push_back(x[i]);
            ys.push_back(y[i]);
        }
        const std::set<double> distinct_x(xs.begin(), xs.end());
        if (distinct_x.size() >= 3)
            s.spearman = spearman(xs, ys);
        s.degenerate = !s.spearman.has_value();
        return s;
    }

    std::array<CorrelationStudy, 4> correlation_studies(const DetectionResult &result, const FollowingNetwork &network,
                                                        const ActivityCounts &activity)
    {
        if (activity.producer_tweets.size() != network.n_producers() ||
            activity.consumer_queries.size() != network.n_consumers())
            throw std::invalid_argument("activity counts do not match the network");

        std::vector<double> caused(network.n_producers(), 0.0), encountered(network.n_consumers(), 0.0);
        for (const auto &rec : result.records)
        {
            caused.at(index(rec.missing.producer)) += 1.0;
            encountered.at(index(rec.consumer)) += 1.0;
        }

        std::vector<double> followers(network.n_producers()), tweets(network.n_producers());
        for (std::uint32_t p = 0; p < network.n_producers(); ++p)
        {
            followers[p] = static_cast<double>(network.followers(ProducerId{p}).size());
            tweets[p] = static_cast<double>(activity.producer_tweets[p]);
        }
        std::vector<double> follows(network.n_consumers()), queries(network.n_consumers());
        for (std::uint32_t c = 0; c < network.n_consumers(); ++c)
        {
            follows[c] = static_cast<double>(network.follows(ConsumerId{c}).size());
            queries[c] = static_cast<double>(activity.consumer_queries[c]);
        }

        return {
            make_study("producer_followers", "producer follower count", "conflicts caused", followers, caused),
            make_study("producer_tweets", "producer tweet count", "conflicts caused", tweets, caused),
            make_study("consumer_follows", "consumer followed count", "conflicts encountered", follows, encountered),
            make_study("consumer_queries", "consumer query count", "conflicts encountered", queries, encountered),
        };
    }

    AnalyticsReport analyze(const DetectionResult &result, const FollowingNetwork &network,
                            const ActivityCounts &activity, double bucket_width_s)
    {
        AnalyticsReport r;
        r.totals = result.totals;
        if (result.totals.analyzed_responses > 0)
            r.inconsistency_rate = inconsistency_rate(result);
        r.histogram = gap_histogram(result, bucket_width_s);
        r.gaps = summarize_gaps(result);
        r.producer_conflicts = attribute_to_producers(result, network);
        r.studies = correlation_studies(result, network, activity);
        return r;
    }

    namespace
    {
        std::ofstream open_out(const std::filesystem::path &path)
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw std::runtime_error(fmt::format("cannot write {}", path.string()));
            return out;
        }

        void close_checked(std::ofstream &out, const std::filesystem::path &path)
        {
            out.close();
            if (!out)
                throw std::runtime_error(fmt::format("error writing {}", path.string()));
        }
    }

    void emit_report(const AnalyticsReport &report, const std::filesystem::path &out_dir)
    {
        std::filesystem::create_directories(out_dir);
        using ojson = nlohmann::ordered_json;

        ojson totals;
        totals["total_responses"] = report.totals.total_responses;
        totals["analyzed_responses"] = report.totals.analyzed_responses;
        totals["first_analyzed_response_id"] = report.totals.first_analyzed_response_id;
        totals["conflicting_responses"] = report.totals.conflicting_responses;
        totals["conflict_records"] = report.totals.conflict_records;
        totals["gap_records"] = report.totals.gap_records;
        totals["newer_earlier_records"] = report.totals.newer_earlier_records;
        totals["missing_tweets"] = report.totals.missing_tweets;
        totals["inconsistency_rate"] =
            report.inconsistency_rate ? ojson(*report.inconsistency_rate) : ojson(nullptr);
        totals["mean_G_seconds"] = report.gaps.mean_G_s;
        totals["max_G_seconds"] = report.gaps.max_G_s;
        totals["count_G_above_1s"] = report.gaps.count_G_above_1s;
        totals["histogram_bucket_width_seconds"] = report.histogram.bucket_width.seconds();
        totals["histogram_total"] = report.histogram.total();
        ojson producers = ojson::object();
        for (const auto &[p, n] : report.producer_conflicts)
            producers[std::to_string(p)] = n;
        totals["producer_conflicts"] = std::move(producers);
        ojson studies = ojson::array();
        for (const auto &s : report.studies)
        {
            ojson js;
            js["name"] = s.name;
            js["x_label"] = s.x_label;
            js["y_label"] = s.y_label;
            js["log_log"] = s.log_log;
            js["population"] = s.population;
            js["points"] = s.points.size();
            js["spearman"] = s.spearman ? ojson(*s.spearman) : ojson(nullptr);
            js["degenerate"] = s.degenerate;
            studies.push_back(std::move(js));
        }
        totals["studies"] = std::move(studies);

        {
            const auto path = out_dir / "report_totals.json";
            auto out = open_out(path);
            out << totals.dump(2) << '\n';
            close_checked(out, path);
        }
        {
            const auto path = out_dir / "gap_histogram.csv";
            auto out = open_out(path);
            out << "bucket_start_s,count\n";
            for (const auto &[bucket, count] : report.histogram.counts)
                out << format_real(static_cast<double>(bucket * report.histogram.bucket_width.micros) / 1e6) << ','
                    << count << '\n';
            close_checked(out, path);
        }
        for (const auto &s : report.studies)
        {
            const auto path = out_dir / ("study_" + s.name + ".csv");
            auto out = open_out(path);
            out << "x,y\n";
            for (const auto &[x, y] : s.points)
                out << format_real(x) << ',' << format_real(y) << '\n';
            close_checked(out, path);
        }
        {
            const auto path = out_dir / "summary.txt";
            auto out = open_out(path);
            out << fmt::format("responses analyzed:      {} of {}\n", report.totals.analyzed_responses,
                               report.totals.total_responses);
            out << fmt::format("conflicting responses:   {}\n", report.totals.conflicting_responses);
            out << fmt::format("conflict records:        {} (gap {}, newer-earlier {})\n",
                               report.totals.conflict_records, report.totals.gap_records,
                               report.totals.newer_earlier_records);
            out << fmt::format("missing tweets:          {}\n", report.totals.missing_tweets);
            if (report.inconsistency_rate)
                out << fmt::format("inconsistency rate:      {:.4f}%\n", *report.inconsistency_rate * 100.0);
            else
                out << "inconsistency rate:      n/a\n";
            out << fmt::format("mean G:                  {:.3f} s\n", report.gaps.mean_G_s);
            out << fmt::format("max G:                   {:.3f} s\n", report.gaps.max_G_s);
            out << fmt::format("G above 1 s:             {} of {}\n", report.gaps.count_G_above_1s, report.gaps.count);
            out << fmt::format("G histogram ({:g} s buckets):\n", report.histogram.bucket_width.seconds());
            for (const auto &[bucket, count] : report.histogram.counts)
            {
                const double lo = static_cast<double>(bucket * report.histogram.bucket_width.micros) / 1e6;
                out << fmt::format("  [{:>7g}, {:>7g}) {}\n", lo, lo + report.histogram.bucket_width.seconds(), count);
            }
            out << "correlations (Spearman, log-log points only):\n";
            for (const auto &s : report.studies)
            {
                out << fmt::format("  {:<20} {:>8} over {} of {} points{}\n", s.name,
                                   s.spearman ? fmt::format("{:+.4f}", *s.spearman) : std::string("n/a"),
                                   s.points.size(), s.population, s.degenerate ? " (degenerate)" : "");
            }
            close_checked(out, path);
        }
    }
}
