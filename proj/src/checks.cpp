#include "feedsim/checks.hpp"

#include "feedsim/errors.hpp"
#include "feedsim/stats.hpp"

#include <cmath>

#include <fmt/core.h>

namespace feedsim
{
    std::string format_check(const CheckResult &check)
    {
        return fmt::format("{} {}: {}", check.pass ? "PASS" : "FAIL", check.name, check.detail);
    }

    CheckResult check_workload(const ValidationReport &report)
    {
        CheckResult c{"workload fidelity", report.pass, ""};
        for (const auto &d : report.distributions)
            c.detail += fmt::format("{} {:.3f}/{:.3f} ", d.name, d.realized_mean, d.target_mean);
        for (const auto &i : report.independence)
        {
            if (i.applicable)
                c.detail += fmt::format("{} rho={:+.3f} ", i.name, i.spearman);
            else
                c.detail += fmt::format("{} n/a ", i.name);
        }
        if (!c.detail.empty())
            c.detail.pop_back();
        return c;
    }

    CheckResult check_zero_conflicts(const DetectionResult &result)
    {
        return {"conflicts", result.records.empty(),
                fmt::format("{} over {} analyzed responses", result.records.size(),
                            result.totals.analyzed_responses)};
    }

    std::vector<GapBoundViolation> gap_bound_violations(const DetectionResult &result,
                                                        std::span<const TweetTrace> traces)
    {
        std::vector<GapBoundViolation> out;
        for (const auto &rec : result.records)
        {
            if (rec.missing.seq >= traces.size() || traces[rec.missing.seq].seq != rec.missing.seq)
                throw IntegrityError(fmt::format("no trace for tweet {}", rec.missing.seq));
            const VirtualTime bound = traces[rec.missing.seq].gap_bound();
            if (rec.gap_contribution > bound)
                out.push_back({rec.response_id, rec.missing.seq, rec.gap_contribution, bound});
        }
        return out;
    }

    CheckResult check_gap_bound(const DetectionResult &result, std::span<const TweetTrace> traces)
    {
        const auto violations = gap_bound_violations(result, traces);
        CheckResult c{"G bound", violations.empty(),
                      fmt::format("{} violations over {} records", violations.size(), result.records.size())};
        if (!violations.empty())
        {
            const auto &v = violations.front();
            c.detail += fmt::format(" (first: response {} tweet {} G={}us bound={}us)", v.response_id, v.tweet_seq,
                                    v.G.micros, v.bound.micros);
        }
        return c;
    }

    TailShape tail_shape(const GapHistogram &histogram)
    {
        TailShape s;
        std::uint64_t best = 0;
        for (const auto &[bucket, count] : histogram.counts)
        {
            if (count == 0)
                continue;
            ++s.nonempty_buckets;
            if (count > best)
            {
                best = count;
                s.mode_bucket = bucket;
            }
            s.last_bucket = bucket;
        }
        if (s.nonempty_buckets == 0)
            return s;

        std::vector<double> idx, counts;
        for (std::int64_t b = s.mode_bucket; b <= s.last_bucket; ++b)
        {
            auto it = histogram.counts.find(b);
            idx.push_back(static_cast<double>(b));
            counts.push_back(it == histogram.counts.end() ? 0.0 : static_cast<double>(it->second));
        }
        if (idx.size() >= 3)
            s.decay_spearman = spearman(idx, counts);
        s.decaying = s.nonempty_buckets >= thresholds::min_nonempty_buckets && s.decay_spearman &&
                     *s.decay_spearman <= thresholds::tail_decay_spearman &&
                     histogram.counts.at(s.last_bucket) < best;
        return s;
    }

    CheckResult check_anomaly_regime(const AnalyticsReport &report)
    {
        const double rate = report.inconsistency_rate.value_or(0.0);
        const TailShape shape = tail_shape(report.histogram);
        CheckResult c;
        c.name = "anomaly regime";
        c.pass = rate > 0.0 && shape.decaying;
        c.detail = fmt::format("rate={:.4f}% nonempty_buckets={} mode_bucket={} last_bucket={} decay_rho={}",
                               rate * 100.0, shape.nonempty_buckets, shape.mode_bucket, shape.last_bucket,
                               shape.decay_spearman ? fmt::format("{:+.3f}", *shape.decay_spearman) : "n/a");
        return c;
    }

    CheckResult check_correlations(const std::array<CorrelationStudy, 4> &studies)
    {
        CheckResult c;
        c.name = "correlation shape";
        c.pass = true;
        for (std::size_t i = 0; i < studies.size(); ++i)
        {
            const auto &s = studies[i];
            bool ok = false;
            if (!s.degenerate && s.spearman)
                ok = i == 0 ? *s.spearman > thresholds::strong_correlation
                            : std::abs(*s.spearman) < thresholds::weak_correlation;
            c.pass = c.pass && ok;
            c.detail += fmt::format("{}={}{} ", s.name, s.spearman ? fmt::format("{:+.3f}", *s.spearman) : "n/a",
                                    ok ? "" : "!");
        }
        c.detail.pop_back();
        return c;
    }
}
