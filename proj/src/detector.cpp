#include "feedsim/detector.hpp"

#include "feedsim/errors.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace feedsim
{
    TweetIndex::TweetIndex(std::span<const TweetEvent> log) : log_(log)
    {
        by_key_.reserve(log.size());
        for (std::size_t i = 0; i < log.size(); ++i)
        {
            const TweetEvent &t = log[i];
            if (t.seq != i)
                throw IntegrityError(fmt::format("tweet log: entry {} carries seq {}", i, t.seq));
            if (i > 0 && t.t < log[i - 1].t)
                throw IntegrityError(fmt::format("tweet log: seq {} is timestamped before seq {}", i, i - 1));
            if (!by_key_.emplace(std::pair{index(t.producer), t.t.micros}, t.seq).second)
                throw IntegrityError(fmt::format("tweet log: duplicate (producer {}, t {}us)", index(t.producer),
                                                 t.t.micros));
            if (index(t.producer) >= by_producer_.size())
                by_producer_.resize(index(t.producer) + 1);
            by_producer_[index(t.producer)].push_back(t.seq);
        }
    }

    const TweetEvent *TweetIndex::find(ProducerId producer, VirtualTime t) const
    {
        auto it = by_key_.find(std::pair{index(producer), t.micros});
        return it == by_key_.end() ? nullptr : &log_[it->second];
    }

    std::span<const std::uint64_t> TweetIndex::by_producer(ProducerId producer) const
    {
        if (index(producer) >= by_producer_.size())
            return {};
        return by_producer_[index(producer)];
    }

    ConsistentTimeline consistent_timeline(ConsumerId consumer, VirtualTime T, const TweetIndex &tweets,
                                           const FollowingNetwork &network, std::size_t n_timeline)
    {
        if (index(consumer) >= network.n_consumers())
            throw ConfigError(fmt::format("unknown consumer {}", index(consumer)));
        ConsistentTimeline out{consumer, T, {}};
        for (ProducerId p : network.follows(consumer))
        {
            const auto seqs = tweets.by_producer(p);
            auto end = std::upper_bound(seqs.begin(), seqs.end(), T,
                                        [&](VirtualTime bound, std::uint64_t seq) { return bound < tweets.at(seq).t; });
            const auto available = static_cast<std::size_t>(end - seqs.begin());
            const std::size_t take = std::min(available, n_timeline);
            for (auto it = end - static_cast<std::ptrdiff_t>(take); it != end; ++it)
                out.entries.push_back(tweets.at(*it));
        }
        std::sort(out.entries.begin(), out.entries.end(), [](const TweetEvent &a, const TweetEvent &b) { return newer(a, b); });
        if (out.entries.size() > n_timeline)
            out.entries.resize(n_timeline);
        return out;
    }

    std::vector<TweetEvent> resolve_entries(const TimelineResponse &response, const TweetIndex &tweets,
                                            const FollowingNetwork &network)
    {
        std::vector<TweetEvent> resolved;
        resolved.reserve(response.entries.size());
        for (const auto &e : response.entries)
        {
            const TweetEvent *tweet = tweets.find(e.producer, e.t);
            if (tweet == nullptr)
                throw IntegrityError(fmt::format("response {}: phantom tweet (producer {}, t {}us)",
                                                 response.response_id, index(e.producer), e.t.micros));
            if (tweet->t > response.T)
                throw IntegrityError(fmt::format("response {}: entry from the future (t {}us > T {}us)",
                                                 response.response_id, tweet->t.micros, response.T.micros));
            if (!network.is_following(response.consumer, tweet->producer))
                throw IntegrityError(fmt::format("response {}: entry from unfollowed producer {}",
                                                 response.response_id, index(tweet->producer)));
            if (!resolved.empty() && !newer(resolved.back(), *tweet))
                throw IntegrityError(
                    fmt::format("response {}: entries not strictly newest-first", response.response_id));
            resolved.push_back(*tweet);
        }
        return resolved;
    }

    std::vector<MissingTweet> find_missing(std::span<const TweetEvent> response_entries,
                                           const ConsistentTimeline &oracle)
    {
        std::vector<MissingTweet> missing;
        for (const TweetEvent &x : oracle.entries)
        {
            const bool present = std::any_of(response_entries.begin(), response_entries.end(),
                                             [&](const TweetEvent &e) { return e.seq == x.seq; });
            if (present)
                continue;
            const bool newer_present = !response_entries.empty() && newer(response_entries.front(), x);
            const bool older_present = !response_entries.empty() && newer(x, response_entries.back());
            MissingPosition pos = MissingPosition::Head;
            if (newer_present)
                pos = older_present ? MissingPosition::Interior : MissingPosition::Tail;
            missing.push_back(MissingTweet{x, pos});
        }
        return missing;
    }

    WitnessIndex::WitnessIndex(std::span<const TimelineResponse> responses, const TweetIndex &tweets)
        : by_tweet_(tweets.size())
    {
        for (const auto &r : responses)
        {
            for (const auto &e : r.entries)
            {
                const TweetEvent *tweet = tweets.find(e.producer, e.t);
                if (tweet == nullptr)
                    throw IntegrityError(fmt::format("response {}: phantom tweet (producer {}, t {}us)",
                                                     r.response_id, index(e.producer), e.t.micros));
                by_tweet_[tweet->seq].push_back(Sighting{r.T, r.response_id});
            }
        }
        for (auto &list : by_tweet_)
        {
            if (list.empty())
                continue;
            ++key_count_;
            std::sort(list.begin(), list.end());
        }
    }

    std::span<const WitnessIndex::Sighting> WitnessIndex::sightings(std::uint64_t tweet_seq) const
    {
        if (tweet_seq >= by_tweet_.size())
            return {};
        return by_tweet_[tweet_seq];
    }

    WitnessIndex build_witness_index(std::span<const TimelineResponse> responses, const TweetIndex &tweets)
    {
        return WitnessIndex(responses, tweets);
    }

    std::string_view to_string(ConflictType type) noexcept
    {
        return type == ConflictType::GapWitnessed ? "gap" : "newer_earlier";
    }

    ConflictType conflict_type_from_string(std::string_view name)
    {
        if (name == "gap")
            return ConflictType::GapWitnessed;
        if (name == "newer_earlier")
            return ConflictType::NewerWitnessedEarlier;
        throw IntegrityError(fmt::format("unknown conflict type '{}'", name));
    }

    std::optional<ConflictRecord> classify(const TimelineResponse &response, const MissingTweet &missing,
                                           const WitnessIndex &witnesses, std::size_t n_timeline)
    {
        const auto seen = witnesses.sightings(missing.tweet.seq);
        if (seen.empty())
            return std::nullopt;
        const auto &earliest = seen.front();

        ConflictRecord rec;
        rec.response_id = response.response_id;
        rec.consumer = response.consumer;
        rec.missing = missing.tweet;
        rec.witness_response_id = earliest.response_id;
        rec.gap_contribution = response.T - missing.tweet.t;

        switch (missing.position)
        {
        case MissingPosition::Interior:
            rec.type = ConflictType::GapWitnessed;
            return rec;
        case MissingPosition::Tail:
            if (response.entries.size() >= n_timeline)
                return std::nullopt;
            rec.type = ConflictType::GapWitnessed;
            return rec;
        case MissingPosition::Head:
            // Staleness alone is not a conflict: someone must have been served the tweet first.
            if (!(earliest.T < response.T))
                return std::nullopt;
            rec.type = ConflictType::NewerWitnessedEarlier;
            return rec;
        }
        return std::nullopt;
    }

    std::optional<VirtualTime> inconsistency_time_gap(const TimelineResponse &response,
                                                      std::span<const ConflictRecord> observable)
    {
        std::optional<VirtualTime> gap;
        for (const auto &rec : observable)
        {
            const VirtualTime g = response.T - rec.missing.t;
            if (!gap || g > *gap)
                gap = g;
        }
        return gap;
    }

    DetectionResult detect(std::span<const TimelineResponse> to_check, std::span<const TimelineResponse> witness_corpus,
                           const TweetIndex &tweets, const FollowingNetwork &network, std::size_t n_timeline)
    {
        const WitnessIndex witnesses(witness_corpus, tweets);
        DetectionResult result;
        result.totals.total_responses = to_check.size();
        result.totals.analyzed_responses = to_check.size();
        result.totals.first_analyzed_response_id = to_check.empty() ? 0 : to_check.front().response_id;

        std::vector<ConflictRecord> local;
        for (const auto &response : to_check)
        {
            const auto resolved = resolve_entries(response, tweets, network);
            const auto oracle = consistent_timeline(response.consumer, response.T, tweets, network, n_timeline);
            const auto missing = find_missing(resolved, oracle);
            if (missing.empty())
                continue;
            ++result.totals.responses_with_missing;
            result.totals.missing_tweets += missing.size();

            local.clear();
            for (const auto &m : missing)
                if (auto rec = classify(response, m, witnesses, n_timeline))
                    local.push_back(*rec);
            if (local.empty())
                continue;

            const auto gap = inconsistency_time_gap(response, local);
            if (!gap || gap->micros <= 0)
                throw IntegrityError(fmt::format("response {}: non-positive inconsistency gap", response.response_id));
            result.per_response_G.push_back(ResponseGap{response.response_id, response.consumer, *gap});
            ++result.totals.conflicting_responses;
            for (const auto &rec : local)
            {
                if (rec.type == ConflictType::GapWitnessed)
                    ++result.totals.gap_records;
                else
                    ++result.totals.newer_earlier_records;
                result.records.push_back(rec);
            }
        }
        result.totals.conflict_records = result.records.size();
        return result;
    }

    std::size_t analysis_window_start(std::size_t count, double fraction)
    {
        if (!(fraction > 0.0) || fraction > 1.0)
            throw ConfigError("analysis_window_fraction must be in (0, 1]");
        const auto keep = static_cast<std::size_t>(std::llround(static_cast<double>(count) * fraction));
        return count - std::min(keep, count);
    }

    DetectionResult detect_all(std::span<const TimelineResponse> responses, std::span<const TweetEvent> tweet_log,
                               const FollowingNetwork &network, const DetectionConfig &config)
    {
        if (config.n_timeline < 1)
            throw ConfigError("n_timeline must be >= 1");
        for (std::size_t i = 0; i < responses.size(); ++i)
        {
            const auto &r = responses[i];
            if (i > 0 && r.response_id <= responses[i - 1].response_id)
                throw IntegrityError(fmt::format("response log: ids not strictly increasing at {}", r.response_id));
            if (i > 0 && r.T < responses[i - 1].T)
                throw IntegrityError(fmt::format("response log: response {} served before its predecessor",
                                                 r.response_id));
            if (index(r.consumer) >= network.n_consumers())
                throw IntegrityError(fmt::format("response {}: unknown consumer {}", r.response_id,
                                                 index(r.consumer)));
        }
        const TweetIndex tweets(tweet_log);
        const std::size_t start = analysis_window_start(responses.size(), config.analysis_window_fraction);
        const auto window = responses.subspan(start);
        auto result = detect(window, window, tweets, network, config.n_timeline);
        result.totals.total_responses = responses.size();
        return result;
    }
}
