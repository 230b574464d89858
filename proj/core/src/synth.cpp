#include "authorlink/synth.hpp"

#include <fstream>

#include "authorlink/common.hpp"

namespace authorlink {

namespace {

std::string padded(const char* prefix, int value, int width) {
    std::string digits = std::to_string(value);
    std::string out = prefix;
    for (int i = static_cast<int>(digits.size()); i < width; ++i) out += '0';
    return out + digits;
}

void validate_spec(const SynthSpec& s) {
    if (s.communities < 1 || s.authors_per_community < 1 || s.tweets_per_author < 1)
        throw UsageError("synthetic corpus sizes must be positive");
    if (s.min_tokens < 1 || s.max_tokens < s.min_tokens)
        throw UsageError("bad token count range");
    if (s.weeks < 1) throw UsageError("weeks must be positive");
    if (s.topic_terms < 1 || s.shared_terms < 1 || s.personal_terms < 1)
        throw UsageError("term pools must be non-empty");
    if (s.topic_fraction < 0.0 || s.shared_fraction < 0.0 ||
        s.topic_fraction + s.shared_fraction > 1.0)
        throw UsageError("token fractions must be non-negative and sum to at most 1");
    for (const auto& r : s.regimes) {
        if (r.days.empty()) throw UsageError("regime with no days: " + r.name);
        for (int d : r.days)
            if (d < 0 || d > 6) throw UsageError("regime day out of range: " + r.name);
        if (r.hour_begin < 0 || r.hour_end > 24 || r.hour_begin >= r.hour_end)
            throw UsageError("bad regime hour band: " + r.name);
    }
    if (s.planted) {
        if (s.regimes.size() < 2) throw UsageError("a planted pair needs at least 2 regimes");
        if (s.planted->regime < 0 || s.planted->regime >= static_cast<int>(s.regimes.size()))
            throw UsageError("planted regime out of range");
        if (s.planted->first.empty() || s.planted->second.empty() ||
            s.planted->first == s.planted->second)
            throw UsageError("planted pair needs two distinct terms");
    }
}

}  // namespace

SynthStats generate_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& file) {
    validate_spec(spec);
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write corpus file: " + file.string());

    const bool scoped = !spec.regimes.empty();
    const int n_regimes = scoped ? static_cast<int>(spec.regimes.size()) : 1;
    SynthStats stats;
    stats.regime_messages.assign(static_cast<std::size_t>(n_regimes), 0);
    stats.planted_cooccur.assign(static_cast<std::size_t>(n_regimes), 0);

    // term pools; names are plain lowercase alphanumerics so the tokenizer
    // passes them through untouched
    auto topic_term = [&](int c, int regime, int i) {
        std::string t = "c" + std::to_string(c);
        if (scoped) t += "r" + std::to_string(regime);
        return t + "w" + std::to_string(i);
    };
    auto shared_term = [&](int regime, int i) {
        std::string t = scoped ? "r" + std::to_string(regime) : std::string();
        return t + "base" + std::to_string(i);
    };
    auto personal_term = [&](int author, int i) {
        return "p" + std::to_string(author) + "x" + std::to_string(i);
    };

    Rng rng(spec.seed);
    std::size_t tweet_no = 0;
    int author_no = 0;
    std::string text;
    for (int c = 0; c < spec.communities; ++c) {
        for (int a = 0; a < spec.authors_per_community; ++a, ++author_no) {
            std::string author = padded("c", c, 2) + padded("a", a, 3);
            for (int t = 0; t < spec.tweets_per_author; ++t, ++tweet_no) {
                const int j = t % n_regimes;
                ++stats.regime_messages[static_cast<std::size_t>(j)];

                int day;
                std::int64_t band_begin = 0, band_len = 86400;
                if (scoped) {
                    const SynthRegime& r = spec.regimes[static_cast<std::size_t>(j)];
                    day = r.days[rng.index(r.days.size())];
                    band_begin = static_cast<std::int64_t>(r.hour_begin) * 3600;
                    band_len = static_cast<std::int64_t>(r.hour_end - r.hour_begin) * 3600;
                } else {
                    day = static_cast<int>(rng.index(7));
                }
                std::int64_t week = static_cast<std::int64_t>(rng.index((std::uint64_t)spec.weeks));
                std::int64_t ts = spec.start_ts + (week * 7 + day) * 86400 + band_begin +
                                  static_cast<std::int64_t>(rng.index((std::uint64_t)band_len));

                text.clear();
                auto push = [&](const std::string& tok) {
                    if (!text.empty()) text += ' ';
                    text += tok;
                };
                if (spec.planted) {
                    if (j == spec.planted->regime) {
                        push(spec.planted->first);
                        push(spec.planted->second);
                        ++stats.planted_cooccur[static_cast<std::size_t>(j)];
                    } else if (c % 2 == 0) {
                        push(spec.planted->first);
                    } else {
                        push(spec.planted->second);
                    }
                }
                const int n_tokens =
                    spec.min_tokens +
                    static_cast<int>(rng.index((std::uint64_t)(spec.max_tokens - spec.min_tokens + 1)));
                for (int i = 0; i < n_tokens; ++i) {
                    double r = rng.real();
                    if (r < spec.topic_fraction)
                        push(topic_term(c, j, (int)rng.index((std::uint64_t)spec.topic_terms)));
                    else if (r < spec.topic_fraction + spec.shared_fraction)
                        push(shared_term(j, (int)rng.index((std::uint64_t)spec.shared_terms)));
                    else
                        push(personal_term(author_no,
                                           (int)rng.index((std::uint64_t)spec.personal_terms)));
                }

                out << "{\"id\":\"" << padded("t", static_cast<int>(tweet_no), 6)
                    << "\",\"author\":\"" << author << "\",\"ts\":" << ts << ",\"text\":\""
                    << text << "\"}\n";
                ++stats.messages;
            }
        }
    }
    if (!out) throw DataError("short write: " + file.string());
    return stats;
}

std::vector<SynthRegime> synth_regimes_preset(std::string_view name) {
    if (name == "none") return {};
    if (name == "weekday-weekend")
        return {{"weekday", {0, 1, 2, 3, 4}, 0, 24}, {"weekend", {5, 6}, 0, 24}};
    if (name == "weekday-weekend-hours")
        return {{"weekday-am", {0, 1, 2, 3, 4}, 6, 14},
                {"weekday-pm", {0, 1, 2, 3, 4}, 14, 22},
                {"weekend-am", {5, 6}, 6, 14},
                {"weekend-pm", {5, 6}, 14, 22}};
    throw UsageError("unknown regime preset: " + std::string(name));
}

}  // namespace authorlink
