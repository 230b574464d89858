#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace authorlink {

// One temporal window with its own exclusive vocabulary. Days are weekday
// splits (0 = Monday); hours bound a UTC band [hour_begin, hour_end).
struct SynthRegime {
    std::string name;
    std::vector<int> days;
    int hour_begin = 0;
    int hour_end = 24;
};

// A word pair planted to co-occur only inside one regime: there both terms
// open every tweet. Elsewhere even communities get only the first term and
// odd communities only the second, so the two words keep showing up but in
// disjoint contexts.
struct PlantedPair {
    std::string first;
    std::string second;
    int regime = 0;
};

struct SynthSpec {
    int communities = 3;
    int authors_per_community = 20;
    int tweets_per_author = 50;
    int min_tokens = 8;
    int max_tokens = 12;
    std::uint64_t seed = 1;
    std::int64_t start_ts = 1614556800;  // Monday 2021-03-01 00:00 UTC
    int weeks = 4;

    // pool sizes; topic and shared pools are per regime when regimes exist
    int topic_terms = 40;    // per community
    int shared_terms = 30;   // background pool
    int personal_terms = 8;  // per author, cross-regime salt
    double topic_fraction = 0.70;
    double shared_fraction = 0.25;  // remainder draws personal salt

    std::vector<SynthRegime> regimes;    // empty = one implicit all-time regime
    std::optional<PlantedPair> planted;  // needs at least 2 regimes
};

struct SynthStats {
    std::size_t messages = 0;
    std::vector<std::size_t> regime_messages;  // per regime
    std::vector<std::size_t> planted_cooccur;  // per regime: tweets holding both terms
};

// Writes a deterministic JSONL corpus: same SynthSpec, same bytes. Authors
// are named c<community>a<index>; tweets cycle round-robin through the
// regimes so per-regime counts are fixed by the field arithmetic alone.
SynthStats generate_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& file);

// Canned regime sets: "none", "weekday-weekend", "weekday-weekend-hours".
std::vector<SynthRegime> synth_regimes_preset(std::string_view name);

}  // namespace authorlink
