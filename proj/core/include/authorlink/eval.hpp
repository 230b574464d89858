#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "authorlink/corpus.hpp"

namespace authorlink {

// Tally of human similarity scores, indexed by score 0..3.
struct ScoreCounts {
    std::array<std::int64_t, 4> counts{0, 0, 0, 0};

    std::int64_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
};

// Weighted precision that rewards conceptual matches: a score-s pair
// contributes s, normalized by 3 * total. Range [0, 1].
double p_conceptual(const ScoreCounts& scores);

// Weighted precision that values scores 2 and 3 alike (both contribute 2),
// normalized by 2 * total. Range [0, 1].
double p_textual(const ScoreCounts& scores);

// Floor of the mean vote. Each vote must be in 0..3; so is the result.
int aggregate_votes(const std::vector<int>& votes);

// One scored tweet pair, score already aggregated to a single 0..3 value.
struct LabeledPair {
    std::string tweet_a;
    std::string tweet_b;
    int score = 0;
};

struct LabelFile {
    std::vector<LabeledPair> records;
};

// TSV `tweet_a<TAB>tweet_b<TAB>score`, one pair per line.
LabelFile load_labels(const std::filesystem::path& file);
void save_labels(const LabelFile& labels, const std::filesystem::path& file);

ScoreCounts count_scores(const LabelFile& labels);

// A cross-author tweet pair with its similarity under the ranking measure.
struct RankedPair {
    std::string tweet_a;
    std::string tweet_b;
    double similarity = 0.0;
};

// Ranks every cross-author tweet pair by tf-idf cosine similarity and returns
// the top k (all pairs when fewer exist). Document frequencies come from the
// union of both authors' messages; tf is the in-message count and
// idf = ln(1 + n_docs / df). Ties keep input order (author_a index first).
std::vector<RankedPair> top_k_similar_pairs(std::span<const Message> author_a,
                                            std::span<const Message> author_b,
                                            std::size_t k = 10);

// One observation from a parameter sweep.
struct SweepRow {
    double param = 0.0;
    std::string metric;
    double value = 0.0;
};

struct SweepTable {
    std::string param_name;  // e.g. "alpha", "zeta", "eps", "k"
    std::vector<SweepRow> rows;
};

// TSV with a `param<TAB>metric_name<TAB>value` header line; plot-ready.
void save_sweep(const SweepTable& table, const std::filesystem::path& file);
SweepTable load_sweep(const std::filesystem::path& file);

}  // namespace authorlink
