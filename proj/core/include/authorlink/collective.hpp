#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "authorlink/cbow.hpp"
#include "authorlink/slabs.hpp"

namespace authorlink {

// One trained slab: its embedding plus its analogy score, whose normalized
// value is the fusion weight.
struct SlabModel {
    SlabEmbedding embedding;
    SlabAccuracy accuracy;
};

// Trained models parallel to a SlabHierarchy: by_context[c][s] is the model
// for slab s of hierarchy context c.
struct TrainedSlabs {
    std::vector<std::vector<SlabModel>> by_context;
};

// Slab key used for model files and train seeds: "<context key>.<slab index>".
std::string slab_key(const SlabHierarchy& h, int ctx, int slab);

// Trains one CBOW model per slab (seeded per slab key so results do not
// depend on training order), scores each against the analogy set when one is
// given, and normalizes accuracies within each context. Slabs without a
// single trainable window keep their initialization; slabs with no
// in-vocabulary token at all get an empty model that contributes nothing.
TrainedSlabs train_all_slabs(const MessageSet& set, const SlabHierarchy& h,
                             const Vocabulary& vocab, const TrainParams& params,
                             const AnalogySet* analogies, int threads = 0,
                             std::size_t max_vocab = 0);

// Fused pairwise word similarities over the shared vocabulary.
struct PairSimilarityMatrix {
    int n = 0;
    std::vector<std::string> terms;
    std::vector<double> data;  // row-major n x n, symmetric
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * n + j]; }
};

// Fused word vectors over the shared vocabulary, one d-dim row per term.
struct CollectiveVectors {
    int dim = 0;
    std::vector<std::string> terms;
    std::unordered_map<std::string, int> term_index;
    std::vector<double> data;         // row-major |terms| x dim
    std::vector<std::uint8_t> empty;  // 1 = term appears in no slab vocabulary

    int index(const std::string& term) const;  // -1 if absent
    const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * dim; }
};

// Similarity fusion across the slab hierarchy. Words are addressed by their
// index into `vocab_terms`; a word missing from a slab's vocabulary
// contributes zero to that slab's terms.
class Fusion {
public:
    Fusion(const SlabHierarchy& h, const TrainedSlabs& trained,
           std::vector<std::string> vocab_terms);

    int vocab_size() const { return static_cast<int>(terms_.size()); }
    int dim() const { return dim_; }
    const std::vector<std::string>& terms() const { return terms_; }

    // Cosine of the hidden-layer rows of words i and j in one slab's model;
    // 0 when either word is outside that slab's vocabulary.
    double slab_cosine(int ctx, int slab, int i, int j) const;

    // Accuracy-weighted sum of slab cosines across every context of a facet.
    double level_similarity(int facet, int i, int j) const;

    // Level term of the facet plus the depth of each child facet, down to
    // the leaves.
    double depth_similarity(int facet, int i, int j) const;

    // Level over all facets plus depth from the roots: every slab weighs in
    // exactly twice.
    double total_pair_similarity(int i, int j) const;

    // Vector counterparts, accumulated into acc (size dim).
    void level_vector(int facet, int i, std::vector<double>& acc) const;
    void depth_vector(int facet, int i, std::vector<double>& acc) const;
    std::vector<double> collective_vector(int i, bool* in_no_slab = nullptr) const;

private:
    const SlabHierarchy* h_;
    const TrainedSlabs* trained_;
    std::vector<std::string> terms_;
    int dim_ = 0;
    // local[ctx][slab][global word] = slab vocabulary index or -1
    std::vector<std::vector<std::vector<int>>> local_;
};

CollectiveVectors build_collective_vectors(const SlabHierarchy& h, const TrainedSlabs& trained,
                                           const std::vector<std::string>& vocab_terms,
                                           int threads = 0);

// |V| x |V| build; off by default in the pipeline because of its cost.
// Symmetric bit-exactly: the upper triangle is computed and mirrored.
PairSimilarityMatrix build_pair_matrix(const SlabHierarchy& h, const TrainedSlabs& trained,
                                       const std::vector<std::string>& vocab_terms,
                                       int threads = 0);

// Text format: first line "|V| d", then one "term f1 ... fd" line per term.
void save_collective(const CollectiveVectors& v, const std::filesystem::path& file);
CollectiveVectors load_collective(const std::filesystem::path& file);

struct Neighbor {
    int term = -1;
    double similarity = 0.0;
};

// Per term: its top-zeta cosine neighbors (self excluded), similarity
// descending, ties toward the lower term index.
struct EnrichmentTable {
    int zeta = 0;
    std::vector<std::vector<Neighbor>> neighbors;  // parallel to vector terms
};

EnrichmentTable build_enrichment(const CollectiveVectors& v, int zeta, int threads = 0);

// Replaces every in-vocabulary token by its ranked neighbor terms;
// out-of-vocabulary tokens pass through unchanged.
std::vector<std::string> enrich_text(const std::vector<std::string>& tokens,
                                     const CollectiveVectors& v, const EnrichmentTable& table);

}  // namespace authorlink
