#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "authorlink/corpus.hpp"
#include "authorlink/slabs.hpp"

namespace authorlink {

struct TrainParams {
    int dim = 100;
    int window = 5;
    int epochs = 5;
    double learning_rate = 0.025;
    double lr_floor = 1e-4;  // fraction of the initial rate the decay bottoms out at
    std::uint64_t seed = 1;
};

// One slab's word vectors. `input` is |V| x dim row-major (a row per word);
// `output` is stored word-major here (|V| x dim) and transposed to the
// dim x |V| layout on disk.
struct SlabEmbedding {
    std::string slab_key;
    int dim = 0;
    int window = 0;
    std::vector<std::string> terms;
    std::unordered_map<std::string, int> term_index;
    std::vector<double> input;
    std::vector<double> output;

    std::size_t vocab() const { return terms.size(); }
    std::span<const double> row(int i) const {
        return {input.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> out_row(int i) const {
        return {output.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    std::optional<int> index(std::string_view term) const;
};

// Messages of one slab mapped to local token ids. Local vocabulary is the
// slab's terms that survive the global vocabulary, ordered by slab frequency
// (desc) then term; `max_vocab` > 0 keeps only the top terms.
struct SlabCorpus {
    std::vector<std::string> terms;
    std::vector<std::vector<int>> sentences;
};

SlabCorpus build_slab_corpus(const MessageSet& set, const SlabHierarchy& h,
                             const SlabContext& ctx, int slab, const Vocabulary& vocab,
                             std::size_t max_vocab = 0);

struct Window {
    std::vector<int> context;
    int center = 0;
};

// Symmetric windows clipped at message boundaries; centers with no context
// (single-token messages) are skipped.
std::vector<Window> enumerate_windows(const std::vector<std::vector<int>>& sentences,
                                      int window);

// h = mean of the context words' input rows (divides by the actual context
// size, which shrinks at message edges).
void hidden_layer(const SlabEmbedding& m, std::span<const int> context, std::span<double> h);
// u[j] = output vector of word j dot h
void output_scores(const SlabEmbedding& m, std::span<const double> h, std::span<double> u);
// numerically stable: subtracts the max before exponentiation
void softmax_inplace(std::span<double> u);

double window_loss(const SlabEmbedding& m, std::span<const int> context, int center);
// full-softmax cross-entropy gradients for one window; outputs are matrices
// shaped like m.input / m.output
void window_gradients(const SlabEmbedding& m, std::span<const int> context, int center,
                      std::vector<double>& grad_input, std::vector<double>& grad_output);

SlabEmbedding init_embedding(std::string slab_key, std::vector<std::string> terms,
                             int dim, int window, std::uint64_t seed);
SlabEmbedding train_cbow(std::string slab_key, const SlabCorpus& corpus,
                         const TrainParams& params);

void save_model(const SlabEmbedding& m, const std::filesystem::path& file);
SlabEmbedding load_model(const std::filesystem::path& file);

struct AnalogyQuestion {
    std::string a, b, c, d;
};

struct AnalogySet {
    std::vector<AnalogyQuestion> questions;
};

// Whitespace format "a b c d" per line; lines starting with ':' are section
// headers and are skipped.
AnalogySet load_analogies(const std::filesystem::path& file);

struct SlabAccuracy {
    std::string slab_key;
    std::size_t attempted = 0;
    std::size_t correct = 0;
    double raw = 0.0;         // correct / attempted, 0 when nothing was attempted
    bool answerable = false;  // at least one question had all four terms in vocab
    double normalized = 0.0;  // filled by normalize_accuracies
};

// Questions are attempted only when all four terms are in the slab's
// vocabulary; prediction is the cosine-nearest word to v_b - v_a + v_c with
// a, b, c excluded.
SlabAccuracy analogy_accuracy(const SlabEmbedding& m, const AnalogySet& set);

// In-place sum-to-one normalization over one facet context's accuracies;
// all-zero groups become uniform.
void normalize_accuracies(std::span<SlabAccuracy> group);

}  // namespace authorlink
