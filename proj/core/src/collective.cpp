#include "authorlink/collective.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "authorlink/common.hpp"

namespace authorlink {

std::string slab_key(const SlabHierarchy& h, int ctx, int slab) {
    return h.contexts[ctx].key(h.facets) + "." + std::to_string(slab);
}

TrainedSlabs train_all_slabs(const MessageSet& set, const SlabHierarchy& h,
                             const Vocabulary& vocab, const TrainParams& params,
                             const AnalogySet* analogies, int threads,
                             std::size_t max_vocab) {
    TrainedSlabs out;
    out.by_context.resize(h.contexts.size());
    std::vector<std::pair<int, int>> jobs;
    for (std::size_t c = 0; c < h.contexts.size(); ++c) {
        out.by_context[c].resize(h.contexts[c].slabs.size());
        for (std::size_t s = 0; s < h.contexts[c].slabs.size(); ++s)
            jobs.emplace_back(static_cast<int>(c), static_cast<int>(s));
    }
    parallel_for(jobs.size(), [&](std::size_t j) {
        auto [c, s] = jobs[j];
        SlabModel& m = out.by_context[c][s];
        std::string key = slab_key(h, c, s);
        SlabCorpus corpus = build_slab_corpus(set, h, h.contexts[c], s, vocab, max_vocab);
        TrainParams p = params;
        p.seed = params.seed ^ fnv1a64(key);
        if (corpus.terms.empty()) {
            m.embedding.slab_key = key;
            m.embedding.dim = p.dim;
            m.embedding.window = p.window;
        } else {
            try {
                m.embedding = train_cbow(key, corpus, p);
            } catch (const DataError&) {
                // nothing to slide a window over: keep the initialization
                m.embedding = init_embedding(key, corpus.terms, p.dim, p.window, p.seed);
            }
        }
        m.accuracy.slab_key = key;
        if (analogies != nullptr && !m.embedding.terms.empty())
            m.accuracy = analogy_accuracy(m.embedding, *analogies);
        m.accuracy.slab_key = key;
    }, threads);
    for (auto& ctx_models : out.by_context) {
        std::vector<SlabAccuracy> acc(ctx_models.size());
        for (std::size_t s = 0; s < ctx_models.size(); ++s) acc[s] = ctx_models[s].accuracy;
        normalize_accuracies(acc);
        for (std::size_t s = 0; s < ctx_models.size(); ++s) ctx_models[s].accuracy = acc[s];
    }
    return out;
}

int CollectiveVectors::index(const std::string& term) const {
    auto it = term_index.find(term);
    return it == term_index.end() ? -1 : it->second;
}

Fusion::Fusion(const SlabHierarchy& h, const TrainedSlabs& trained,
               std::vector<std::string> vocab_terms)
    : h_(&h), trained_(&trained), terms_(std::move(vocab_terms)) {
    if (trained.by_context.size() != h.contexts.size())
        throw DataError("trained slab models do not match the hierarchy");
    std::unordered_map<std::string, int> global;
    global.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i)
        global.emplace(terms_[i], static_cast<int>(i));

    local_.resize(h.contexts.size());
    for (std::size_t c = 0; c < h.contexts.size(); ++c) {
        const auto& models = trained.by_context[c];
        if (models.size() != h.contexts[c].slabs.size())
            throw DataError("trained slab models do not match the hierarchy");
        local_[c].resize(models.size());
        for (std::size_t s = 0; s < models.size(); ++s) {
            const SlabEmbedding& m = models[s].embedding;
            if (!m.terms.empty()) {
                if (dim_ == 0) dim_ = m.dim;
                if (m.dim != dim_) throw DataError("slab models disagree on dimension");
            }
            auto& lut = local_[c][s];
            lut.assign(terms_.size(), -1);
            for (std::size_t t = 0; t < m.terms.size(); ++t) {
                auto it = global.find(m.terms[t]);
                if (it != global.end()) lut[it->second] = static_cast<int>(t);
            }
        }
    }
    if (dim_ == 0) dim_ = 1;  // all slabs empty: vectors are zero anyway
}

double Fusion::slab_cosine(int ctx, int slab, int i, int j) const {
    int li = local_[ctx][slab][i];
    int lj = local_[ctx][slab][j];
    if (li < 0 || lj < 0) return 0.0;
    if (li == lj) return 1.0;
    const SlabEmbedding& m = trained_->by_context[ctx][slab].embedding;
    auto a = m.row(li);
    auto b = m.row(lj);
    double dot = 0, na = 0, nb = 0;
    for (int d = 0; d < m.dim; ++d) {
        dot += a[d] * b[d];
        na += a[d] * a[d];
        nb += b[d] * b[d];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double Fusion::level_similarity(int facet, int i, int j) const {
    double sum = 0;
    for (int c : h_->contexts_of_facet(facet)) {
        const auto& models = trained_->by_context[c];
        for (std::size_t s = 0; s < models.size(); ++s)
            sum += models[s].accuracy.normalized *
                   slab_cosine(c, static_cast<int>(s), i, j);
    }
    return sum;
}

double Fusion::depth_similarity(int facet, int i, int j) const {
    double sum = level_similarity(facet, i, j);
    for (int child : h_->children_of(facet)) sum += depth_similarity(child, i, j);
    return sum;
}

double Fusion::total_pair_similarity(int i, int j) const {
    double sum = 0;
    for (std::size_t f = 0; f < h_->facets.size(); ++f)
        sum += level_similarity(static_cast<int>(f), i, j);
    for (int root : h_->root_facets()) sum += depth_similarity(root, i, j);
    return sum;
}

void Fusion::level_vector(int facet, int i, std::vector<double>& acc) const {
    for (int c : h_->contexts_of_facet(facet)) {
        const auto& models = trained_->by_context[c];
        for (std::size_t s = 0; s < models.size(); ++s) {
            int li = local_[c][s][i];
            if (li < 0) continue;
            const SlabEmbedding& m = models[s].embedding;
            auto row = m.row(li);
            double w = models[s].accuracy.normalized;
            for (int d = 0; d < m.dim; ++d) acc[d] += w * row[d];
        }
    }
}

void Fusion::depth_vector(int facet, int i, std::vector<double>& acc) const {
    level_vector(facet, i, acc);
    for (int child : h_->children_of(facet)) depth_vector(child, i, acc);
}

std::vector<double> Fusion::collective_vector(int i, bool* in_no_slab) const {
    std::vector<double> acc(dim_, 0.0);
    for (std::size_t f = 0; f < h_->facets.size(); ++f)
        level_vector(static_cast<int>(f), i, acc);
    for (int root : h_->root_facets()) depth_vector(root, i, acc);
    if (in_no_slab != nullptr) {
        bool seen = false;
        for (std::size_t c = 0; c < local_.size() && !seen; ++c)
            for (std::size_t s = 0; s < local_[c].size() && !seen; ++s)
                seen = local_[c][s][i] >= 0;
        *in_no_slab = !seen;
    }
    return acc;
}

CollectiveVectors build_collective_vectors(const SlabHierarchy& h, const TrainedSlabs& trained,
                                           const std::vector<std::string>& vocab_terms,
                                           int threads) {
    Fusion fusion(h, trained, vocab_terms);
    CollectiveVectors out;
    out.dim = fusion.dim();
    out.terms = vocab_terms;
    for (std::size_t i = 0; i < out.terms.size(); ++i)
        out.term_index.emplace(out.terms[i], static_cast<int>(i));
    out.data.assign(out.terms.size() * static_cast<std::size_t>(out.dim), 0.0);
    out.empty.assign(out.terms.size(), 0);
    parallel_for(out.terms.size(), [&](std::size_t i) {
        bool none = false;
        std::vector<double> v = fusion.collective_vector(static_cast<int>(i), &none);
        std::copy(v.begin(), v.end(), out.data.begin() + i * static_cast<std::size_t>(out.dim));
        out.empty[i] = none ? 1 : 0;
    }, threads);
    return out;
}

PairSimilarityMatrix build_pair_matrix(const SlabHierarchy& h, const TrainedSlabs& trained,
                                       const std::vector<std::string>& vocab_terms,
                                       int threads) {
    Fusion fusion(h, trained, vocab_terms);
    PairSimilarityMatrix out;
    out.n = fusion.vocab_size();
    out.terms = vocab_terms;
    out.data.assign(static_cast<std::size_t>(out.n) * out.n, 0.0);
    parallel_for(static_cast<std::size_t>(out.n), [&](std::size_t i) {
        for (std::size_t j = i; j < static_cast<std::size_t>(out.n); ++j) {
            double s = fusion.total_pair_similarity(static_cast<int>(i), static_cast<int>(j));
            out.data[i * out.n + j] = s;
            out.data[j * out.n + i] = s;
        }
    }, threads);
    return out;
}

void save_collective(const CollectiveVectors& v, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out << v.terms.size() << ' ' << v.dim << '\n';
    for (std::size_t i = 0; i < v.terms.size(); ++i) {
        out << v.terms[i];
        const double* row = v.row(static_cast<int>(i));
        for (int d = 0; d < v.dim; ++d) out << ' ' << dtos(row[d]);
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + file.string());
}

CollectiveVectors load_collective(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty vector file: " + file.string());
    std::istringstream head(line);
    std::size_t count = 0;
    int dim = 0;
    if (!(head >> count >> dim) || dim <= 0)
        throw DataError("bad vector file header: " + file.string());
    CollectiveVectors v;
    v.dim = dim;
    v.terms.reserve(count);
    v.data.reserve(count * static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line))
            throw DataError("truncated vector file: " + file.string());
        std::istringstream row(line);
        std::string term;
        if (!(row >> term)) throw DataError("bad vector row: " + file.string());
        std::string num;
        int got = 0;
        for (; row >> num; ++got) v.data.push_back(stod_strict(num, "vector value"));
        if (got != dim) throw DataError("bad vector row width: " + file.string());
        v.term_index.emplace(term, static_cast<int>(i));
        v.terms.push_back(std::move(term));
    }
    v.empty.assign(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
        bool zero = true;
        for (int d = 0; d < dim && zero; ++d) zero = v.data[i * dim + d] == 0.0;
        v.empty[i] = zero ? 1 : 0;
    }
    return v;
}

EnrichmentTable build_enrichment(const CollectiveVectors& v, int zeta, int threads) {
    if (zeta < 1) throw UsageError("enrichment width must be at least 1");
    std::size_t n = v.terms.size();
    EnrichmentTable table;
    table.zeta = zeta;
    table.neighbors.resize(n);
    // precompute norms once
    std::vector<double> norms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = v.row(static_cast<int>(i));
        double s = 0;
        for (int d = 0; d < v.dim; ++d) s += row[d] * row[d];
        norms[i] = std::sqrt(s);
    }
    parallel_for(n, [&](std::size_t i) {
        std::vector<Neighbor> all;
        all.reserve(n > 0 ? n - 1 : 0);
        const double* a = v.row(static_cast<int>(i));
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double sim = 0;
            if (norms[i] > 0 && norms[j] > 0) {
                const double* b = v.row(static_cast<int>(j));
                double dot = 0;
                for (int d = 0; d < v.dim; ++d) dot += a[d] * b[d];
                sim = dot / (norms[i] * norms[j]);
            }
            all.push_back(Neighbor{static_cast<int>(j), sim});
        }
        std::size_t keep = std::min<std::size_t>(zeta, all.size());
        std::partial_sort(all.begin(), all.begin() + keep, all.end(),
                          [](const Neighbor& x, const Neighbor& y) {
                              if (x.similarity != y.similarity) return x.similarity > y.similarity;
                              return x.term < y.term;
                          });
        all.resize(keep);
        table.neighbors[i] = std::move(all);
    }, threads);
    return table;
}

std::vector<std::string> enrich_text(const std::vector<std::string>& tokens,
                                     const CollectiveVectors& v, const EnrichmentTable& table) {
    std::vector<std::string> out;
    for (const std::string& tok : tokens) {
        int i = v.index(tok);
        if (i < 0) {
            out.push_back(tok);
            continue;
        }
        for (const Neighbor& nb : table.neighbors[i]) out.push_back(v.terms[nb.term]);
    }
    return out;
}

}  // namespace authorlink
