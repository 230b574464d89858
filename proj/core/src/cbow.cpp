#include "authorlink/cbow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "authorlink/common.hpp"

namespace authorlink {

std::optional<int> SlabEmbedding::index(std::string_view term) const {
    auto it = term_index.find(std::string(term));
    if (it == term_index.end()) return std::nullopt;
    return it->second;
}

SlabCorpus build_slab_corpus(const MessageSet& set, const SlabHierarchy& h,
                             const SlabContext& ctx, int slab, const Vocabulary& vocab,
                             std::size_t max_vocab) {
    std::unordered_map<std::string, std::uint64_t> freq;
    std::vector<const Message*> members;
    for (const Message& m : set.messages()) {
        if (!h.context_contains(ctx, m.timestamp)) continue;
        if (h.slab_of(ctx, m.timestamp) != slab) continue;
        members.push_back(&m);
        for (const std::string& t : m.tokens)
            if (vocab.contains(t)) ++freq[t];
    }

    std::vector<std::pair<std::string, std::uint64_t>> ordered(freq.begin(), freq.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (max_vocab && ordered.size() > max_vocab) ordered.resize(max_vocab);

    SlabCorpus out;
    out.terms.reserve(ordered.size());
    std::unordered_map<std::string, int> local;
    for (auto& [t, c] : ordered) {
        local.emplace(t, static_cast<int>(out.terms.size()));
        out.terms.push_back(t);
    }
    out.sentences.reserve(members.size());
    for (const Message* m : members) {
        std::vector<int> ids;
        ids.reserve(m->tokens.size());
        for (const std::string& t : m->tokens) {
            auto it = local.find(t);
            if (it != local.end()) ids.push_back(it->second);
        }
        out.sentences.push_back(std::move(ids));
    }
    return out;
}

std::vector<Window> enumerate_windows(const std::vector<std::vector<int>>& sentences,
                                      int window) {
    if (window < 1) throw UsageError("window must be at least 1");
    std::vector<Window> out;
    for (const auto& s : sentences) {
        const int n = static_cast<int>(s.size());
        for (int c = 0; c < n; ++c) {
            int lo = std::max(0, c - window);
            int hi = std::min(n - 1, c + window);
            if (hi - lo < 1) continue;  // no context besides the center
            Window w;
            w.center = s[c];
            w.context.reserve(hi - lo);
            for (int i = lo; i <= hi; ++i)
                if (i != c) w.context.push_back(s[i]);
            out.push_back(std::move(w));
        }
    }
    return out;
}

void hidden_layer(const SlabEmbedding& m, std::span<const int> context, std::span<double> h) {
    std::fill(h.begin(), h.end(), 0.0);
    for (int w : context) {
        const double* r = m.input.data() + static_cast<std::size_t>(w) * m.dim;
        for (int d = 0; d < m.dim; ++d) h[d] += r[d];
    }
    double inv = 1.0 / static_cast<double>(context.size());
    for (int d = 0; d < m.dim; ++d) h[d] *= inv;
}

void output_scores(const SlabEmbedding& m, std::span<const double> h, std::span<double> u) {
    const std::size_t V = m.vocab();
    for (std::size_t j = 0; j < V; ++j) {
        const double* c = m.output.data() + j * m.dim;
        double s = 0;
        for (int d = 0; d < m.dim; ++d) s += c[d] * h[d];
        u[j] = s;
    }
}

void softmax_inplace(std::span<double> u) {
    double mx = u[0];
    for (double v : u) mx = std::max(mx, v);
    double sum = 0;
    for (double& v : u) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : u) v /= sum;
}

double window_loss(const SlabEmbedding& m, std::span<const int> context, int center) {
    std::vector<double> h(m.dim), u(m.vocab());
    hidden_layer(m, context, h);
    output_scores(m, h, u);
    double mx = *std::max_element(u.begin(), u.end());
    double sum = 0;
    for (double v : u) sum += std::exp(v - mx);
    return -(u[center] - mx - std::log(sum));
}

void window_gradients(const SlabEmbedding& m, std::span<const int> context, int center,
                      std::vector<double>& grad_input, std::vector<double>& grad_output) {
    const std::size_t V = m.vocab();
    grad_input.assign(m.input.size(), 0.0);
    grad_output.assign(m.output.size(), 0.0);

    std::vector<double> h(m.dim), y(V);
    hidden_layer(m, context, h);
    output_scores(m, h, y);
    softmax_inplace(y);
    y[center] -= 1.0;  // y - onehot

    std::vector<double> dh(m.dim, 0.0);
    for (std::size_t j = 0; j < V; ++j) {
        const double e = y[j];
        const double* c = m.output.data() + j * m.dim;
        double* g = grad_output.data() + j * m.dim;
        for (int d = 0; d < m.dim; ++d) {
            g[d] = e * h[d];
            dh[d] += e * c[d];
        }
    }
    const double inv = 1.0 / static_cast<double>(context.size());
    for (int w : context) {
        double* g = grad_input.data() + static_cast<std::size_t>(w) * m.dim;
        for (int d = 0; d < m.dim; ++d) g[d] += dh[d] * inv;
    }
}

namespace {

// one SGD step; scratch vectors avoid per-window allocation
void train_window(SlabEmbedding& m, std::span<const int> context, int center, double lr,
                  std::vector<double>& h, std::vector<double>& y, std::vector<double>& dh) {
    const std::size_t V = m.vocab();
    hidden_layer(m, context, h);
    output_scores(m, h, y);
    softmax_inplace(y);
    y[center] -= 1.0;

    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t j = 0; j < V; ++j) {
        const double e = y[j];
        double* c = m.output.data() + j * m.dim;
        for (int d = 0; d < m.dim; ++d) {
            dh[d] += e * c[d];
            c[d] -= lr * e * h[d];
        }
    }
    const double step = lr / static_cast<double>(context.size());
    for (int w : context) {
        double* r = m.input.data() + static_cast<std::size_t>(w) * m.dim;
        for (int d = 0; d < m.dim; ++d) r[d] -= step * dh[d];
    }
}

}  // namespace

SlabEmbedding init_embedding(std::string slab_key, std::vector<std::string> terms,
                             int dim, int window, std::uint64_t seed) {
    if (terms.empty()) throw DataError("slab corpus is empty: " + slab_key);
    if (dim < 1) throw UsageError("embedding dim must be positive");
    SlabEmbedding m;
    m.slab_key = std::move(slab_key);
    m.dim = dim;
    m.window = window;
    m.terms = std::move(terms);
    for (std::size_t i = 0; i < m.terms.size(); ++i)
        m.term_index.emplace(m.terms[i], static_cast<int>(i));
    const std::size_t total = m.terms.size() * static_cast<std::size_t>(dim);
    m.input.resize(total);
    m.output.resize(total);
    Rng rng(seed);
    const double scale = 1.0 / dim;
    for (double& v : m.input) v = (rng.real() - 0.5) * scale;
    for (double& v : m.output) v = (rng.real() - 0.5) * scale;
    return m;
}

SlabEmbedding train_cbow(std::string slab_key, const SlabCorpus& corpus,
                         const TrainParams& params) {
    if (corpus.terms.empty() || corpus.sentences.empty())
        throw DataError("slab corpus is empty: " + slab_key);
    SlabEmbedding m = init_embedding(std::move(slab_key), corpus.terms, params.dim,
                                     params.window, params.seed);
    if (params.epochs == 0) return m;

    std::vector<Window> windows = enumerate_windows(corpus.sentences, params.window);
    if (windows.empty())
        throw DataError("slab has no trainable windows: " + m.slab_key);

    std::vector<double> h(m.dim), y(m.vocab()), dh(m.dim);
    const std::size_t total = windows.size() * static_cast<std::size_t>(params.epochs);
    std::size_t step = 0;
    for (int e = 0; e < params.epochs; ++e) {
        for (const Window& w : windows) {
            double frac = 1.0 - static_cast<double>(step) / static_cast<double>(total);
            double lr = params.learning_rate * std::max(params.lr_floor, frac);
            train_window(m, w.context, w.center, lr, h, y, dh);
            ++step;
        }
    }
    return m;
}

void save_model(const SlabEmbedding& m, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write model: " + file.string());
    out << "tcbow1 " << m.slab_key << ' ' << m.vocab() << ' ' << m.dim << ' ' << m.window
        << '\n';
    for (const auto& t : m.terms) out << t << '\n';
    const std::size_t V = m.vocab();
    std::vector<float> buf(V * static_cast<std::size_t>(m.dim));
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(m.input[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    // W' goes to disk as dim rows of |V| columns
    for (int d = 0; d < m.dim; ++d)
        for (std::size_t j = 0; j < V; ++j)
            buf[static_cast<std::size_t>(d) * V + j] =
                static_cast<float>(m.output[j * m.dim + d]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw DataError("short write on model: " + file.string());
}

SlabEmbedding load_model(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open model: " + file.string());
    std::string header;
    if (!std::getline(in, header)) throw DataError("empty model file: " + file.string());
    std::istringstream hs(header);
    std::string magic, key;
    std::size_t V = 0;
    int dim = 0, window = 0;
    hs >> magic >> key >> V >> dim >> window;
    if (magic != "tcbow1" || V == 0 || dim <= 0)
        throw DataError("bad model header: " + file.string());
    SlabEmbedding m;
    m.slab_key = key;
    m.dim = dim;
    m.window = window;
    m.terms.resize(V);
    for (std::size_t i = 0; i < V; ++i) {
        if (!std::getline(in, m.terms[i]))
            throw DataError("truncated model vocabulary: " + file.string());
        m.term_index.emplace(m.terms[i], static_cast<int>(i));
    }
    std::vector<float> buf(V * static_cast<std::size_t>(dim));
    auto read_block = [&](const char* what) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
            throw DataError(std::string("truncated model ") + what + ": " + file.string());
    };
    read_block("input matrix");
    m.input.resize(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) m.input[i] = buf[i];
    read_block("output matrix");
    m.output.resize(buf.size());
    for (int d = 0; d < dim; ++d)
        for (std::size_t j = 0; j < V; ++j)
            m.output[j * static_cast<std::size_t>(dim) + d] =
                buf[static_cast<std::size_t>(d) * V + j];
    return m;
}

AnalogySet load_analogies(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open analogy file: " + file.string());
    AnalogySet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == ':') continue;  // section header
        std::istringstream ss(line);
        AnalogyQuestion q;
        std::string extra;
        if (!(ss >> q.a >> q.b >> q.c >> q.d) || (ss >> extra))
            throw DataError("analogy file line " + std::to_string(lineno) +
                            " is not 'a b c d': " + line);
        set.questions.push_back(std::move(q));
    }
    return set;
}

SlabAccuracy analogy_accuracy(const SlabEmbedding& m, const AnalogySet& set) {
    SlabAccuracy acc;
    acc.slab_key = m.slab_key;
    std::vector<double> target(m.dim);
    for (const AnalogyQuestion& q : set.questions) {
        auto a = m.index(q.a), b = m.index(q.b), c = m.index(q.c), d = m.index(q.d);
        if (!a || !b || !c || !d) continue;
        ++acc.attempted;
        for (int k = 0; k < m.dim; ++k)
            target[k] = m.input[*b * static_cast<std::size_t>(m.dim) + k] -
                        m.input[*a * static_cast<std::size_t>(m.dim) + k] +
                        m.input[*c * static_cast<std::size_t>(m.dim) + k];
        int best = -1;
        double best_sim = 0;
        for (int j = 0; j < static_cast<int>(m.vocab()); ++j) {
            if (j == *a || j == *b || j == *c) continue;
            double sim = cosine(target, m.row(j));
            if (best < 0 || sim > best_sim) {
                best = j;
                best_sim = sim;
            }
        }
        if (best == *d) ++acc.correct;
    }
    acc.answerable = acc.attempted > 0;
    acc.raw = acc.attempted ? static_cast<double>(acc.correct) /
                                  static_cast<double>(acc.attempted)
                            : 0.0;
    return acc;
}

void normalize_accuracies(std::span<SlabAccuracy> group) {
    if (group.empty()) return;
    double sum = 0;
    for (const auto& a : group) sum += a.raw;
    if (sum > 0) {
        for (auto& a : group) a.normalized = a.raw / sum;
    } else {
        double uniform = 1.0 / static_cast<double>(group.size());
        for (auto& a : group) a.normalized = uniform;
    }
}

}  // namespace authorlink
