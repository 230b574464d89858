#include "authorlink/linking.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "authorlink/common.hpp"
#include "authorlink/concepts.hpp"

namespace authorlink {

SimilarityMetric metric_from(std::string_view name) {
    if (name == "cosine") return SimilarityMetric::kCosine;
    if (name == "inverse_distance") return SimilarityMetric::kInverseDistance;
    throw UsageError("unknown similarity metric: " + std::string(name));
}

std::string metric_name(SimilarityMetric metric) {
    return metric == SimilarityMetric::kCosine ? "cosine" : "inverse_distance";
}

int AuthorSimilarityMatrix::index(const std::string& author) const {
    auto it = std::lower_bound(authors.begin(), authors.end(), author);
    if (it == authors.end() || *it != author) return -1;
    return static_cast<int>(it - authors.begin());
}

AuthorSimilarityMatrix similarity_matrix(const LabeledVectors& vectors, const std::string& kind,
                                         SimilarityMetric metric, int threads) {
    if (!std::is_sorted(vectors.ids.begin(), vectors.ids.end()) ||
        std::adjacent_find(vectors.ids.begin(), vectors.ids.end()) != vectors.ids.end())
        throw UsageError("author vectors must be sorted by unique id");
    AuthorSimilarityMatrix m;
    m.kind = kind;
    m.authors = vectors.ids;
    std::size_t n = m.authors.size();
    m.data.assign(n * n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        m.data[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double s;
            if (metric == SimilarityMetric::kCosine)
                s = std::clamp(cosine(vectors.rows[i], vectors.rows[j]), -1.0, 1.0);
            else
                s = 1.0 / (1.0 + euclidean(vectors.rows[i], vectors.rows[j]));
            m.data[i * n + j] = s;
            m.data[j * n + i] = s;
        }
    }, threads);
    return m;
}

AuthorSimilarityMatrix blend(const AuthorSimilarityMatrix& content,
                             const AuthorSimilarityMatrix& concept_m, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw UsageError("alpha must be within [0, 1]");
    if (content.authors != concept_m.authors)
        throw DataError("content and concept matrices disagree on authors");
    AuthorSimilarityMatrix m;
    m.kind = "total";
    m.alpha = alpha;
    m.authors = content.authors;
    m.data.resize(content.data.size());
    for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = alpha * concept_m.data[i] + (1.0 - alpha) * content.data[i];
    return m;
}

AuthorGraph build_graph(const AuthorSimilarityMatrix& m, int top_k) {
    AuthorGraph g;
    g.authors = m.authors;
    int n = m.n();
    if (top_k < 0) throw UsageError("top_k must be non-negative");
    if (top_k == 0) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                g.edges.push_back({i, j, m.at(i, j)});
        return g;
    }
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(n) * n, 0);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            if (m.at(i, x) != m.at(i, y)) return m.at(i, x) > m.at(i, y);
            return x < y;
        });
        int taken = 0;
        for (int j : order) {
            if (j == i) continue;
            int a = std::min(i, j), b = std::max(i, j);
            keep[static_cast<std::size_t>(a) * n + b] = 1;
            if (++taken == top_k) break;
        }
    }
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (keep[static_cast<std::size_t>(a) * n + b]) g.edges.push_back({a, b, m.at(a, b)});
    return g;
}

LinkMode link_mode_from(std::string_view name) {
    if (name == "literal") return LinkMode::kLiteral;
    if (name == "kruskal") return LinkMode::kKruskal;
    throw UsageError("unknown link mode: " + std::string(name));
}

std::string link_mode_name(LinkMode mode) {
    return mode == LinkMode::kLiteral ? "literal" : "kruskal";
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[std::max(a, b)] = std::min(a, b);
        return true;
    }
};

}  // namespace

SpanningForest sw_mst(const AuthorGraph& g, LinkMode mode) {
    if (g.authors.empty()) throw DataError("empty author graph");
    const int n = static_cast<int>(g.authors.size());
    // pop order: heaviest first, equal weights by (author_a, author_b)
    std::vector<AuthorGraph::Edge> pops = g.edges;
    std::sort(pops.begin(), pops.end(), [](const AuthorGraph::Edge& x, const AuthorGraph::Edge& y) {
        if (x.weight != y.weight) return x.weight > y.weight;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    SpanningForest f;
    f.mode = link_mode_name(mode);
    f.authors = g.authors;
    UnionFind uf(n);
    if (mode == LinkMode::kLiteral) {
        std::vector<std::uint8_t> covered(n, 0);
        int n_covered = 0;
        for (const auto& e : pops) {
            f.edges.push_back(e);
            uf.unite(e.a, e.b);
            if (!covered[e.a]) {
                covered[e.a] = 1;
                ++n_covered;
            }
            if (!covered[e.b]) {
                covered[e.b] = 1;
                ++n_covered;
            }
            if (n_covered == n) break;
        }
    } else {
        for (const auto& e : pops)
            if (uf.unite(e.a, e.b)) f.edges.push_back(e);
    }

    double total = 0;
    for (const auto& e : f.edges) total += e.weight;
    f.average_weight = f.edges.empty() ? 0.0 : total / static_cast<double>(f.edges.size());

    f.component.assign(n, -1);
    f.n_components = 0;
    for (int i = 0; i < n; ++i) {
        int root = uf.find(i);
        if (f.component[root] < 0) f.component[root] = f.n_components++;
        f.component[i] = f.component[root];
    }
    return f;
}

QuerySubgraph query_subgraph(const SpanningForest& forest, const std::string& author_id) {
    auto it = std::find(forest.authors.begin(), forest.authors.end(), author_id);
    if (it == forest.authors.end()) throw DataError("unknown author: " + author_id);
    int q = static_cast<int>(it - forest.authors.begin());
    int comp = forest.component[q];

    QuerySubgraph out;
    std::vector<int> remap(forest.authors.size(), -1);
    for (std::size_t i = 0; i < forest.authors.size(); ++i)
        if (forest.component[i] == comp) {
            remap[i] = static_cast<int>(out.authors.size());
            out.authors.push_back(forest.authors[i]);
        }
    double total = 0;
    for (const auto& e : forest.edges)
        if (forest.component[e.a] == comp) {
            out.edges.push_back({remap[e.a], remap[e.b], e.weight});
            total += e.weight;
        }
    out.average_weight = out.edges.empty() ? 0.0 : total / static_cast<double>(out.edges.size());
    return out;
}

void save_matrix(const AuthorSimilarityMatrix& m, const std::filesystem::path& file) {
    {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw DataError("cannot write " + file.string());
        static_assert(sizeof(double) == 8);
        out.write(reinterpret_cast<const char*>(m.data.data()),
                  static_cast<std::streamsize>(m.data.size() * sizeof(double)));
        if (!out) throw DataError("write failed: " + file.string());
    }
    std::ofstream idx(file.string() + ".idx", std::ios::binary);
    if (!idx) throw DataError("cannot write " + file.string() + ".idx");
    idx << "authorlink-matrix " << m.kind << ' ' << dtos(m.alpha) << ' ' << m.authors.size()
        << '\n';
    for (const auto& a : m.authors) idx << a << '\n';
    if (!idx) throw DataError("write failed: " + file.string() + ".idx");
}

AuthorSimilarityMatrix load_matrix(const std::filesystem::path& file) {
    AuthorSimilarityMatrix m;
    {
        std::ifstream idx(file.string() + ".idx", std::ios::binary);
        if (!idx) throw DataError("cannot read " + file.string() + ".idx");
        std::string tag, alpha;
        std::size_t n = 0;
        if (!(idx >> tag >> m.kind >> alpha >> n) || tag != "authorlink-matrix")
            throw DataError("bad matrix sidecar: " + file.string() + ".idx");
        m.alpha = stod_strict(alpha, "alpha");
        std::string line;
        std::getline(idx, line);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::getline(idx, line) || line.empty())
                throw DataError("truncated matrix sidecar: " + file.string() + ".idx");
            m.authors.push_back(line);
        }
    }
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    std::size_t n = m.authors.size();
    m.data.resize(n * n);
    in.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(m.data.size() * sizeof(double)))
        throw DataError("truncated matrix data: " + file.string());
    return m;
}

void save_forest(const SpanningForest& f, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out << "# authorlink-forest mode=" << f.mode << " avg=" << dtos(f.average_weight)
        << " authors=" << f.authors.size() << " components=" << f.n_components << '\n';
    for (std::size_t i = 0; i < f.authors.size(); ++i)
        out << "# node " << f.authors[i] << ' ' << f.component[i] << '\n';
    for (const auto& e : f.edges)
        out << f.authors[e.a] << '\t' << f.authors[e.b] << '\t' << dtos(e.weight) << '\t'
            << f.component[e.a] << '\n';
    if (!out) throw DataError("write failed: " + file.string());
}

SpanningForest load_forest(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty forest file: " + file.string());
    SpanningForest f;
    std::size_t n_authors = 0;
    int n_components = 0;
    {
        std::istringstream head(line);
        std::string hash, tag, field;
        if (!(head >> hash >> tag) || hash != "#" || tag != "authorlink-forest")
            throw DataError("bad forest header: " + file.string());
        while (head >> field) {
            auto eq = field.find('=');
            if (eq == std::string::npos) continue;
            std::string key = field.substr(0, eq), value = field.substr(eq + 1);
            if (key == "mode") f.mode = value;
            else if (key == "avg") f.average_weight = stod_strict(value, "avg");
            else if (key == "authors") n_authors = stol_strict(value, "authors");
            else if (key == "components") n_components = static_cast<int>(stol_strict(value, "components"));
        }
    }
    if (f.mode != "literal" && f.mode != "kruskal")
        throw DataError("bad forest mode: " + file.string());
    std::unordered_map<std::string, int> index;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream row(line);
            std::string hash, tag, author;
            int comp = 0;
            if (!(row >> hash >> tag >> author >> comp) || tag != "node")
                throw DataError("bad forest node line: " + file.string());
            index.emplace(author, static_cast<int>(f.authors.size()));
            f.authors.push_back(author);
            f.component.push_back(comp);
            continue;
        }
        std::istringstream row(line);
        std::string a, b, w;
        int comp = 0;
        if (!(row >> a >> b >> w >> comp)) throw DataError("bad forest edge: " + file.string());
        auto ia = index.find(a), ib = index.find(b);
        if (ia == index.end() || ib == index.end())
            throw DataError("forest edge references unknown node: " + file.string());
        f.edges.push_back({ia->second, ib->second, stod_strict(w, "weight")});
    }
    if (f.authors.size() != n_authors)
        throw DataError("forest node count mismatch: " + file.string());
    f.n_components = n_components;
    return f;
}

}  // namespace authorlink
