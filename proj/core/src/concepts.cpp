#include "authorlink/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "authorlink/common.hpp"

namespace authorlink {

CombineMode combine_mode_from(std::string_view name) {
    if (name == "avg") return CombineMode::kAvg;
    if (name == "sum") return CombineMode::kSum;
    throw UsageError("unknown combine mode: " + std::string(name));
}

std::string combine_mode_name(CombineMode mode) {
    return mode == CombineMode::kAvg ? "avg" : "sum";
}

TweetVector tweet_vector(const Message& msg, const CollectiveVectors& vectors,
                         CombineMode mode) {
    TweetVector out;
    out.id = msg.id;
    out.values.assign(vectors.dim, 0.0);
    std::size_t hits = 0;
    for (const std::string& tok : msg.tokens) {
        int i = vectors.index(tok);
        if (i < 0) continue;
        const double* row = vectors.row(i);
        for (int d = 0; d < vectors.dim; ++d) out.values[d] += row[d];
        ++hits;
    }
    if (hits == 0) {
        out.all_out_of_vocab = true;
        return out;
    }
    if (mode == CombineMode::kAvg)
        for (double& v : out.values) v /= static_cast<double>(hits);
    return out;
}

std::vector<TweetVector> tweet_vectors(const MessageSet& set, const CollectiveVectors& vectors,
                                       CombineMode mode, int threads) {
    std::vector<TweetVector> out(set.messages().size());
    parallel_for(out.size(), [&](std::size_t i) {
        out[i] = tweet_vector(set.messages()[i], vectors, mode);
    }, threads);
    return out;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw UsageError("euclidean: dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void l2_normalize(std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    if (s == 0.0) return;
    double inv = 1.0 / std::sqrt(s);
    for (double& x : v) x *= inv;
}

void l2_normalize_rows(std::vector<std::vector<double>>& rows) {
    for (auto& r : rows) l2_normalize(r);
}

namespace {

std::vector<std::vector<double>> member_means(const std::vector<std::vector<double>>& points,
                                              const std::vector<int>& assignment,
                                              int n_clusters) {
    std::size_t dim = points.empty() ? 0 : points[0].size();
    std::vector<std::vector<double>> means(n_clusters, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(n_clusters, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        int c = assignment[i];
        if (c < 0) continue;
        for (std::size_t d = 0; d < dim; ++d) means[c][d] += points[i][d];
        ++counts[c];
    }
    for (int c = 0; c < n_clusters; ++c)
        if (counts[c] > 0)
            for (double& v : means[c]) v /= static_cast<double>(counts[c]);
    return means;
}

}  // namespace

ConceptModel dbscan(const std::vector<std::vector<double>>& points, double eps, int min_pts) {
    if (eps <= 0.0) throw UsageError("dbscan radius must be positive");
    if (min_pts < 1) throw UsageError("dbscan min_pts must be at least 1");
    const int n = static_cast<int>(points.size());
    constexpr int kUnvisited = -2;
    std::vector<int> labels(n, kUnvisited);
    auto region = [&](int p) {
        std::vector<int> out;
        for (int q = 0; q < n; ++q)
            if (euclidean(points[p], points[q]) <= eps) out.push_back(q);
        return out;
    };
    int clusters = 0;
    for (int p = 0; p < n; ++p) {
        if (labels[p] != kUnvisited) continue;
        std::vector<int> nb = region(p);
        if (static_cast<int>(nb.size()) < min_pts) {
            labels[p] = -1;
            continue;
        }
        int c = clusters++;
        labels[p] = c;
        std::vector<int> seeds = std::move(nb);
        for (std::size_t qi = 0; qi < seeds.size(); ++qi) {
            int q = seeds[qi];
            if (labels[q] == -1) labels[q] = c;  // noise becomes a border point
            if (labels[q] != kUnvisited) continue;
            labels[q] = c;
            std::vector<int> nq = region(q);
            if (static_cast<int>(nq.size()) >= min_pts)
                seeds.insert(seeds.end(), nq.begin(), nq.end());
        }
    }
    ConceptModel m;
    m.method = "dbscan";
    m.eps = eps;
    m.min_pts = min_pts;
    m.dim = points.empty() ? 0 : static_cast<int>(points[0].size());
    m.assignment = std::move(labels);
    m.centroids = member_means(points, m.assignment, clusters);
    return m;
}

ConceptModel kmedoids(const std::vector<std::vector<double>>& points, int k,
                      std::uint64_t seed, int restarts,
                      std::vector<std::vector<double>>* cost_trace) {
    const int n = static_cast<int>(points.size());
    if (k < 1) throw UsageError("kmedoids k must be at least 1");
    if (k > n) throw UsageError("kmedoids k exceeds the number of points");
    if (restarts < 1) throw UsageError("kmedoids needs at least one restart");
    if (cost_trace != nullptr) cost_trace->clear();

    Rng rng(seed);
    std::vector<int> best_medoids;
    std::vector<int> best_assignment;
    double best_cost = std::numeric_limits<double>::infinity();

    std::vector<int> order(n);
    for (int r = 0; r < restarts; ++r) {
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::vector<int> medoids(order.begin(), order.begin() + k);
        std::sort(medoids.begin(), medoids.end());

        std::vector<int> assignment(n, 0);
        std::vector<double> trace;
        double cost = 0;
        for (int iter = 0; iter < 100; ++iter) {
            cost = 0;
            for (int i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int arg = 0;
                for (int c = 0; c < k; ++c) {
                    double d = euclidean(points[i], points[medoids[c]]);
                    if (d < best) {
                        best = d;
                        arg = c;
                    }
                }
                assignment[i] = arg;
                cost += best;
            }
            trace.push_back(cost);

            std::vector<int> next = medoids;
            for (int c = 0; c < k; ++c) {
                double best = std::numeric_limits<double>::infinity();
                int arg = -1;
                for (int i = 0; i < n; ++i) {
                    if (assignment[i] != c) continue;
                    double total = 0;
                    for (int j = 0; j < n; ++j)
                        if (assignment[j] == c) total += euclidean(points[i], points[j]);
                    if (total < best) {
                        best = total;
                        arg = i;
                    }
                }
                if (arg >= 0) next[c] = arg;  // empty clusters keep their medoid
            }
            if (next == medoids) break;
            medoids = std::move(next);
        }
        if (cost_trace != nullptr) cost_trace->push_back(std::move(trace));
        if (cost < best_cost) {
            best_cost = cost;
            best_medoids = medoids;
            best_assignment = assignment;
        }
    }

    ConceptModel m;
    m.method = "kmedoids";
    m.k = k;
    m.seed = seed;
    m.restarts = restarts;
    m.dim = points.empty() ? 0 : static_cast<int>(points[0].size());
    m.assignment = std::move(best_assignment);
    for (int c : best_medoids) m.centroids.push_back(points[c]);
    return m;
}

double silhouette(const std::vector<std::vector<double>>& points,
                  const std::vector<int>& assignment, bool* degenerate) {
    if (degenerate != nullptr) *degenerate = false;
    int n_clusters = 0;
    for (int a : assignment) n_clusters = std::max(n_clusters, a + 1);
    std::vector<std::size_t> sizes(n_clusters, 0);
    for (int a : assignment)
        if (a >= 0) ++sizes[a];
    int populated = 0;
    for (std::size_t s : sizes) populated += s > 0 ? 1 : 0;
    std::size_t assigned = 0;
    for (int a : assignment) assigned += a >= 0 ? 1 : 0;
    if (populated < 2 || assigned == 0) {
        if (degenerate != nullptr) *degenerate = true;
        return 0.0;
    }

    double total = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        int ci = assignment[i];
        if (ci < 0) continue;
        if (sizes[ci] == 1) continue;  // convention: s(i) = 0
        std::vector<double> sum(n_clusters, 0.0);
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (assignment[j] < 0 || j == i) continue;
            sum[assignment[j]] += euclidean(points[i], points[j]);
        }
        double a = sum[ci] / static_cast<double>(sizes[ci] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < n_clusters; ++c) {
            if (c == ci || sizes[c] == 0) continue;
            b = std::min(b, sum[c] / static_cast<double>(sizes[c]));
        }
        double m = std::max(a, b);
        total += m == 0.0 ? 0.0 : (b - a) / m;
    }
    return total / static_cast<double>(assigned);
}

double davies_bouldin(const std::vector<std::vector<double>>& points,
                      const std::vector<int>& assignment, bool* degenerate) {
    if (degenerate != nullptr) *degenerate = false;
    int n_clusters = 0;
    for (int a : assignment) n_clusters = std::max(n_clusters, a + 1);
    std::vector<std::size_t> sizes(n_clusters, 0);
    for (int a : assignment)
        if (a >= 0) ++sizes[a];
    std::vector<int> live;
    for (int c = 0; c < n_clusters; ++c)
        if (sizes[c] > 0) live.push_back(c);
    if (live.size() < 2) {
        if (degenerate != nullptr) *degenerate = true;
        return 0.0;
    }

    std::vector<std::vector<double>> means = member_means(points, assignment, n_clusters);
    std::vector<double> scatter(n_clusters, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        int c = assignment[i];
        if (c < 0) continue;
        scatter[c] += euclidean(points[i], means[c]);
    }
    for (int c : live) scatter[c] /= static_cast<double>(sizes[c]);

    double total = 0;
    for (int ci : live) {
        double worst = 0;
        for (int cj : live) {
            if (cj == ci) continue;
            double sep = euclidean(means[ci], means[cj]);
            double r = sep == 0.0 ? std::numeric_limits<double>::infinity()
                                  : (scatter[ci] + scatter[cj]) / sep;
            worst = std::max(worst, r);
        }
        total += worst;
    }
    return total / static_cast<double>(live.size());
}

std::vector<double> concept_vector(const std::vector<double>& tweet, const ConceptModel& model) {
    if (model.centroids.empty()) throw DataError("concept model has no clusters");
    std::vector<double> out(model.centroids.size());
    for (std::size_t j = 0; j < model.centroids.size(); ++j)
        out[j] = euclidean(tweet, model.centroids[j]);
    return out;
}

void save_concepts(const ConceptModel& m, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out << "authorlink-concepts 1\n";
    out << "method " << m.method << '\n';
    out << "eps " << dtos(m.eps) << '\n';
    out << "min_pts " << m.min_pts << '\n';
    out << "k " << m.k << '\n';
    out << "seed " << m.seed << '\n';
    out << "restarts " << m.restarts << '\n';
    out << "dim " << m.dim << '\n';
    out << "centroids " << m.centroids.size() << '\n';
    for (const auto& c : m.centroids) {
        for (std::size_t d = 0; d < c.size(); ++d) out << (d > 0 ? " " : "") << dtos(c[d]);
        out << '\n';
    }
    out << "assignment " << m.assignment.size() << '\n';
    for (std::size_t i = 0; i < m.assignment.size(); ++i)
        out << m.assignment[i] << ((i + 1) % 32 == 0 || i + 1 == m.assignment.size() ? '\n' : ' ');
    out << "end\n";
    if (!out) throw DataError("write failed: " + file.string());
}

ConceptModel load_concepts(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    std::string word;
    auto expect = [&](const char* tag) {
        if (!(in >> word) || word != tag)
            throw DataError("bad concept file (" + std::string(tag) + "): " + file.string());
    };
    expect("authorlink-concepts");
    int version = 0;
    in >> version;
    if (version != 1) throw DataError("unsupported concept file version");
    ConceptModel m;
    expect("method");
    in >> m.method;
    if (m.method != "dbscan" && m.method != "kmedoids")
        throw DataError("unknown clustering method: " + m.method);
    expect("eps");
    in >> word;
    m.eps = stod_strict(word, "eps");
    expect("min_pts");
    in >> m.min_pts;
    expect("k");
    in >> m.k;
    expect("seed");
    in >> m.seed;
    expect("restarts");
    in >> m.restarts;
    expect("dim");
    in >> m.dim;
    expect("centroids");
    std::size_t n_centroids = 0;
    in >> n_centroids;
    if (!in || m.dim < 0) throw DataError("bad concept file header: " + file.string());
    m.centroids.assign(n_centroids, std::vector<double>(m.dim));
    for (auto& c : m.centroids)
        for (double& v : c) {
            if (!(in >> word)) throw DataError("truncated centroids: " + file.string());
            v = stod_strict(word, "centroid value");
        }
    expect("assignment");
    std::size_t n_assign = 0;
    in >> n_assign;
    m.assignment.resize(n_assign);
    for (int& a : m.assignment)
        if (!(in >> a)) throw DataError("truncated assignment: " + file.string());
    expect("end");
    return m;
}

}  // namespace authorlink
