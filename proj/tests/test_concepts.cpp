#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "authorlink/common.hpp"
#include "authorlink/concepts.hpp"

using namespace authorlink;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "authorlink_tests";
    fs::create_directories(dir);
    return dir / name;
}

CollectiveVectors tiny_vectors() {
    CollectiveVectors v;
    v.dim = 2;
    v.terms = {"a", "b", "c"};
    for (std::size_t i = 0; i < v.terms.size(); ++i)
        v.term_index.emplace(v.terms[i], static_cast<int>(i));
    v.data = {1, 0, 0, 1, -1, 0};
    v.empty = {0, 0, 0};
    return v;
}

Message msg(std::vector<std::string> tokens) {
    return Message{"m", "u", 0, std::move(tokens)};
}

std::vector<std::vector<double>> two_blobs(int per_blob, double spread, Rng& rng) {
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < per_blob; ++i)
        pts.push_back({rng.range(-spread, spread), rng.range(-spread, spread)});
    for (int i = 0; i < per_blob; ++i)
        pts.push_back({10 + rng.range(-spread, spread), 10 + rng.range(-spread, spread)});
    return pts;
}

// independent density-clustering reference: neighbor lists first, then DFS
// over core points
std::vector<int> dbscan_oracle(const std::vector<std::vector<double>>& pts, double eps,
                               int min_pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<std::vector<int>> nb(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (euclidean(pts[i], pts[j]) <= eps) nb[i].push_back(j);
    std::vector<bool> core(n);
    for (int i = 0; i < n; ++i) core[i] = static_cast<int>(nb[i].size()) >= min_pts;
    std::vector<int> label(n, -2);
    int c = 0;
    for (int i = 0; i < n; ++i) {
        if (label[i] != -2) continue;
        if (!core[i]) {
            label[i] = -1;
            continue;
        }
        label[i] = c;
        std::vector<int> stack{i};
        while (!stack.empty()) {
            int p = stack.back();
            stack.pop_back();
            for (int q : nb[p]) {
                if (label[q] == c) continue;
                if (label[q] == -2 || label[q] == -1) {
                    label[q] = c;
                    if (core[q]) stack.push_back(q);
                }
            }
        }
        ++c;
    }
    for (int& l : label)
        if (l == -2) l = -1;
    return label;
}

double silhouette_oracle(const std::vector<std::vector<double>>& pts,
                         const std::vector<int>& asn) {
    const int n = static_cast<int>(pts.size());
    int k = 0;
    for (int a : asn) k = std::max(k, a + 1);
    std::vector<int> size(k, 0);
    for (int a : asn)
        if (a >= 0) ++size[a];
    double total = 0;
    int assigned = 0;
    for (int i = 0; i < n; ++i) {
        if (asn[i] < 0) continue;
        ++assigned;
        if (size[asn[i]] == 1) continue;
        std::vector<double> mean(k, 0.0);
        for (int j = 0; j < n; ++j)
            if (asn[j] >= 0 && j != i) mean[asn[j]] += euclidean(pts[i], pts[j]);
        double a = mean[asn[i]] / (size[asn[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c)
            if (c != asn[i] && size[c] > 0) b = std::min(b, mean[c] / size[c]);
        double m = std::max(a, b);
        if (m > 0) total += (b - a) / m;
    }
    return total / assigned;
}

double db_oracle(const std::vector<std::vector<double>>& pts, const std::vector<int>& asn) {
    int k = 0;
    for (int a : asn) k = std::max(k, a + 1);
    std::vector<int> size(k, 0);
    std::size_t dim = pts[0].size();
    std::vector<std::vector<double>> mu(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (asn[i] >= 0) {
            ++size[asn[i]];
            for (std::size_t d = 0; d < dim; ++d) mu[asn[i]][d] += pts[i][d];
        }
    for (int c = 0; c < k; ++c)
        for (double& v : mu[c]) v /= size[c];
    std::vector<double> s(k, 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (asn[i] >= 0) s[asn[i]] += euclidean(pts[i], mu[asn[i]]);
    for (int c = 0; c < k; ++c) s[c] /= size[c];
    double total = 0;
    for (int i = 0; i < k; ++i) {
        double worst = 0;
        for (int j = 0; j < k; ++j)
            if (j != i) worst = std::max(worst, (s[i] + s[j]) / euclidean(mu[i], mu[j]));
        total += worst;
    }
    return total / k;
}

}  // namespace

TEST_CASE("combine mode names round-trip") {
    CHECK(combine_mode_from("avg") == CombineMode::kAvg);
    CHECK(combine_mode_from("sum") == CombineMode::kSum);
    CHECK(combine_mode_name(CombineMode::kSum) == "sum");
    CHECK_THROWS_AS(combine_mode_from("median"), UsageError);
}

TEST_CASE("tweet vectors merge in-vocabulary rows") {
    CollectiveVectors v = tiny_vectors();

    TweetVector one = tweet_vector(msg({"a"}), v, CombineMode::kAvg);
    CHECK(one.values == std::vector<double>{1, 0});
    CHECK(tweet_vector(msg({"a"}), v, CombineMode::kSum).values == one.values);
    CHECK_FALSE(one.all_out_of_vocab);

    // opposite vectors cancel but are not out-of-vocabulary
    TweetVector opp = tweet_vector(msg({"a", "c"}), v, CombineMode::kSum);
    CHECK(opp.values == std::vector<double>{0, 0});
    CHECK_FALSE(opp.all_out_of_vocab);

    // naive accumulation oracle with duplicates and an unknown token
    TweetVector five = tweet_vector(msg({"a", "b", "a", "zz", "c"}), v, CombineMode::kSum);
    CHECK(five.values == std::vector<double>{1, 1});
    TweetVector avg = tweet_vector(msg({"a", "b", "a", "zz", "c"}), v, CombineMode::kAvg);
    CHECK(avg.values == std::vector<double>{0.25, 0.25});

    TweetVector oov = tweet_vector(msg({"zz", "qq"}), v, CombineMode::kAvg);
    CHECK(oov.all_out_of_vocab);
    CHECK(oov.values == std::vector<double>{0, 0});
}

TEST_CASE("euclidean distance: closed forms and a naive oracle") {
    std::vector<double> a{1, 2, 3}, b{1, 2, 3};
    CHECK(euclidean(a, b) == 0.0);
    CHECK(euclidean(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == doctest::Approx(5.0));

    Rng rng(40);
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
        x[i] = rng.range(-3, 3);
        y[i] = rng.range(-3, 3);
    }
    double want = 0;
    for (int i = 0; i < 50; ++i) want += (x[i] - y[i]) * (x[i] - y[i]);
    CHECK(euclidean(x, y) == doctest::Approx(std::sqrt(want)).epsilon(1e-12));
    CHECK_THROWS_AS(euclidean(a, std::vector<double>{1.0}), UsageError);
}

TEST_CASE("normalization: unit length, zero is kept, sum and avg align") {
    std::vector<double> v{3, 4};
    l2_normalize(v);
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    std::vector<double> z{0, 0, 0};
    l2_normalize(z);
    CHECK(z == std::vector<double>{0, 0, 0});

    CollectiveVectors cv = tiny_vectors();
    Message m = msg({"a", "b", "a"});
    std::vector<double> s = tweet_vector(m, cv, CombineMode::kSum).values;
    std::vector<double> a = tweet_vector(m, cv, CombineMode::kAvg).values;
    l2_normalize(s);
    l2_normalize(a);
    for (int d = 0; d < 2; ++d) CHECK(s[d] == doctest::Approx(a[d]).epsilon(1e-12));
}

TEST_CASE("density clustering separates blobs and flags noise") {
    Rng rng(7);
    std::vector<std::vector<double>> pts = two_blobs(6, 0.1, rng);
    pts.push_back({50, 50});  // isolated
    ConceptModel m = dbscan(pts, 1.0, 3);
    REQUIRE(m.clusters() == 2);
    for (int i = 0; i < 6; ++i) CHECK(m.assignment[i] == 0);
    for (int i = 6; i < 12; ++i) CHECK(m.assignment[i] == 1);
    CHECK(m.assignment[12] == -1);

    // centroids are the member means
    for (int c = 0; c < 2; ++c) {
        std::vector<double> mean(2, 0.0);
        for (int i = c * 6; i < (c + 1) * 6; ++i)
            for (int d = 0; d < 2; ++d) mean[d] += pts[i][d];
        for (int d = 0; d < 2; ++d) CHECK(m.centroids[c][d] == mean[d] / 6.0);
    }

    CHECK_THROWS_AS(dbscan(pts, 0.0, 3), UsageError);
    CHECK_THROWS_AS(dbscan(pts, 1.0, 0), UsageError);
}

TEST_CASE("density labels match the reference expansion on random sets") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        Rng rng(seed);
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 200; ++i) pts.push_back({rng.real(), rng.real()});
        ConceptModel m = dbscan(pts, 0.08, 4);
        std::vector<int> want = dbscan_oracle(pts, 0.08, 4);
        CHECK(m.assignment == want);
        int clusters = 0;
        for (int a : want) clusters = std::max(clusters, a + 1);
        CHECK(static_cast<int>(m.clusters()) == clusters);
    }
}

TEST_CASE("medoid clustering recovers planted blobs with decreasing cost") {
    Rng rng(11);
    std::vector<std::vector<double>> pts = two_blobs(15, 0.5, rng);
    std::vector<std::vector<double>> trace;
    ConceptModel m = kmedoids(pts, 2, 99, 10, &trace);
    REQUIRE(m.clusters() == 2);

    // the planted split is recovered (up to cluster numbering)
    for (int i = 1; i < 15; ++i) CHECK(m.assignment[i] == m.assignment[0]);
    for (int i = 16; i < 30; ++i) CHECK(m.assignment[i] == m.assignment[15]);
    CHECK(m.assignment[0] != m.assignment[15]);

    // per-restart cost histories are non-increasing
    REQUIRE(trace.size() == 10);
    for (const auto& t : trace) {
        REQUIRE(!t.empty());
        for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] <= t[i - 1] + 1e-12);
    }

    // final cost beats random medoid choices
    auto cost_of = [&](const std::vector<int>& medoids) {
        double cost = 0;
        for (const auto& p : pts) {
            double best = std::numeric_limits<double>::infinity();
            for (int c : medoids) best = std::min(best, euclidean(p, pts[c]));
            cost += best;
        }
        return cost;
    };
    double final_cost = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        final_cost += euclidean(pts[i], m.centroids[m.assignment[i]]);
    Rng baseline(123);
    for (int t = 0; t < 1000; ++t) {
        int a = static_cast<int>(baseline.index(pts.size()));
        int b = static_cast<int>(baseline.index(pts.size()));
        if (a == b) continue;
        CHECK(final_cost <= cost_of({a, b}) + 1e-12);
    }
}

TEST_CASE("medoid clustering edge cases") {
    std::vector<std::vector<double>> pts{{0, 0}, {1, 0}, {2, 0}};
    ConceptModel m = kmedoids(pts, 3, 1, 2);
    double cost = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        cost += euclidean(pts[i], m.centroids[m.assignment[i]]);
    CHECK(cost == 0.0);
    std::vector<int> seen(3, 0);
    for (int a : m.assignment) ++seen[a];
    CHECK(seen == std::vector<int>{1, 1, 1});

    CHECK_THROWS_AS(kmedoids(pts, 4, 1, 1), UsageError);
    CHECK_THROWS_AS(kmedoids(pts, 0, 1, 1), UsageError);
    CHECK_THROWS_AS(kmedoids(pts, 2, 1, 0), UsageError);
}

TEST_CASE("silhouette: blobs near one, degenerate flagged, oracle match") {
    Rng rng(13);
    std::vector<std::vector<double>> pts = two_blobs(10, 0.3, rng);
    std::vector<int> asn(20, 0);
    for (int i = 10; i < 20; ++i) asn[i] = 1;
    bool degenerate = true;
    CHECK(silhouette(pts, asn, &degenerate) > 0.9);
    CHECK_FALSE(degenerate);

    std::vector<int> one(20, 0);
    CHECK(silhouette(pts, one, &degenerate) == 0.0);
    CHECK(degenerate);

    // 50 random points, 3 ragged clusters + noise, against the direct formula
    std::vector<std::vector<double>> rpts;
    std::vector<int> rasn;
    for (int i = 0; i < 50; ++i) {
        rpts.push_back({rng.range(-2, 2), rng.range(-2, 2), rng.range(-2, 2)});
        rasn.push_back(i % 7 == 0 ? -1 : static_cast<int>(rng.index(3)));
    }
    CHECK(silhouette(rpts, rasn) == doctest::Approx(silhouette_oracle(rpts, rasn)).epsilon(1e-9));
}

TEST_CASE("davies-bouldin: blobs near zero, overlap large, oracle match") {
    Rng rng(17);
    std::vector<std::vector<double>> pts = two_blobs(10, 0.1, rng);
    std::vector<int> asn(20, 0);
    for (int i = 10; i < 20; ++i) asn[i] = 1;
    bool degenerate = true;
    CHECK(davies_bouldin(pts, asn, &degenerate) < 0.2);
    CHECK_FALSE(degenerate);

    // two interleaved wide clusters around the same center
    std::vector<std::vector<double>> overlap;
    std::vector<int> oasn;
    for (int i = 0; i < 40; ++i) {
        overlap.push_back({rng.range(-1, 1), rng.range(-1, 1)});
        oasn.push_back(i % 2);
    }
    CHECK(davies_bouldin(overlap, oasn) > 2.0);

    std::vector<int> one(20, 0);
    CHECK(davies_bouldin(pts, one, &degenerate) == 0.0);
    CHECK(degenerate);

    // coincident centroids blow up to infinity
    std::vector<std::vector<double>> mirror{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    std::vector<int> masn{0, 0, 1, 1};
    CHECK(std::isinf(davies_bouldin(mirror, masn)));

    std::vector<std::vector<double>> rpts;
    std::vector<int> rasn;
    for (int i = 0; i < 50; ++i) {
        rpts.push_back({rng.range(-2, 2), rng.range(-2, 2)});
        rasn.push_back(static_cast<int>(rng.index(4)));
    }
    CHECK(davies_bouldin(rpts, rasn) == doctest::Approx(db_oracle(rpts, rasn)).epsilon(1e-9));
}

TEST_CASE("concept vectors list distances to every centroid") {
    ConceptModel m;
    m.method = "kmedoids";
    m.dim = 2;
    m.centroids = {{0, 0}, {3, 4}, {-3, -4}};
    std::vector<double> tweet{0, 0};
    std::vector<double> cv = concept_vector(tweet, m);
    REQUIRE(cv.size() == 3);
    CHECK(cv[0] == 0.0);
    CHECK(cv[1] == doctest::Approx(5.0));
    CHECK(cv[2] == doctest::Approx(5.0));
    for (std::size_t j = 0; j < 3; ++j)
        CHECK((cv[j] == 0.0) == (tweet == m.centroids[j]));

    ConceptModel single;
    single.centroids = {{1, 1}};
    CHECK(concept_vector({1, 1}, single).size() == 1);

    ConceptModel empty;
    CHECK_THROWS_AS(concept_vector(tweet, empty), DataError);
}

TEST_CASE("concept model persistence round-trips") {
    Rng rng(23);
    std::vector<std::vector<double>> pts = two_blobs(8, 0.2, rng);
    pts.push_back({99, 99});
    ConceptModel m = dbscan(pts, 1.0, 3);
    auto f = tmp_file("concepts_dbscan.txt");
    save_concepts(m, f);
    ConceptModel r = load_concepts(f);
    CHECK(r.method == "dbscan");
    CHECK(r.eps == m.eps);
    CHECK(r.min_pts == m.min_pts);
    CHECK(r.dim == 2);
    CHECK(r.centroids == m.centroids);
    CHECK(r.assignment == m.assignment);

    ConceptModel km = kmedoids(pts, 3, 42, 4);
    auto f2 = tmp_file("concepts_kmedoids.txt");
    save_concepts(km, f2);
    ConceptModel r2 = load_concepts(f2);
    CHECK(r2.method == "kmedoids");
    CHECK(r2.k == 3);
    CHECK(r2.seed == 42);
    CHECK(r2.restarts == 4);
    CHECK(r2.centroids == km.centroids);
    CHECK(r2.assignment == km.assignment);

    auto bad = tmp_file("concepts_bad.txt");
    std::ofstream(bad) << "authorlink-concepts 1\nmethod dbscan\neps 0.3\n";
    CHECK_THROWS_AS(load_concepts(bad), DataError);
}
