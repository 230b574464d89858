#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "authorlink/collective.hpp"
#include "authorlink/common.hpp"

using namespace authorlink;
namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kMon = 1614556800;

fs::path tmp_file(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "authorlink_tests";
    fs::create_directories(dir);
    return dir / name;
}

SlabEmbedding rows_model(const std::string& key, std::vector<std::string> terms, int dim,
                         std::vector<double> input) {
    SlabEmbedding m;
    m.slab_key = key;
    m.dim = dim;
    m.window = 2;
    m.terms = std::move(terms);
    for (std::size_t i = 0; i < m.terms.size(); ++i)
        m.term_index.emplace(m.terms[i], static_cast<int>(i));
    m.input = std::move(input);
    m.output.assign(m.input.size(), 0.0);
    return m;
}

SlabModel weighted(SlabEmbedding e, double norm_weight) {
    SlabModel m;
    m.embedding = std::move(e);
    m.accuracy.normalized = norm_weight;
    return m;
}

// one facet, one context, n slabs
SlabHierarchy single_facet(int n_slabs) {
    SlabHierarchy h;
    h.facets.push_back(TemporalFacet{"f", 7, 0.5, std::nullopt});
    SlabContext ctx;
    ctx.facet = 0;
    for (int s = 0; s < n_slabs; ++s) {
        Slab sl;
        sl.splits = {s};
        ctx.slabs.push_back(sl);
    }
    h.contexts.push_back(std::move(ctx));
    return h;
}

// root facet p with 2 slabs; child facet c with one context per parent slab
SlabHierarchy two_level() {
    SlabHierarchy h;
    h.facets.push_back(TemporalFacet{"p", 7, 0.5, std::nullopt});
    h.facets.push_back(TemporalFacet{"c", 4, 0.5, "p"});
    SlabContext root;
    root.facet = 0;
    root.slabs.resize(2);
    root.slabs[0].splits = {0, 1};
    root.slabs[1].splits = {5, 6};
    h.contexts.push_back(root);
    for (int s = 0; s < 2; ++s) {
        SlabContext child;
        child.facet = 1;
        child.path.push_back(PathStep{0, s, h.contexts[0].slabs[s].splits});
        child.slabs.resize(1);
        child.slabs[0].splits = {0};
        h.contexts.push_back(std::move(child));
    }
    return h;
}

MessageSet regime_corpus() {
    std::vector<Message> msgs;
    int id = 0;
    auto add = [&](int day, int hour, std::vector<std::string> toks) {
        msgs.push_back(Message{"m" + std::to_string(id), "u" + std::to_string(id % 3),
                               kMon + day * 86400 + hour * 3600 + id, std::move(toks)});
        ++id;
    };
    for (int d : {0, 1, 2, 3, 4})
        for (int r = 0; r < 4; ++r) {
            add(d, 9, {"work", "email", "meeting"});
            add(d, 15, {"email", "deadline", "work"});
        }
    for (int d : {5, 6})
        for (int r = 0; r < 4; ++r) {
            add(d, 11, {"beach", "party", "sun"});
            add(d, 20, {"party", "drinks", "beach"});
        }
    return MessageSet(std::move(msgs));
}

}  // namespace

TEST_CASE("slab cosine: identity, opposition, missing words, naive oracle") {
    SlabHierarchy h = single_facet(1);
    TrainedSlabs t;
    t.by_context.push_back({weighted(
        rows_model("f.0", {"u", "v", "w"}, 2, {1, 0, 0, 1, -1, 0}), 1.0)});
    Fusion f(h, t, {"u", "v", "w", "ghost"});

    CHECK(f.slab_cosine(0, 0, 0, 0) == 1.0);
    CHECK(f.slab_cosine(0, 0, 0, 1) == doctest::Approx(0.0));
    CHECK(f.slab_cosine(0, 0, 0, 2) == doctest::Approx(-1.0));
    CHECK(f.slab_cosine(0, 0, 0, 3) == 0.0);  // ghost is in no slab
    CHECK(f.slab_cosine(0, 0, 3, 3) == 0.0);

    // random model against an independently coded oracle
    SlabEmbedding r = init_embedding("f.0", {"a", "b", "c", "d", "e"}, 6, 2, 9);
    TrainedSlabs tr;
    tr.by_context.push_back({weighted(r, 1.0)});
    Fusion fr(h, tr, {"a", "b", "c", "d", "e"});
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            if (i == j) continue;
            std::vector<double> a(r.row(i).begin(), r.row(i).end());
            std::vector<double> b(r.row(j).begin(), r.row(j).end());
            double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
            double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
            double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
            CHECK(fr.slab_cosine(0, 0, i, j) == doctest::Approx(dot / (na * nb)).epsilon(1e-12));
        }
}

TEST_CASE("level similarity is the accuracy-weighted slab sum") {
    SlabHierarchy h = single_facet(3);
    // cos(u,v): slab0 = 0, slab1 = 1, slab2 = -1
    TrainedSlabs t;
    t.by_context.push_back(
        {weighted(rows_model("f.0", {"u", "v"}, 2, {1, 0, 0, 1}), 0.5),
         weighted(rows_model("f.1", {"u", "v"}, 2, {2, 0, 3, 0}), 0.25),
         weighted(rows_model("f.2", {"u", "v"}, 2, {1, 0, -4, 0}), 0.25)});
    Fusion f(h, t, {"u", "v"});
    CHECK(f.level_similarity(0, 0, 1) ==
          doctest::Approx(0.5 * 0.0 + 0.25 * 1.0 + 0.25 * -1.0).epsilon(1e-15));

    // single slab with unit weight degenerates to the slab cosine
    SlabHierarchy h1 = single_facet(1);
    TrainedSlabs t1;
    t1.by_context.push_back({weighted(rows_model("f.0", {"u", "v"}, 2, {1, 1, 1, 0}), 1.0)});
    Fusion f1(h1, t1, {"u", "v"});
    CHECK(f1.level_similarity(0, 0, 1) == f1.slab_cosine(0, 0, 0, 1));

    // two slabs with equal weight average the two cosines
    TrainedSlabs t2;
    t2.by_context.push_back(
        {weighted(rows_model("f.0", {"u", "v"}, 2, {1, 0, 0, 1}), 0.5),
         weighted(rows_model("f.1", {"u", "v"}, 2, {1, 0, 1, 0}), 0.5)});
    SlabHierarchy h2 = single_facet(2);
    Fusion f2(h2, t2, {"u", "v"});
    CHECK(f2.level_similarity(0, 0, 1) == doctest::Approx((0.0 + 1.0) / 2).epsilon(1e-15));
}

namespace {

// independent recursive oracle over the same structures
double oracle_level(const Fusion& f, const SlabHierarchy& h, const TrainedSlabs& t,
                    int facet, int i, int j) {
    double s = 0;
    for (std::size_t c = 0; c < h.contexts.size(); ++c) {
        if (h.contexts[c].facet != facet) continue;
        for (std::size_t k = 0; k < t.by_context[c].size(); ++k)
            s += t.by_context[c][k].accuracy.normalized *
                 f.slab_cosine(static_cast<int>(c), static_cast<int>(k), i, j);
    }
    return s;
}

double oracle_depth(const Fusion& f, const SlabHierarchy& h, const TrainedSlabs& t,
                    int facet, int i, int j) {
    double s = oracle_level(f, h, t, facet, i, j);
    for (std::size_t g = 0; g < h.facets.size(); ++g)
        if (h.facets[g].parent && *h.facets[g].parent == h.facets[facet].name)
            s += oracle_depth(f, h, t, static_cast<int>(g), i, j);
    return s;
}

double oracle_total(const Fusion& f, const SlabHierarchy& h, const TrainedSlabs& t,
                    int i, int j) {
    double s = 0;
    for (std::size_t g = 0; g < h.facets.size(); ++g)
        s += oracle_level(f, h, t, static_cast<int>(g), i, j);
    for (std::size_t g = 0; g < h.facets.size(); ++g)
        if (!h.facets[g].parent) s += oracle_depth(f, h, t, static_cast<int>(g), i, j);
    return s;
}

TrainedSlabs two_level_models() {
    TrainedSlabs t;
    // root context: slab A (weight .75) cos(u,v)=0; slab B (weight .25) cos=1
    t.by_context.push_back(
        {weighted(rows_model("p.0", {"u", "v", "w"}, 2, {1, 0, 0, 1, 1, 1}), 0.75),
         weighted(rows_model("p.1", {"u", "v"}, 2, {1, 0, 1, 0}), 0.25)});
    // child of slab 0: cos(u,v) = -1
    t.by_context.push_back(
        {weighted(rows_model("c@p.0.0", {"u", "v"}, 2, {0, 1, 0, -1}), 1.0)});
    // child of slab 1: only u -> contributes 0 to (u,v), row (2,2) to u
    t.by_context.push_back({weighted(rows_model("c@p.1.0", {"u"}, 2, {2, 2}), 1.0)});
    return t;
}

}  // namespace

TEST_CASE("depth and total similarity match hand expansion on a two-level toy") {
    SlabHierarchy h = two_level();
    TrainedSlabs t = two_level_models();
    Fusion f(h, t, {"u", "v", "w"});

    // leaf facet: depth == level
    CHECK(f.depth_similarity(1, 0, 1) == f.level_similarity(1, 0, 1));
    // hand expansion: level(p)=0.25, level(c)=-1, depth(p)=level(p)+level(c)
    CHECK(f.level_similarity(0, 0, 1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(f.level_similarity(1, 0, 1) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(f.depth_similarity(0, 0, 1) == doctest::Approx(-0.75).epsilon(1e-15));
    CHECK(f.total_pair_similarity(0, 1) == doctest::Approx(-1.5).epsilon(1e-15));

    // each in-vocabulary pair agrees with the independent recursion
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(f.total_pair_similarity(i, j) ==
                  doctest::Approx(oracle_total(f, h, t, i, j)).epsilon(1e-14));

    // self-similarity is the maximal entry of its row
    for (int i = 0; i < 3; ++i) {
        double self = f.total_pair_similarity(i, i);
        for (int j = 0; j < 3; ++j) CHECK(self >= f.total_pair_similarity(i, j));
    }
}

TEST_CASE("single slab collapse: totals and vectors double the slab quantities") {
    SlabHierarchy h = single_facet(1);
    SlabEmbedding e = init_embedding("f.0", {"a", "b", "c", "d"}, 5, 2, 123);
    TrainedSlabs t;
    t.by_context.push_back({weighted(e, 1.0)});
    Fusion f(h, t, {"a", "b", "c", "d"});

    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double c = f.slab_cosine(0, 0, i, j);
            CHECK(f.total_pair_similarity(i, j) == 2.0 * c);  // exact: x + x
        }
        bool none = true;
        std::vector<double> v = f.collective_vector(i, &none);
        CHECK_FALSE(none);
        for (int d = 0; d < 5; ++d) CHECK(v[d] == 2.0 * e.row(i)[d]);
    }

    // argsort of a fused row equals argsort of the raw cosine row
    std::vector<int> by_total(4), by_cos(4);
    std::iota(by_total.begin(), by_total.end(), 0);
    by_cos = by_total;
    std::sort(by_total.begin(), by_total.end(), [&](int x, int y) {
        return f.total_pair_similarity(0, x) > f.total_pair_similarity(0, y);
    });
    std::sort(by_cos.begin(), by_cos.end(), [&](int x, int y) {
        return f.slab_cosine(0, 0, 0, x) > f.slab_cosine(0, 0, 0, y);
    });
    CHECK(by_total == by_cos);
}

TEST_CASE("collective vectors match the frozen toy expansion") {
    SlabHierarchy h = two_level();
    TrainedSlabs t = two_level_models();
    Fusion f(h, t, {"u", "v", "w", "ghost"});

    // u: level(p) = .75*(1,0)+.25*(1,0) = (1,0); level(c) = (0,1)+(2,2) = (2,3)
    // depth(p) = (1,0)+(2,3) = (3,3); total = (1,0)+(2,3)+(3,3) = (6,6)
    bool none = true;
    std::vector<double> u = f.collective_vector(0, &none);
    CHECK_FALSE(none);
    CHECK(u[0] == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(u[1] == doctest::Approx(6.0).epsilon(1e-15));

    // w appears only in slab A with weight .75: total = 2 * .75 * (1,1)
    std::vector<double> w = f.collective_vector(2, &none);
    CHECK_FALSE(none);
    CHECK(w[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(1.5).epsilon(1e-15));

    // ghost is nowhere: zero vector, flagged
    std::vector<double> g = f.collective_vector(3, &none);
    CHECK(none);
    CHECK(g == std::vector<double>{0.0, 0.0});

    CollectiveVectors cv = build_collective_vectors(h, t, {"u", "v", "w", "ghost"});
    CHECK(cv.dim == 2);
    CHECK(cv.row(0)[0] == u[0]);
    CHECK(cv.row(2)[1] == w[1]);
    CHECK(cv.empty == std::vector<std::uint8_t>{0, 0, 0, 1});
}

TEST_CASE("pair matrix is bit-exactly symmetric and matches direct calls") {
    SlabHierarchy h = two_level();
    TrainedSlabs t = two_level_models();
    std::vector<std::string> vocab{"u", "v", "w"};
    PairSimilarityMatrix m = build_pair_matrix(h, t, vocab, 2);
    Fusion f(h, t, vocab);
    REQUIRE(m.n == 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            CHECK(m.at(i, j) == m.at(j, i));
            CHECK(m.at(i, j) == f.total_pair_similarity(std::min(i, j), std::max(i, j)));
        }
    // the direct evaluation is itself symmetric bit-for-bit
    CHECK(f.total_pair_similarity(0, 1) == f.total_pair_similarity(1, 0));
}

TEST_CASE("accuracy normalization is invariant to positive rescaling") {
    std::vector<SlabAccuracy> a(3), b(3);
    a[0].raw = 0.3;
    a[1].raw = 0.1;
    a[2].raw = 0.1;
    for (int i = 0; i < 3; ++i) b[i].raw = 4.0 * a[i].raw;
    normalize_accuracies(a);
    normalize_accuracies(b);
    for (int i = 0; i < 3; ++i) CHECK(a[i].normalized == b[i].normalized);
}

TEST_CASE("vector persistence round-trips exactly") {
    CollectiveVectors v;
    v.dim = 3;
    v.terms = {"alpha", "beta"};
    v.term_index = {{"alpha", 0}, {"beta", 1}};
    v.data = {0.1, -2.5e-17, 3.0, 1.0 / 3.0, 0.0, -1e300};
    v.empty = {0, 0};
    auto f = tmp_file("vectors.txt");
    save_collective(v, f);

    CollectiveVectors r = load_collective(f);
    CHECK(r.dim == 3);
    CHECK(r.terms == v.terms);
    CHECK(r.data == v.data);
    CHECK(r.index("beta") == 1);
    CHECK(r.index("gamma") == -1);

    {
        std::ifstream in(f);
        std::string head;
        std::getline(in, head);
        CHECK(head == "2 3");
    }

    auto bad = tmp_file("vectors_bad.txt");
    std::ofstream(bad) << "2 3\nalpha 1 2 3\n";
    CHECK_THROWS_AS(load_collective(bad), DataError);
    auto wide = tmp_file("vectors_wide.txt");
    std::ofstream(wide) << "1 3\nalpha 1 2 3 4\n";
    CHECK_THROWS_AS(load_collective(wide), DataError);
}

TEST_CASE("enrichment neighbors match a naive all-pairs scan") {
    CollectiveVectors v;
    v.dim = 2;
    v.terms = {"a", "b", "c", "d", "zero"};
    for (std::size_t i = 0; i < v.terms.size(); ++i)
        v.term_index.emplace(v.terms[i], static_cast<int>(i));
    v.data = {1, 0, 0.9, 0.1, 0, 1, 1, 0.01, 0, 0};
    v.empty = {0, 0, 0, 0, 1};

    EnrichmentTable table = build_enrichment(v, 2);
    auto naive = [&](int i) {
        std::vector<Neighbor> all;
        for (int j = 0; j < 5; ++j) {
            if (j == i) continue;
            std::vector<double> x(v.row(i), v.row(i) + 2), y(v.row(j), v.row(j) + 2);
            all.push_back(Neighbor{j, cosine(x, y)});
        }
        std::stable_sort(all.begin(), all.end(), [](const Neighbor& p, const Neighbor& q) {
            if (p.similarity != q.similarity) return p.similarity > q.similarity;
            return p.term < q.term;
        });
        all.resize(2);
        return all;
    };
    for (int i = 0; i < 5; ++i) {
        auto want = naive(i);
        REQUIRE(table.neighbors[i].size() == 2);
        for (int k = 0; k < 2; ++k) {
            CHECK(table.neighbors[i][k].term == want[k].term);
            CHECK(table.neighbors[i][k].similarity ==
                  doctest::Approx(want[k].similarity).epsilon(1e-12));
            CHECK(table.neighbors[i][k].term != i);  // self excluded
        }
    }

    // zeta=1: nearest neighbor of "a" is "d"
    EnrichmentTable one = build_enrichment(v, 1);
    CHECK(one.neighbors[0].size() == 1);
    CHECK(v.terms[one.neighbors[0][0].term] == "d");

    std::vector<std::string> enriched = enrich_text({"a", "martian"}, v, one);
    CHECK(enriched == std::vector<std::string>{"d", "martian"});

    EnrichmentTable wide = build_enrichment(v, 99);
    CHECK(wide.neighbors[0].size() == 4);  // capped at |V|-1
    CHECK_THROWS_AS(build_enrichment(v, 0), UsageError);
}

TEST_CASE("end-to-end fusion over a trained hierarchy is finite and deterministic") {
    MessageSet set = regime_corpus();
    Vocabulary vocab = Vocabulary::build(set, 2);
    SlabHierarchy h = build_slab_hierarchy(
        set, vocab,
        {TemporalFacet{"day", 7, 0.59, std::nullopt}, TemporalFacet{"hour", 2, 0.9, "day"}}, 0);
    TrainParams p;
    p.dim = 8;
    p.window = 3;
    p.epochs = 2;
    p.seed = 5;

    TrainedSlabs t1 = train_all_slabs(set, h, vocab, p, nullptr, 1);
    TrainedSlabs t4 = train_all_slabs(set, h, vocab, p, nullptr, 4);
    REQUIRE(t1.by_context.size() == t4.by_context.size());
    for (std::size_t c = 0; c < t1.by_context.size(); ++c) {
        double weight_sum = 0;
        REQUIRE(t1.by_context[c].size() == t4.by_context[c].size());
        for (std::size_t s = 0; s < t1.by_context[c].size(); ++s) {
            CHECK(t1.by_context[c][s].embedding.input == t4.by_context[c][s].embedding.input);
            CHECK(t1.by_context[c][s].embedding.output == t4.by_context[c][s].embedding.output);
            weight_sum += t1.by_context[c][s].accuracy.normalized;
        }
        CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    CollectiveVectors cv = build_collective_vectors(h, t1, vocab.terms(), 2);
    CHECK(cv.dim == 8);
    for (std::size_t i = 0; i < cv.terms.size(); ++i) {
        CHECK(cv.empty[i] == 0);
        bool all_zero = true;
        for (int d = 0; d < cv.dim; ++d) {
            CHECK(std::isfinite(cv.row(static_cast<int>(i))[d]));
            all_zero = all_zero && cv.row(static_cast<int>(i))[d] == 0.0;
        }
        CHECK_FALSE(all_zero);
    }
}
