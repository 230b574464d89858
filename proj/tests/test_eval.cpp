#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "authorlink/common.hpp"
#include "authorlink/eval.hpp"

using namespace authorlink;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "authorlink_tests";
    fs::create_directories(dir);
    return dir / name;
}

ScoreCounts sc(std::int64_t c0, std::int64_t c1, std::int64_t c2, std::int64_t c3) {
    ScoreCounts s;
    s.counts = {c0, c1, c2, c3};
    return s;
}

// exact integer numerator/denominator for each precision, built from the
// per-score weights rather than the expanded formula
struct Frac {
    std::int64_t num = 0;
    std::int64_t den = 0;
};

Frac frac_conceptual(const ScoreCounts& s) {
    Frac f;
    for (int score = 0; score <= 3; ++score) f.num += score * s.counts[(std::size_t)score];
    f.den = 3 * s.total();
    return f;
}

Frac frac_textual(const ScoreCounts& s) {
    Frac f;
    for (int score = 0; score <= 3; ++score)
        f.num += std::min(score, 2) * s.counts[(std::size_t)score];
    f.den = 2 * s.total();
    return f;
}

Message msg(std::string id, std::vector<std::string> tokens) {
    Message m;
    m.id = std::move(id);
    m.tokens = std::move(tokens);
    return m;
}

// map-based tf-idf cosine ranking, written independently of the library code
std::vector<RankedPair> naive_ranking(const std::vector<Message>& a,
                                      const std::vector<Message>& b, std::size_t k) {
    std::vector<const Message*> all;
    for (const auto& m : a) all.push_back(&m);
    for (const auto& m : b) all.push_back(&m);
    const double n_docs = static_cast<double>(all.size());
    std::map<std::string, int> df;
    for (const auto* m : all) {
        std::set<std::string> uniq(m->tokens.begin(), m->tokens.end());
        for (const auto& t : uniq) df[t]++;
    }
    auto weights = [&](const Message& m) {
        std::map<std::string, double> tf;
        for (const auto& t : m.tokens) tf[t] += 1.0;
        std::map<std::string, double> w;
        for (const auto& [t, f] : tf) w[t] = f * std::log(1.0 + n_docs / df[t]);
        return w;
    };
    auto cos = [&](const Message& x, const Message& y) {
        auto wx = weights(x), wy = weights(y);
        double dot = 0, nx = 0, ny = 0;
        for (const auto& [t, v] : wx) {
            nx += v * v;
            auto it = wy.find(t);
            if (it != wy.end()) dot += v * it->second;
        }
        for (const auto& [t, v] : wy) ny += v * v;
        if (nx == 0 || ny == 0) return 0.0;
        return dot / (std::sqrt(nx) * std::sqrt(ny));
    };
    struct Row {
        std::size_t ia, ib;
        double s;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) rows.push_back({i, j, cos(a[i], b[j])});
    std::sort(rows.begin(), rows.end(), [](const Row& l, const Row& r) {
        if (l.s != r.s) return l.s > r.s;
        if (l.ia != r.ia) return l.ia < r.ia;
        return l.ib < r.ib;
    });
    if (rows.size() > k) rows.resize(k);
    std::vector<RankedPair> out;
    for (const auto& r : rows) out.push_back({a[r.ia].id, b[r.ib].id, r.s});
    return out;
}

// the ranking toy shared by the frozen and oracle-comparison cases
std::vector<Message> toy_author_a() {
    return {msg("a0", {"solar", "panels", "on", "mars"}),
            msg("a1", {"coffee", "tastes", "great"}),
            msg("a2", {"rover", "landed", "on", "mars"}),
            msg("a3", {"quantum", "chips", "ship", "today"}),
            msg("a4", {"coffee", "on", "mars"})};
}

std::vector<Message> toy_author_b() {
    return {msg("b0", {"mars", "rover", "sends", "photos"}),
            msg("b1", {"great", "coffee", "downtown"}),
            msg("b2", {"solar", "panels", "cheap", "today"}),
            msg("b3", {"chess", "club", "meets"}),
            msg("b4", {"quantum", "chips", "ship", "today"})};
}

}  // namespace

TEST_CASE("weighted precisions match their closed forms") {
    // every pair scored 3: both metrics saturate
    CHECK(p_conceptual(sc(0, 0, 0, 7)) == 1.0);
    CHECK(p_textual(sc(0, 0, 0, 7)) == 1.0);
    // every pair scored 2: textual saturates, conceptual does not
    CHECK(p_textual(sc(0, 0, 5, 0)) == 1.0);
    CHECK(p_conceptual(sc(0, 0, 5, 0)) == 2.0 / 3.0);
    // every pair scored 0
    CHECK(p_conceptual(sc(4, 0, 0, 0)) == 0.0);
    CHECK(p_textual(sc(4, 0, 0, 0)) == 0.0);
    // two pairs scored 1
    CHECK(p_textual(sc(0, 2, 0, 0)) == 0.5);
    CHECK(p_conceptual(sc(0, 2, 0, 0)) == 1.0 / 3.0);
    // one pair of each score
    CHECK(p_conceptual(sc(1, 1, 1, 1)) == 0.5);
    CHECK(p_textual(sc(1, 1, 1, 1)) == 0.625);
}

TEST_CASE("precision formulas agree with a rational oracle") {
    Rng rng(20260816);
    int checked = 0;
    while (checked < 1000) {
        ScoreCounts s = sc((std::int64_t)rng.index(51), (std::int64_t)rng.index(51),
                           (std::int64_t)rng.index(51), (std::int64_t)rng.index(51));
        if (s.total() == 0) continue;
        ++checked;
        Frac fc = frac_conceptual(s);
        Frac ft = frac_textual(s);
        double pc = p_conceptual(s);
        double pt = p_textual(s);
        CHECK(pc == static_cast<double>(fc.num) / static_cast<double>(fc.den));
        CHECK(pt == static_cast<double>(ft.num) / static_cast<double>(ft.den));
        CHECK(pc >= 0.0);
        CHECK(pc <= 1.0);
        CHECK(pt >= 0.0);
        CHECK(pt <= 1.0);
    }
}

TEST_CASE("upgrading one pair's score never lowers a precision") {
    Rng rng(97);
    int checked = 0;
    while (checked < 500) {
        ScoreCounts s = sc((std::int64_t)rng.index(20), (std::int64_t)rng.index(20),
                           (std::int64_t)rng.index(20), (std::int64_t)rng.index(20));
        std::size_t from = rng.index(3);  // upgrade from 0..2
        std::size_t to = from + 1 + rng.index(3 - from);
        if (s.counts[from] == 0 || s.total() == 0) continue;
        ++checked;
        ScoreCounts up = s;
        --up.counts[from];
        ++up.counts[to];
        // exact comparison by cross-multiplying the integer fractions
        Frac c0 = frac_conceptual(s), c1 = frac_conceptual(up);
        Frac t0 = frac_textual(s), t1 = frac_textual(up);
        CHECK(c1.num * c0.den >= c0.num * c1.den);
        CHECK(t1.num * t0.den >= t0.num * t1.den);
        CHECK(p_conceptual(up) >= p_conceptual(s));
        CHECK(p_textual(up) >= p_textual(s));
    }
}

TEST_CASE("precisions are invariant under uniform count duplication") {
    Rng rng(31);
    for (int iter = 0; iter < 200; ++iter) {
        ScoreCounts s = sc((std::int64_t)rng.index(40), (std::int64_t)rng.index(40),
                           (std::int64_t)rng.index(40), (std::int64_t)rng.index(40));
        if (s.total() == 0) continue;
        for (std::int64_t m : {2, 3, 7}) {
            ScoreCounts d = s;
            for (auto& c : d.counts) c *= m;
            CHECK(p_conceptual(d) == p_conceptual(s));
            CHECK(p_textual(d) == p_textual(s));
        }
    }
}

TEST_CASE("degenerate score counts are rejected") {
    CHECK_THROWS_WITH_AS(p_conceptual(sc(0, 0, 0, 0)), "no scored pairs", DataError);
    CHECK_THROWS_WITH_AS(p_textual(sc(0, 0, 0, 0)), "no scored pairs", DataError);
    CHECK_THROWS_AS(p_conceptual(sc(-1, 2, 0, 0)), UsageError);
    CHECK_THROWS_AS(p_textual(sc(0, 0, -3, 1)), UsageError);
}

TEST_CASE("vote aggregation floors the mean") {
    CHECK(aggregate_votes({3, 3, 2}) == 2);
    CHECK(aggregate_votes({0}) == 0);
    CHECK(aggregate_votes({1, 2}) == 1);
    CHECK(aggregate_votes({2, 3}) == 2);
    CHECK(aggregate_votes({3, 3, 3, 3, 3}) == 3);
    CHECK(aggregate_votes({0, 3}) == 1);
    CHECK(aggregate_votes({0, 0, 3, 3, 3}) == 1);

    Rng rng(7);
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<int> votes;
        std::size_t n = 1 + rng.index(5);
        int sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            votes.push_back((int)rng.index(4));
            sum += votes.back();
        }
        int got = aggregate_votes(votes);
        CHECK(got == (int)std::floor(sum / (double)n));
        CHECK(got >= 0);
        CHECK(got <= 3);
    }

    CHECK_THROWS_WITH_AS(aggregate_votes({}), "no votes for pair", DataError);
    CHECK_THROWS_AS(aggregate_votes({2, 4}), DataError);
    CHECK_THROWS_AS(aggregate_votes({-1}), DataError);
}

TEST_CASE("label files round-trip and validate") {
    LabelFile labels;
    labels.records = {{"t1", "t9", 3}, {"t2", "t8", 0}, {"t3", "t7", 2}, {"t4", "t6", 2}};
    auto f = tmp_file("labels.tsv");
    save_labels(labels, f);
    LabelFile back = load_labels(f);
    REQUIRE(back.records.size() == labels.records.size());
    for (std::size_t i = 0; i < labels.records.size(); ++i) {
        CHECK(back.records[i].tweet_a == labels.records[i].tweet_a);
        CHECK(back.records[i].tweet_b == labels.records[i].tweet_b);
        CHECK(back.records[i].score == labels.records[i].score);
    }

    ScoreCounts s = count_scores(back);
    CHECK(s.counts[0] == 1);
    CHECK(s.counts[1] == 0);
    CHECK(s.counts[2] == 2);
    CHECK(s.counts[3] == 1);

    auto bad = tmp_file("labels_bad.tsv");
    std::ofstream(bad) << "t1\tt2\n";
    CHECK_THROWS_AS(load_labels(bad), DataError);
    std::ofstream(bad) << "t1\tt2\t5\n";
    CHECK_THROWS_AS(load_labels(bad), DataError);
    std::ofstream(bad) << "t1\tt2\tx\n";
    CHECK_THROWS_AS(load_labels(bad), DataError);
    std::ofstream(bad) << "\tt2\t1\n";
    CHECK_THROWS_AS(load_labels(bad), DataError);
    std::ofstream(bad) << "t1\tt2\t1\textra\n";
    CHECK_THROWS_AS(load_labels(bad), DataError);
    CHECK_THROWS_AS(load_labels(tmp_file("no_such_labels.tsv")), DataError);
}

TEST_CASE("top pairs follow the frozen toy ranking") {
    auto a = toy_author_a();
    auto b = toy_author_b();
    auto top = top_k_similar_pairs(a, b);  // default k = 10
    REQUIRE(top.size() == 10);

    // the identical tweet pair leads with (near) maximal cosine
    CHECK(top[0].tweet_a == "a3");
    CHECK(top[0].tweet_b == "b4");
    CHECK(top[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < top.size(); ++i) CHECK(top[0].similarity > top[i].similarity);

    const struct {
        const char* ta;
        const char* tb;
        double sim;
    } expect[] = {
        {"a0", "b2", 0.53281721960110506}, {"a1", "b1", 0.48247796399749421},
        {"a2", "b0", 0.33268395175466492}, {"a4", "b1", 0.26625253043933661},
        {"a3", "b2", 0.16553342123587209}, {"a4", "b0", 0.16054899103630604},
        {"a0", "b0", 0.1221487185476178},  {"a0", "b1", 0.0},
        {"a0", "b3", 0.0},
    };
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(top[i + 1].tweet_a == expect[i].ta);
        CHECK(top[i + 1].tweet_b == expect[i].tb);
        if (expect[i].sim == 0.0)
            CHECK(top[i + 1].similarity == 0.0);
        else
            CHECK(top[i + 1].similarity == doctest::Approx(expect[i].sim).epsilon(1e-12));
    }
}

TEST_CASE("top pairs agree with a naive ranking oracle") {
    auto a = toy_author_a();
    auto b = toy_author_b();
    for (std::size_t k : {1u, 3u, 10u, 25u, 100u}) {
        auto got = top_k_similar_pairs(a, b, k);
        auto want = naive_ranking(a, b, k);
        REQUIRE(got.size() == want.size());
        CHECK(got.size() == std::min<std::size_t>(k, 25));
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].tweet_a == want[i].tweet_a);
            CHECK(got[i].tweet_b == want[i].tweet_b);
            CHECK(got[i].similarity == doctest::Approx(want[i].similarity).epsilon(1e-12));
        }
    }
}

TEST_CASE("top pairs edge cases") {
    // fewer pairs than k: everything comes back
    std::vector<Message> a = {msg("a0", {"red", "fox"}), msg("a1", {"blue", "sky"})};
    std::vector<Message> b = {msg("b0", {"red", "sky"})};
    auto all = top_k_similar_pairs(a, b, 10);
    CHECK(all.size() == 2);

    // ties keep input order: duplicate tweets tie exactly
    std::vector<Message> dup = {msg("d0", {"red", "fox"}), msg("d1", {"red", "fox"})};
    auto tied = top_k_similar_pairs(dup, b, 10);
    REQUIRE(tied.size() == 2);
    CHECK(tied[0].tweet_a == "d0");
    CHECK(tied[1].tweet_a == "d1");
    CHECK(tied[0].similarity == tied[1].similarity);

    // a token-free tweet has a zero vector and similarity 0
    std::vector<Message> empty_side = {msg("e0", {})};
    auto zeros = top_k_similar_pairs(empty_side, b, 10);
    REQUIRE(zeros.size() == 1);
    CHECK(zeros[0].similarity == 0.0);

    // empty author or k = 0 yield an empty list
    CHECK(top_k_similar_pairs({}, b, 10).empty());
    CHECK(top_k_similar_pairs(a, b, 0).empty());
}

TEST_CASE("sweep tables round-trip") {
    SweepTable t;
    t.param_name = "alpha";
    t.rows = {{0.0, "p_textual", 0.41}, {0.0, "p_conceptual", 0.3},
              {0.6, "p_textual", 0.55}, {1.0, "p_textual", 0.37}};
    auto f = tmp_file("sweep.tsv");
    save_sweep(t, f);
    SweepTable back = load_sweep(f);
    CHECK(back.param_name == "alpha");
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(back.rows[i].param == t.rows[i].param);
        CHECK(back.rows[i].metric == t.rows[i].metric);
        CHECK(back.rows[i].value == t.rows[i].value);
    }

    // single-point sweep stays a single row
    SweepTable one;
    one.param_name = "eps";
    one.rows = {{0.36, "n_clusters", 4.0}};
    save_sweep(one, f);
    back = load_sweep(f);
    CHECK(back.param_name == "eps");
    REQUIRE(back.rows.size() == 1);
    CHECK(back.rows[0].param == 0.36);

    auto bad = tmp_file("sweep_bad.tsv");
    std::ofstream(bad) << "param\tmetric_name\tvalue\n";  // missing magic line
    CHECK_THROWS_AS(load_sweep(bad), DataError);
    std::ofstream(bad) << "# authorlink-sweep param=alpha\nwrong header\n";
    CHECK_THROWS_AS(load_sweep(bad), DataError);
    std::ofstream(bad) << "# authorlink-sweep param=alpha\nparam\tmetric_name\tvalue\n0.5\n";
    CHECK_THROWS_AS(load_sweep(bad), DataError);
}
