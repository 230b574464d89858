#include "authorlink/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "authorlink/common.hpp"

namespace authorlink {

namespace {

void check_counts(const ScoreCounts& s) {
    for (std::int64_t c : s.counts)
        if (c < 0) throw UsageError("negative score count");
    if (s.total() == 0) throw DataError("no scored pairs");
}

}  // namespace

double p_conceptual(const ScoreCounts& scores) {
    check_counts(scores);
    const auto& c = scores.counts;
    std::int64_t num = c[1] + 2 * c[2] + 3 * c[3];
    std::int64_t den = 3 * scores.total();
    return static_cast<double>(num) / static_cast<double>(den);
}

double p_textual(const ScoreCounts& scores) {
    check_counts(scores);
    const auto& c = scores.counts;
    std::int64_t num = c[1] + 2 * (c[2] + c[3]);
    std::int64_t den = 2 * scores.total();
    return static_cast<double>(num) / static_cast<double>(den);
}

int aggregate_votes(const std::vector<int>& votes) {
    if (votes.empty()) throw DataError("no votes for pair");
    std::int64_t sum = 0;
    for (int v : votes) {
        if (v < 0 || v > 3) throw DataError("vote out of range: " + std::to_string(v));
        sum += v;
    }
    // all votes non-negative, so integer division is the floor of the mean
    return static_cast<int>(sum / static_cast<std::int64_t>(votes.size()));
}

LabelFile load_labels(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open label file: " + file.string());
    LabelFile out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t p1 = line.find('\t');
        std::size_t p2 = line.find('\t', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos ||
            line.find('\t', p2 + 1) != std::string::npos)
            throw DataError("label line " + std::to_string(lineno) +
                            ": expected tweet_a<TAB>tweet_b<TAB>score");
        LabeledPair rec;
        rec.tweet_a = line.substr(0, p1);
        rec.tweet_b = line.substr(p1 + 1, p2 - p1 - 1);
        if (rec.tweet_a.empty() || rec.tweet_b.empty())
            throw DataError("label line " + std::to_string(lineno) + ": empty tweet id");
        long score = stol_strict(std::string_view(line).substr(p2 + 1), "score");
        if (score < 0 || score > 3)
            throw DataError("label line " + std::to_string(lineno) +
                            ": score must be 0..3, got " + std::to_string(score));
        rec.score = static_cast<int>(score);
        out.records.push_back(std::move(rec));
    }
    return out;
}

void save_labels(const LabelFile& labels, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write label file: " + file.string());
    for (const auto& r : labels.records)
        out << r.tweet_a << '\t' << r.tweet_b << '\t' << r.score << '\n';
    if (!out) throw DataError("short write: " + file.string());
}

ScoreCounts count_scores(const LabelFile& labels) {
    ScoreCounts s;
    for (const auto& r : labels.records) {
        if (r.score < 0 || r.score > 3)
            throw DataError("label score out of range: " + std::to_string(r.score));
        ++s.counts[static_cast<std::size_t>(r.score)];
    }
    return s;
}

namespace {

// tf-idf weights as a term-id-sorted sparse vector, plus its norm
struct SparseVec {
    std::vector<std::pair<std::size_t, double>> w;
    double norm = 0.0;
};

double sparse_dot(const SparseVec& a, const SparseVec& b) {
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.w.size() && j < b.w.size()) {
        if (a.w[i].first < b.w[j].first) {
            ++i;
        } else if (b.w[j].first < a.w[i].first) {
            ++j;
        } else {
            d += a.w[i].second * b.w[j].second;
            ++i;
            ++j;
        }
    }
    return d;
}

}  // namespace

std::vector<RankedPair> top_k_similar_pairs(std::span<const Message> author_a,
                                            std::span<const Message> author_b,
                                            std::size_t k) {
    // term ids in lexicographic order so accumulation order is reproducible
    std::vector<std::string> terms;
    for (const auto& m : author_a) terms.insert(terms.end(), m.tokens.begin(), m.tokens.end());
    for (const auto& m : author_b) terms.insert(terms.end(), m.tokens.begin(), m.tokens.end());
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    std::unordered_map<std::string_view, std::size_t> term_id;
    term_id.reserve(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) term_id.emplace(terms[i], i);

    const double n_docs = static_cast<double>(author_a.size() + author_b.size());
    std::vector<double> df(terms.size(), 0.0);
    auto count_df = [&](const Message& m) {
        std::vector<std::size_t> ids;
        ids.reserve(m.tokens.size());
        for (const auto& t : m.tokens) ids.push_back(term_id.at(t));
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (std::size_t id : ids) df[id] += 1.0;
    };
    for (const auto& m : author_a) count_df(m);
    for (const auto& m : author_b) count_df(m);

    auto weigh = [&](const Message& m) {
        SparseVec v;
        std::vector<std::size_t> ids;
        ids.reserve(m.tokens.size());
        for (const auto& t : m.tokens) ids.push_back(term_id.at(t));
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 0; i < ids.size();) {
            std::size_t j = i;
            while (j < ids.size() && ids[j] == ids[i]) ++j;
            double tf = static_cast<double>(j - i);
            v.w.emplace_back(ids[i], tf * std::log(1.0 + n_docs / df[ids[i]]));
            i = j;
        }
        double sq = 0.0;
        for (const auto& [id, wt] : v.w) sq += wt * wt;
        v.norm = std::sqrt(sq);
        return v;
    };
    std::vector<SparseVec> va, vb;
    va.reserve(author_a.size());
    vb.reserve(author_b.size());
    for (const auto& m : author_a) va.push_back(weigh(m));
    for (const auto& m : author_b) vb.push_back(weigh(m));

    struct Cand {
        std::size_t ia, ib;
        double sim;
    };
    std::vector<Cand> cands;
    cands.reserve(author_a.size() * author_b.size());
    for (std::size_t i = 0; i < va.size(); ++i)
        for (std::size_t j = 0; j < vb.size(); ++j) {
            double sim = 0.0;
            if (va[i].norm > 0.0 && vb[j].norm > 0.0)
                sim = sparse_dot(va[i], vb[j]) / (va[i].norm * vb[j].norm);
            cands.push_back({i, j, sim});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
        if (l.sim != r.sim) return l.sim > r.sim;
        if (l.ia != r.ia) return l.ia < r.ia;
        return l.ib < r.ib;
    });
    if (cands.size() > k) cands.resize(k);

    std::vector<RankedPair> out;
    out.reserve(cands.size());
    for (const auto& c : cands)
        out.push_back({author_a[c.ia].id, author_b[c.ib].id, c.sim});
    return out;
}

void save_sweep(const SweepTable& table, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write sweep file: " + file.string());
    out << "# authorlink-sweep param=" << table.param_name << '\n';
    out << "param\tmetric_name\tvalue\n";
    for (const auto& r : table.rows)
        out << dtos(r.param) << '\t' << r.metric << '\t' << dtos(r.value) << '\n';
    if (!out) throw DataError("short write: " + file.string());
}

SweepTable load_sweep(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open sweep file: " + file.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("# authorlink-sweep param=", 0) != 0)
        throw DataError("not a sweep file: " + file.string());
    SweepTable table;
    table.param_name = line.substr(std::string("# authorlink-sweep param=").size());
    if (!std::getline(in, line) || line != "param\tmetric_name\tvalue")
        throw DataError("missing sweep header: " + file.string());
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t p1 = line.find('\t');
        std::size_t p2 = line.find('\t', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos)
            throw DataError("sweep line " + std::to_string(lineno) + ": expected 3 fields");
        SweepRow r;
        r.param = stod_strict(std::string_view(line).substr(0, p1), "sweep param");
        r.metric = line.substr(p1 + 1, p2 - p1 - 1);
        r.value = stod_strict(std::string_view(line).substr(p2 + 1), "sweep value");
        table.rows.push_back(std::move(r));
    }
    return table;
}

}  // namespace authorlink
