#include "authorlink/author_vectors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "authorlink/common.hpp"

namespace authorlink {

AuthorMode author_mode_from(std::string_view name) {
    if (name == "avg") return AuthorMode::kAvg;
    if (name == "sum") return AuthorMode::kSum;
    if (name == "kfold") return AuthorMode::kFold;
    throw UsageError("unknown author mode: " + std::string(name));
}

std::string author_mode_name(AuthorMode mode) {
    switch (mode) {
        case AuthorMode::kAvg: return "avg";
        case AuthorMode::kSum: return "sum";
        case AuthorMode::kFold: return "kfold";
    }
    throw UsageError("unknown author mode");
}

std::vector<double> content_sum(std::span<const std::vector<double>> tweets) {
    if (tweets.empty()) throw DataError("cold author needs query path");
    std::vector<double> acc(tweets[0].size(), 0.0);
    for (const auto& t : tweets) {
        if (t.size() != acc.size()) throw DataError("tweet vector dimension mismatch");
        for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += t[d];
    }
    return acc;
}

std::vector<double> content_avg(std::span<const std::vector<double>> tweets) {
    std::vector<double> acc = content_sum(tweets);
    double n = static_cast<double>(tweets.size());
    for (double& v : acc) v /= n;
    return acc;
}

FoldHistogram fold_histogram(std::span<const std::vector<double>> tweets, int folds,
                             std::size_t* clamped) {
    if (folds < 2) throw UsageError("fold count must be at least 2");
    if (tweets.empty()) throw DataError("cold author needs query path");
    std::size_t dim = tweets[0].size();
    FoldHistogram hist;
    hist.folds = folds;
    hist.counts.assign(dim, std::vector<std::uint64_t>(folds, 0));
    std::size_t out_of_range = 0;
    for (const auto& t : tweets) {
        if (t.size() != dim) throw DataError("tweet vector dimension mismatch");
        for (std::size_t d = 0; d < dim; ++d) {
            double v = t[d];
            if (v < -1.0 || v > 1.0) {
                ++out_of_range;
                v = std::clamp(v, -1.0, 1.0);
            }
            int bin = static_cast<int>(std::floor(folds * (v + 1.0) / 2.0));
            bin = std::clamp(bin, 0, folds - 1);
            ++hist.counts[d][bin];
        }
    }
    if (clamped != nullptr) *clamped = out_of_range;
    return hist;
}

double fold_midpoint(int bin, int folds) {
    return -1.0 + (2.0 * bin + 1.0) / folds;
}

std::vector<double> kfold_from_histogram(const FoldHistogram& hist) {
    std::vector<double> out(hist.counts.size(), 0.0);
    for (std::size_t d = 0; d < hist.counts.size(); ++d) {
        const auto& bins = hist.counts[d];
        std::uint64_t best = *std::max_element(bins.begin(), bins.end());
        double sum = 0;
        int ties = 0;
        for (int b = 0; b < hist.folds; ++b)
            if (bins[b] == best) {
                sum += fold_midpoint(b, hist.folds);
                ++ties;
            }
        out[d] = sum / ties;
    }
    return out;
}

std::vector<double> kfold_content_vector(std::span<const std::vector<double>> tweets, int folds,
                                         std::size_t* clamped) {
    return kfold_from_histogram(fold_histogram(tweets, folds, clamped));
}

std::vector<double> author_content_vector(std::span<const std::vector<double>> tweets,
                                          AuthorMode mode, int folds, std::size_t* clamped) {
    switch (mode) {
        case AuthorMode::kAvg: return content_avg(tweets);
        case AuthorMode::kSum: return content_sum(tweets);
        case AuthorMode::kFold: return kfold_content_vector(tweets, folds, clamped);
    }
    throw UsageError("unknown author mode");
}

std::vector<double> author_concept_vector(std::span<const std::vector<double>> tweet_concepts) {
    return content_avg(tweet_concepts);
}

void save_labeled_vectors(const LabeledVectors& v, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out << v.ids.size() << ' ' << v.dim << '\n';
    for (std::size_t i = 0; i < v.ids.size(); ++i) {
        out << v.ids[i];
        for (double x : v.rows[i]) out << ' ' << dtos(x);
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + file.string());
}

LabeledVectors load_labeled_vectors(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty vector file: " + file.string());
    std::istringstream head(line);
    std::size_t count = 0;
    LabeledVectors v;
    if (!(head >> count >> v.dim) || v.dim <= 0)
        throw DataError("bad vector file header: " + file.string());
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw DataError("truncated vector file: " + file.string());
        std::istringstream row(line);
        std::string id;
        if (!(row >> id)) throw DataError("bad vector row: " + file.string());
        std::vector<double> values;
        std::string num;
        while (row >> num) values.push_back(stod_strict(num, "vector value"));
        if (static_cast<int>(values.size()) != v.dim)
            throw DataError("bad vector row width: " + file.string());
        v.ids.push_back(std::move(id));
        v.rows.push_back(std::move(values));
    }
    return v;
}

}  // namespace authorlink
