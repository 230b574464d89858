#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace authorlink {

enum class AuthorMode { kAvg, kSum, kFold };

AuthorMode author_mode_from(std::string_view name);  // "avg" | "sum" | "kfold"
std::string author_mode_name(AuthorMode mode);

// Componentwise sum of an author's tweet vectors; the average is sum / n,
// so the two modes are bit-deterministically linked.
std::vector<double> content_sum(std::span<const std::vector<double>> tweets);
std::vector<double> content_avg(std::span<const std::vector<double>> tweets);

// Per vector index: how many of the author's tweet values fall into each of
// `folds` equal bins over [-1, +1]. Out-of-range values are clamped into the
// edge bins and counted in `clamped` so callers can warn.
struct FoldHistogram {
    int folds = 0;
    std::vector<std::vector<std::uint64_t>> counts;  // [index][bin]
};

FoldHistogram fold_histogram(std::span<const std::vector<double>> tweets, int folds,
                             std::size_t* clamped = nullptr);

double fold_midpoint(int bin, int folds);

// Per index: the midpoint of the fullest bin; tied bins average their
// midpoints. Outputs therefore stay within [-1 + 1/folds, 1 - 1/folds].
std::vector<double> kfold_from_histogram(const FoldHistogram& hist);
std::vector<double> kfold_content_vector(std::span<const std::vector<double>> tweets, int folds,
                                         std::size_t* clamped = nullptr);

// Dispatch on mode; folds is used only by kFold.
std::vector<double> author_content_vector(std::span<const std::vector<double>> tweets,
                                          AuthorMode mode, int folds = 10,
                                          std::size_t* clamped = nullptr);

// Componentwise mean of the author's tweet concept vectors.
std::vector<double> author_concept_vector(std::span<const std::vector<double>> tweet_concepts);

// Vectors keyed by an id string, in the "N d" text embedding format.
struct LabeledVectors {
    int dim = 0;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
};

void save_labeled_vectors(const LabeledVectors& v, const std::filesystem::path& file);
LabeledVectors load_labeled_vectors(const std::filesystem::path& file);

}  // namespace authorlink
