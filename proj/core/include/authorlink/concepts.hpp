#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "authorlink/collective.hpp"
#include "authorlink/corpus.hpp"

namespace authorlink {

enum class CombineMode { kAvg, kSum };

CombineMode combine_mode_from(std::string_view name);  // "avg" | "sum"
std::string combine_mode_name(CombineMode mode);

// One message folded into word-vector space. The vector is zero and
// all_out_of_vocab is set when no token is in the vocabulary.
struct TweetVector {
    std::string id;
    std::vector<double> values;
    bool all_out_of_vocab = false;
};

TweetVector tweet_vector(const Message& msg, const CollectiveVectors& vectors,
                         CombineMode mode);
std::vector<TweetVector> tweet_vectors(const MessageSet& set, const CollectiveVectors& vectors,
                                       CombineMode mode, int threads = 0);

double euclidean(std::span<const double> a, std::span<const double> b);

// In-place L2 normalization; zero vectors stay zero.
void l2_normalize(std::vector<double>& v);
void l2_normalize_rows(std::vector<std::vector<double>>& rows);

// A clustering of tweet vectors. assignment[i] is the cluster of point i or
// -1 for unassigned (DBSCAN noise). Centroids are member means for DBSCAN
// and the medoid points for K-medoids.
struct ConceptModel {
    std::string method;  // "dbscan" | "kmedoids"
    double eps = 0.0;
    int min_pts = 0;
    int k = 0;
    std::uint64_t seed = 0;
    int restarts = 0;
    int dim = 0;
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignment;

    std::size_t clusters() const { return centroids.size(); }
};

// Density clustering in index order: clusters are numbered by their first
// core point, and a border point in reach of two clusters joins the one
// expanded first. A model with zero clusters (all noise) is returned as-is;
// downstream concept vectors require at least one.
ConceptModel dbscan(const std::vector<std::vector<double>>& points, double eps, int min_pts);

// Voronoi-style alternating assignment / medoid update, best of `restarts`
// seeded initializations. Ties go to the lower index everywhere. When
// cost_trace is given it receives the per-iteration total cost of every
// restart, in restart order.
ConceptModel kmedoids(const std::vector<std::vector<double>>& points, int k,
                      std::uint64_t seed, int restarts,
                      std::vector<std::vector<double>>* cost_trace = nullptr);

// Mean silhouette over assigned points; sets *degenerate (and returns 0)
// when fewer than two clusters have members.
double silhouette(const std::vector<std::vector<double>>& points,
                  const std::vector<int>& assignment, bool* degenerate = nullptr);

// Davies-Bouldin index over member-mean centroids; lower is better.
// Coincident centroids yield +inf. Degenerate like silhouette.
double davies_bouldin(const std::vector<std::vector<double>>& points,
                      const std::vector<int>& assignment, bool* degenerate = nullptr);

// Distances from one tweet vector to every centroid.
std::vector<double> concept_vector(const std::vector<double>& tweet, const ConceptModel& model);

void save_concepts(const ConceptModel& m, const std::filesystem::path& file);
ConceptModel load_concepts(const std::filesystem::path& file);

}  // namespace authorlink
