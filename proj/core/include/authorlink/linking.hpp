#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "authorlink/author_vectors.hpp"

namespace authorlink {

enum class SimilarityMetric { kCosine, kInverseDistance };

SimilarityMetric metric_from(std::string_view name);  // "cosine" | "inverse_distance"
std::string metric_name(SimilarityMetric metric);

// Pairwise author similarities. Authors must arrive sorted so the row index
// order and the lexicographic tie order coincide everywhere downstream.
struct AuthorSimilarityMatrix {
    std::string kind;  // "content" | "concept" | "total"
    double alpha = 0.0;
    std::vector<std::string> authors;
    std::vector<double> data;  // row-major n x n

    int n() const { return static_cast<int>(authors.size()); }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * authors.size() + j]; }
    int index(const std::string& author) const;  // -1 if absent
};

// Cosine entries are clamped to [-1, 1]; the diagonal is exactly 1 in both
// metrics, so it is maximal per row. Symmetric bit-exactly (upper triangle
// mirrored).
AuthorSimilarityMatrix similarity_matrix(const LabeledVectors& vectors, const std::string& kind,
                                         SimilarityMetric metric = SimilarityMetric::kCosine,
                                         int threads = 0);

// total = alpha * concept + (1 - alpha) * content, elementwise; the
// endpoints reproduce the inputs exactly.
AuthorSimilarityMatrix blend(const AuthorSimilarityMatrix& content,
                             const AuthorSimilarityMatrix& concept_m, double alpha);

struct AuthorGraph {
    struct Edge {
        int a = 0;  // a < b, author indices
        int b = 0;
        double weight = 0.0;
    };
    std::vector<std::string> authors;
    std::vector<Edge> edges;
};

// Complete graph on the matrix's authors (top_k = 0), or the union of every
// node's top-k heaviest incident edges when top_k > 0.
AuthorGraph build_graph(const AuthorSimilarityMatrix& m, int top_k = 0);

enum class LinkMode { kLiteral, kKruskal };

LinkMode link_mode_from(std::string_view name);  // "literal" | "kruskal"
std::string link_mode_name(LinkMode mode);

struct SpanningForest {
    std::string mode;
    std::vector<std::string> authors;
    std::vector<AuthorGraph::Edge> edges;  // in pop order
    double average_weight = 0.0;
    std::vector<int> component;  // per author, numbered by first appearance
    int n_components = 0;
};

// Stack-wise cut over edges sorted by weight descending, equal weights in
// (author_a, author_b) order. Literal mode appends every popped edge and
// stops once all nodes are covered (or the stack empties); kruskal mode
// drains the stack, skipping edges inside one component, which yields the
// maximum spanning forest.
SpanningForest sw_mst(const AuthorGraph& g, LinkMode mode);

struct QuerySubgraph {
    std::vector<std::string> authors;  // the component of the query author
    std::vector<AuthorGraph::Edge> edges;  // indices into `authors`
    double average_weight = 0.0;
};

QuerySubgraph query_subgraph(const SpanningForest& forest, const std::string& author_id);

// Binary row-major doubles at `file`, author-id sidecar at "<file>.idx".
void save_matrix(const AuthorSimilarityMatrix& m, const std::filesystem::path& file);
AuthorSimilarityMatrix load_matrix(const std::filesystem::path& file);

// Edge-list text: "author_a<TAB>author_b<TAB>weight<TAB>component_id";
// '#'-prefixed header and node lines carry mode, average, and isolated nodes.
void save_forest(const SpanningForest& f, const std::filesystem::path& file);
SpanningForest load_forest(const std::filesystem::path& file);

}  // namespace authorlink
