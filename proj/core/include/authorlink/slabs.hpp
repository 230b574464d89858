#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "authorlink/corpus.hpp"

namespace authorlink {

// A facet partitions timestamps into `splits` cyclic buckets. The name picks
// the bucketing rule: day (weekday, splits must be 7, 0 = Monday), hour
// (splits equal divisions of the day), week (cyclic week-of-epoch), month
// (calendar month modulo splits).
struct TemporalFacet {
    std::string name;
    int splits = 0;
    double threshold = 0.0;
    std::optional<std::string> parent;
};

void validate_facet(const TemporalFacet& f);
int split_of(const TemporalFacet& f, std::int64_t ts, std::int64_t tz_offset);

// Per-split max-normalized TF x log(splits / split-df) term weights.
struct SplitProfiles {
    int splits = 0;
    // per split: (vocabulary index, weight), sorted by index, zero weights omitted
    std::vector<std::vector<std::pair<std::uint32_t, double>>> weights;
    std::vector<std::uint64_t> message_counts;
};

using MessageFilter = std::function<bool(const Message&)>;

SplitProfiles build_split_profiles(const MessageSet& set, const Vocabulary& vocab,
                                   const TemporalFacet& facet, std::int64_t tz_offset,
                                   const MessageFilter& filter = nullptr);

struct SimilarityGrid {
    int n = 0;
    std::vector<double> data;  // row-major n x n
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * n + j]; }
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * n + j]; }
};

// Pairwise cosine of split profiles; an all-zero profile has similarity 0
// with everything, including itself.
SimilarityGrid similarity_grid(const SplitProfiles& profiles);

// Agglomerative clustering under complete linkage on a similarity grid:
// clusters merge only while the minimum pairwise similarity between them is
// at least `threshold`, highest-linkage pair first, ties broken toward the
// pair containing the smallest member index. Returns sorted split groups
// ordered by their smallest member.
std::vector<std::vector<int>> hac_complete_linkage(const SimilarityGrid& grid, double threshold);

struct Slab {
    std::vector<int> splits;  // sorted ascending
};

struct PathStep {
    int facet = 0;                // index into SlabHierarchy::facets
    int slab = 0;                 // slab index within the parent context
    std::vector<int> slab_splits; // that slab's split set, for routing
};

struct SlabContext {
    int facet = 0;                     // index into SlabHierarchy::facets
    std::vector<PathStep> path;        // ancestor chain, empty for roots
    std::vector<Slab> slabs;
    std::vector<int> split_to_slab;    // size facet.splits
    std::vector<std::uint64_t> split_message_counts;
    SimilarityGrid grid;               // in-memory only, empty after load()

    std::string key(const std::vector<TemporalFacet>& facets) const;
};

struct SlabHierarchy {
    std::vector<TemporalFacet> facets;  // topological order, roots first
    std::int64_t tz_offset = 0;
    std::vector<SlabContext> contexts;  // grouped by facet in facet order

    int facet_index(std::string_view name) const;
    std::vector<int> contexts_of_facet(int facet) const;
    std::vector<int> children_of(int facet) const;
    std::vector<int> root_facets() const;
    bool context_contains(const SlabContext& ctx, std::int64_t ts) const;
    int slab_of(const SlabContext& ctx, std::int64_t ts) const;
    std::size_t total_slabs() const;
};

// Clusters every facet context: roots over the whole corpus, each child facet
// once per parent slab. Splits with no messages are attached to the slab of
// the nearest populated split (ties toward the lower split index).
SlabHierarchy build_slab_hierarchy(const MessageSet& set, const Vocabulary& vocab,
                                   std::vector<TemporalFacet> facets, std::int64_t tz_offset);

void save_slabs(const SlabHierarchy& h, const std::filesystem::path& file);
SlabHierarchy load_slabs(const std::filesystem::path& file);

}  // namespace authorlink
