#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "authorlink/author_vectors.hpp"
#include "authorlink/cbow.hpp"
#include "authorlink/concepts.hpp"
#include "authorlink/corpus.hpp"
#include "authorlink/eval.hpp"
#include "authorlink/linking.hpp"
#include "authorlink/slabs.hpp"

namespace authorlink {

// Run parameters parsed from flat `key = value` entries. The merged entries
// stay alongside the typed fields so stage cache keys can be derived from
// exactly what was configured.
struct PipelineConfig {
    std::map<std::string, std::string> entries;

    std::string corpus;
    std::vector<std::string> extra_corpora;  // accumulated new-message files
    std::string artifacts = "artifacts";
    std::string analogies;
    std::uint64_t seed = 1;
    int threads = 0;
    std::int64_t tz_offset = 0;
    std::vector<TemporalFacet> facets;

    std::size_t min_count = 5;
    std::size_t max_vocab = 0;
    TrainParams train;

    std::string concepts_method = "kmedoids";
    double eps = 0.36;
    int min_pts = 4;
    int k = 22;
    int restarts = 10;
    CombineMode combine = CombineMode::kAvg;
    int zeta = 0;  // 0 = no text enrichment before tweet vectors

    AuthorMode author_mode = AuthorMode::kAvg;
    int folds = 10;

    double alpha = 0.6;
    SimilarityMetric metric = SimilarityMetric::kCosine;
    LinkMode link_mode = LinkMode::kKruskal;
    int top_k = 0;  // 0 = complete author graph

    std::string canonical_text() const;  // sorted `key = value` lines
};

// Defaults overlaid with `entries`; unknown keys and invalid values are
// usage errors. Facets `day` and `hour` carry built-in splits/thresholds.
PipelineConfig config_from_entries(const std::map<std::string, std::string>& entries);
// `key = value` lines, '#' comments. Missing file is a data error.
PipelineConfig load_config(const std::filesystem::path& file);
// The raw entries of a config file, for overlaying command-line overrides.
std::map<std::string, std::string> load_config_entries(const std::filesystem::path& file);
// One `key=value` override, validated against the known keys.
void set_config_entry(std::map<std::string, std::string>& entries,
                      const std::string& assignment);

enum class Stage { kIngest, kSlabs, kTrain, kCollective, kConcepts, kAuthors, kLink };

Stage stage_from(std::string_view name);
std::string stage_name(Stage stage);
std::vector<Stage> stage_deps(Stage stage);

// Directory of persisted stage outputs. The manifest maps each stage to the
// content hash of its inputs (config subset + upstream output hashes) and of
// its output files; a mismatch on either side marks the stage stale.
class ArtifactStore {
  public:
    explicit ArtifactStore(std::filesystem::path dir);  // creates the directory

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path path(const std::string& rel) const { return dir_ / rel; }

    struct StageRecord {
        std::string stage;
        std::string input_key;
        std::string output_hash;
        std::vector<std::string> files;  // store-relative, in stage output order
    };

    std::optional<StageRecord> record(const std::string& stage) const;
    void put_record(const StageRecord& rec);  // rewrites the manifest

    std::string hash_file(const std::string& rel) const;
    std::string combined_hash(const std::vector<std::string>& files) const;
    bool outputs_fresh(const StageRecord& rec) const;

  private:
    void load_manifest();
    void save_manifest() const;

    std::filesystem::path dir_;
    std::map<std::string, StageRecord> records_;
};

struct StageResult {
    ArtifactStore::StageRecord record;
    bool cache_hit = false;
};

// Executes one stage, reusing its outputs when the input key is unchanged
// and the files still match their recorded hash. Upstream stages must be
// current or a DataError "<stage> stage required" is raised. A lock file
// serializes runs against one store.
StageResult run_stage(Stage stage, const PipelineConfig& cfg, ArtifactStore& store);

// Raises DataError "<stage> stage required" unless the stage's outputs exist,
// are unmodified, and were computed from inputs matching this config.
void ensure_current(Stage stage, const PipelineConfig& cfg, const ArtifactStore& store);

// Every stage in dependency order; identical to running them one by one.
// This is also the rebuild trigger: list newly accumulated message files in
// `corpus.extra` and call again — unchanged inputs all hit the cache.
std::vector<StageResult> run_all(const PipelineConfig& cfg, ArtifactStore& store);

struct QueryResult {
    AuthorSimilarityMatrix content;
    AuthorSimilarityMatrix conceptual;
    AuthorSimilarityMatrix total;
    SpanningForest forest;
    QuerySubgraph subgraph;
    std::vector<double> content_vector;
    std::vector<double> concept_vector;
    std::size_t oov_tweets = 0;  // query tweets with no in-vocabulary token
};

// Online query path: folds a brand-new author into the linked graph using the
// trained artifacts as-is (no retraining, nothing written back). The trained
// collective vectors, concept model, and author vectors must be current.
QueryResult insert_query_author(const PipelineConfig& cfg, const ArtifactStore& store,
                                const std::string& author_id,
                                const std::vector<Message>& tweets);

// Component of an author already present in the persisted forest.
QuerySubgraph query_existing_author(const PipelineConfig& cfg, const ArtifactStore& store,
                                    const std::string& author_id);

// Re-evaluates the stage a parameter feeds once per grid value, reusing the
// cached upstream artifacts (an alpha sweep never retrains). Parameters:
// "alpha" emits n_components / avg_weight; "eps", "k", and "zeta" emit
// n_clusters / noise_fraction / silhouette / davies_bouldin (k adds
// total_cost). Grid points run in parallel; row order follows the grid.
SweepTable run_sweep(const PipelineConfig& cfg, const ArtifactStore& store,
                     const std::string& param, const std::vector<double>& grid);

struct ComponentSummary {
    int id = 0;
    std::vector<std::string> authors;
    std::size_t edge_count = 0;
    double average_weight = 0.0;
};

struct ForestReport {
    std::vector<ComponentSummary> components;           // by component id
    std::map<std::size_t, std::size_t> size_histogram;  // size -> count
};

ForestReport build_report(const SpanningForest& forest);
// Human-readable summary: totals, size histogram, and the heaviest
// components holding at least `min_nodes` authors.
std::string format_report(const SpanningForest& forest, const ForestReport& report,
                          std::size_t min_nodes = 5, std::size_t top = 5);
void save_component_tsv(const ForestReport& report, const std::filesystem::path& file);
// Heatmap-ready grid: author-id header row and column, similarity cells.
void save_heatmap_tsv(const AuthorSimilarityMatrix& m, const std::filesystem::path& file);

}  // namespace authorlink
