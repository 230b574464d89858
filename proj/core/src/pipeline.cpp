#include "authorlink/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "authorlink/collective.hpp"
#include "authorlink/common.hpp"
#include "authorlink/synth.hpp"

namespace authorlink {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i <= s.size()) {
        std::size_t j = s.find(sep, i);
        if (j == std::string_view::npos) j = s.size();
        std::string item = trim(s.substr(i, j - i));
        if (!item.empty()) out.push_back(std::move(item));
        i = j + 1;
    }
    return out;
}

std::map<std::string, std::string> default_entries() {
    return {
        {"corpus", ""},
        {"corpus.extra", ""},
        {"artifacts", "artifacts"},
        {"analogies", ""},
        {"seed", "1"},
        {"threads", "0"},
        {"tz_offset", "0"},
        {"facets", "day,hour"},
        {"facet.hour.parent", "day"},
        {"embed.dim", "100"},
        {"embed.window", "5"},
        {"embed.epochs", "5"},
        {"embed.lr", "0.025"},
        {"embed.lr_floor", "0.0001"},
        {"embed.min_count", "5"},
        {"embed.max_vocab", "0"},
        {"concepts.method", "kmedoids"},
        {"concepts.eps", "0.36"},
        {"concepts.min_pts", "4"},
        {"concepts.k", "22"},
        {"concepts.restarts", "10"},
        {"concepts.combine", "avg"},
        {"concepts.zeta", "0"},
        {"authors.mode", "avg"},
        {"authors.folds", "10"},
        {"link.alpha", "0.6"},
        {"link.metric", "cosine"},
        {"link.mode", "kruskal"},
        {"link.top_k", "0"},
    };
}

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
    return true;
}

bool known_key(const std::string& k) {
    static const std::map<std::string, std::string> base = default_entries();
    if (base.count(k)) return true;
    // facet.<name>.{splits,threshold,parent}
    if (k.rfind("facet.", 0) != 0) return false;
    std::string rest = k.substr(6);
    std::size_t dot = rest.rfind('.');
    if (dot == std::string::npos) return false;
    std::string attr = rest.substr(dot + 1);
    return valid_name(rest.substr(0, dot)) &&
           (attr == "splits" || attr == "threshold" || attr == "parent");
}

const std::string& get(const std::map<std::string, std::string>& e, const std::string& key) {
    static const std::string empty;
    auto it = e.find(key);
    return it == e.end() ? empty : it->second;
}

long parse_long(const std::map<std::string, std::string>& e, const std::string& key, long lo,
                long hi) {
    long v;
    try {
        v = stol_strict(get(e, key), key.c_str());
    } catch (const DataError& err) {
        throw UsageError(err.what());
    }
    if (v < lo || v > hi)
        throw UsageError("config " + key + " out of range [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]: " + get(e, key));
    return v;
}

double parse_double(const std::map<std::string, std::string>& e, const std::string& key,
                    double lo, double hi) {
    double v;
    try {
        v = stod_strict(get(e, key), key.c_str());
    } catch (const DataError& err) {
        throw UsageError(err.what());
    }
    if (!(v >= lo && v <= hi))
        throw UsageError("config " + key + " out of range [" + dtos(lo) + ", " + dtos(hi) +
                         "]: " + get(e, key));
    return v;
}

std::vector<TemporalFacet> parse_facets(const std::map<std::string, std::string>& e) {
    std::vector<std::string> names = split_list(get(e, "facets"), ',');
    if (names.empty()) throw UsageError("facets list is empty");
    std::vector<TemporalFacet> facets;
    std::set<std::string> seen;
    for (const auto& name : names) {
        if (!valid_name(name)) throw UsageError("bad facet name: " + name);
        if (!seen.insert(name).second) throw UsageError("duplicate facet: " + name);
        TemporalFacet f;
        f.name = name;
        std::string splits_key = "facet." + name + ".splits";
        std::string thr_key = "facet." + name + ".threshold";
        if (e.count(splits_key)) {
            f.splits = static_cast<int>(parse_long(e, splits_key, 2, 100000));
        } else if (name == "day") {
            f.splits = 7;
        } else if (name == "hour") {
            f.splits = 24;
        } else {
            throw UsageError(splits_key + " required");
        }
        if (e.count(thr_key)) {
            f.threshold = parse_double(e, thr_key, -1.0, 1.0);
        } else if (name == "day") {
            f.threshold = 0.59;
        } else if (name == "hour") {
            f.threshold = 0.989;
        } else {
            throw UsageError(thr_key + " required");
        }
        std::string parent = trim(get(e, "facet." + name + ".parent"));
        if (!parent.empty()) {
            if (!seen.count(parent) || parent == name)
                throw UsageError("facet " + name + " parent must be listed earlier: " + parent);
            f.parent = parent;
        }
        validate_facet(f);
        facets.push_back(std::move(f));
    }
    return facets;
}

// ---------------------------------------------------------------------------
// stage plumbing

std::string hash_path(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read file for hashing: " + p.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        std::streamsize got = in.gcount();
        if (got <= 0) break;
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(got)), h);
    }
    return hash_hex(h);
}

std::string stage_config_text(Stage s, const PipelineConfig& cfg) {
    std::string t;
    switch (s) {
        case Stage::kIngest:
            if (cfg.corpus.empty()) throw UsageError("config corpus path not set");
            t = "min_count=" + std::to_string(cfg.min_count) +
                ";max_vocab=" + std::to_string(cfg.max_vocab) + ";corpus=" + hash_path(cfg.corpus);
            for (const auto& x : cfg.extra_corpora) t += ";extra=" + hash_path(x);
            return t;
        case Stage::kSlabs:
            t = "tz=" + std::to_string(cfg.tz_offset) + ";facets=";
            for (const auto& f : cfg.facets)
                t += f.name + ":" + std::to_string(f.splits) + ":" + dtos(f.threshold) + ":" +
                     (f.parent ? *f.parent : std::string("-")) + ",";
            return t;
        case Stage::kTrain:
            return "dim=" + std::to_string(cfg.train.dim) +
                   ";window=" + std::to_string(cfg.train.window) +
                   ";epochs=" + std::to_string(cfg.train.epochs) + ";lr=" +
                   dtos(cfg.train.learning_rate) + ";lr_floor=" + dtos(cfg.train.lr_floor) +
                   ";seed=" + std::to_string(cfg.seed) + ";analogies=" +
                   (cfg.analogies.empty() ? std::string("none") : hash_path(cfg.analogies));
        case Stage::kCollective:
            return "";
        case Stage::kConcepts:
            return "method=" + cfg.concepts_method + ";eps=" + dtos(cfg.eps) +
                   ";min_pts=" + std::to_string(cfg.min_pts) + ";k=" + std::to_string(cfg.k) +
                   ";restarts=" + std::to_string(cfg.restarts) +
                   ";combine=" + combine_mode_name(cfg.combine) +
                   ";zeta=" + std::to_string(cfg.zeta) + ";seed=" + std::to_string(cfg.seed);
        case Stage::kAuthors:
            return "mode=" + author_mode_name(cfg.author_mode) +
                   ";folds=" + std::to_string(cfg.folds);
        case Stage::kLink:
            return "alpha=" + dtos(cfg.alpha) + ";metric=" + metric_name(cfg.metric) +
                   ";mode=" + link_mode_name(cfg.link_mode) +
                   ";top_k=" + std::to_string(cfg.top_k);
    }
    throw UsageError("unknown stage");
}

std::string input_key(Stage s, const PipelineConfig& cfg, const ArtifactStore& store);

// The record a dependent stage may build on: present, outputs intact, and
// computed from inputs that still match the current config.
ArtifactStore::StageRecord require_current(Stage s, const PipelineConfig& cfg,
                                           const ArtifactStore& store) {
    auto rec = store.record(stage_name(s));
    if (!rec || !store.outputs_fresh(*rec) || rec->input_key != input_key(s, cfg, store))
        throw DataError(stage_name(s) + " stage required");
    return *rec;
}

std::string input_key(Stage s, const PipelineConfig& cfg, const ArtifactStore& store) {
    std::string text = "authorlink-stage-v1|" + stage_name(s) + "|" + stage_config_text(s, cfg);
    for (Stage d : stage_deps(s)) text += "|" + require_current(d, cfg, store).output_hash;
    return hash_hex(fnv1a64(text));
}

// lock file serializing pipeline runs over one store
class StoreLock {
  public:
    explicit StoreLock(const fs::path& dir) : path_(dir / "store.lock") {
        if (fs::exists(path_))
            throw DataError("artifact store is locked; remove " + path_.string() +
                            " if no other run is active");
        std::ofstream out(path_, std::ios::binary);
        out << "locked\n";
        if (!out) throw DataError("cannot create lock file: " + path_.string());
    }
    ~StoreLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

  private:
    fs::path path_;
};

// ---------------------------------------------------------------------------
// artifact readers shared by stages and the query path

MessageSet store_corpus(const ArtifactStore& store) {
    return load_corpus_tsv(store.path("corpus.tsv"));
}

struct IndexRow {
    std::size_t vocab = 0;
    int dim = 0;
    int window = 0;
    SlabAccuracy accuracy;
};

TrainedSlabs load_trained(const ArtifactStore& store, const SlabHierarchy& h) {
    std::ifstream in(store.path("models/index.tsv"));
    if (!in) throw DataError("cannot open model index: " + store.path("models/index.tsv").string());
    std::map<std::string, IndexRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        IndexRow r;
        int answerable = 0;
        std::string raw, normalized;
        if (!(ls >> key >> r.vocab >> r.dim >> r.window >> r.accuracy.attempted >>
              r.accuracy.correct >> raw >> answerable >> normalized))
            throw DataError("bad model index row: " + line);
        r.accuracy.slab_key = key;
        r.accuracy.raw = stod_strict(raw, "model index raw");
        r.accuracy.answerable = answerable != 0;
        r.accuracy.normalized = stod_strict(normalized, "model index normalized");
        rows.emplace(key, std::move(r));
    }
    TrainedSlabs t;
    t.by_context.resize(h.contexts.size());
    for (std::size_t c = 0; c < h.contexts.size(); ++c) {
        for (std::size_t s = 0; s < h.contexts[c].slabs.size(); ++s) {
            std::string key = slab_key(h, static_cast<int>(c), static_cast<int>(s));
            auto it = rows.find(key);
            if (it == rows.end()) throw DataError("model index missing slab " + key);
            SlabModel m;
            if (it->second.vocab == 0) {
                m.embedding.slab_key = key;
                m.embedding.dim = it->second.dim;
                m.embedding.window = it->second.window;
            } else {
                m.embedding = load_model(store.path("models/" + key + ".bin"));
            }
            m.accuracy = it->second.accuracy;
            t.by_context[c].push_back(std::move(m));
        }
    }
    return t;
}

// enrichment applied up front when zeta > 0, so tweet vectors downstream see
// the substituted tokens
MessageSet working_corpus(const PipelineConfig& cfg, const MessageSet& set,
                          const CollectiveVectors& coll) {
    if (cfg.zeta == 0) return set;
    EnrichmentTable table = build_enrichment(coll, cfg.zeta, cfg.threads);
    std::vector<Message> msgs = set.messages();
    for (auto& m : msgs) m.tokens = enrich_text(m.tokens, coll, table);
    return MessageSet(std::move(msgs));
}

struct TweetMatrixes {
    LabeledVectors content;        // raw combined tweet vectors
    std::vector<std::vector<double>> normalized;
    std::size_t oov = 0;
};

TweetMatrixes build_tweet_matrices(const PipelineConfig& cfg, const MessageSet& set,
                                   const CollectiveVectors& coll) {
    TweetMatrixes out;
    std::vector<TweetVector> tvs = tweet_vectors(set, coll, cfg.combine, cfg.threads);
    out.content.dim = coll.dim;
    out.content.ids.reserve(tvs.size());
    out.content.rows.reserve(tvs.size());
    for (auto& tv : tvs) {
        if (tv.all_out_of_vocab) ++out.oov;
        out.content.ids.push_back(tv.id);
        out.content.rows.push_back(std::move(tv.values));
    }
    out.normalized = out.content.rows;
    l2_normalize_rows(out.normalized);
    return out;
}

ConceptModel cluster_tweets(const PipelineConfig& cfg,
                            const std::vector<std::vector<double>>& normalized) {
    if (cfg.concepts_method == "dbscan") return dbscan(normalized, cfg.eps, cfg.min_pts);
    return kmedoids(normalized, cfg.k, cfg.seed, cfg.restarts);
}

// ---------------------------------------------------------------------------
// stage bodies; each returns its output file list in a fixed order

std::vector<std::string> execute_ingest(const PipelineConfig& cfg, ArtifactStore& store) {
    if (cfg.corpus.empty()) throw UsageError("config corpus path not set");
    auto load_any = [](const std::string& p, LoadReport* rep) {
        if (fs::path(p).extension() == ".tsv") return load_corpus_tsv(p);
        return load_messages(p, rep);
    };
    LoadReport report;
    MessageSet first = load_any(cfg.corpus, &report);
    std::vector<Message> msgs = first.messages();
    std::set<std::string> ids;
    for (const auto& m : msgs) ids.insert(m.id);
    std::size_t dup = 0;
    for (const auto& extra : cfg.extra_corpora) {
        MessageSet more = load_any(extra, &report);
        for (const auto& m : more.messages()) {
            if (!ids.insert(m.id).second) {
                ++dup;
                continue;
            }
            msgs.push_back(m);
        }
    }
    if (msgs.empty()) throw DataError("corpus is empty: " + cfg.corpus);
    MessageSet set(std::move(msgs));
    save_corpus_tsv(set, store.path("corpus.tsv"));
    Vocabulary vocab = Vocabulary::build(set, cfg.min_count, cfg.max_vocab);
    vocab.save(store.path("vocab.txt"));
    std::ofstream rep(store.path("ingest_report.txt"), std::ios::binary);
    rep << "messages\t" << set.size() << "\nauthors\t" << set.authors().size() << "\nvocab\t"
        << vocab.size() << "\nskipped\t" << report.skipped << "\nduplicates\t" << dup << '\n';
    for (const auto& w : report.warnings) rep << "# " << w << '\n';
    return {"corpus.tsv", "vocab.txt", "ingest_report.txt"};
}

std::vector<std::string> execute_slabs(const PipelineConfig& cfg, ArtifactStore& store) {
    MessageSet set = store_corpus(store);
    Vocabulary vocab = Vocabulary::load(store.path("vocab.txt"));
    SlabHierarchy h = build_slab_hierarchy(set, vocab, cfg.facets, cfg.tz_offset);
    save_slabs(h, store.path("slabs.txt"));
    return {"slabs.txt"};
}

std::vector<std::string> execute_train(const PipelineConfig& cfg, ArtifactStore& store) {
    MessageSet set = store_corpus(store);
    Vocabulary vocab = Vocabulary::load(store.path("vocab.txt"));
    SlabHierarchy h = load_slabs(store.path("slabs.txt"));
    AnalogySet analogies;
    const AnalogySet* ap = nullptr;
    if (!cfg.analogies.empty()) {
        analogies = load_analogies(cfg.analogies);
        ap = &analogies;
    }
    TrainedSlabs trained =
        train_all_slabs(set, h, vocab, cfg.train, ap, cfg.threads, cfg.max_vocab);

    fs::remove_all(store.path("models"));
    fs::create_directories(store.path("models"));
    std::vector<std::string> files = {"models/index.tsv"};
    std::ofstream index(store.path("models/index.tsv"), std::ios::binary);
    for (std::size_t c = 0; c < trained.by_context.size(); ++c) {
        for (std::size_t s = 0; s < trained.by_context[c].size(); ++s) {
            const SlabModel& m = trained.by_context[c][s];
            std::string key = slab_key(h, static_cast<int>(c), static_cast<int>(s));
            if (m.embedding.vocab() > 0) {
                std::string rel = "models/" + key + ".bin";
                save_model(m.embedding, store.path(rel));
                files.push_back(rel);
            }
            index << key << '\t' << m.embedding.vocab() << '\t' << m.embedding.dim << '\t'
                  << m.embedding.window << '\t' << m.accuracy.attempted << '\t'
                  << m.accuracy.correct << '\t' << dtos(m.accuracy.raw) << '\t'
                  << (m.accuracy.answerable ? 1 : 0) << '\t' << dtos(m.accuracy.normalized)
                  << '\n';
        }
    }
    if (!index) throw DataError("short write on model index");
    return files;
}

std::vector<std::string> execute_collective(const PipelineConfig& cfg, ArtifactStore& store) {
    Vocabulary vocab = Vocabulary::load(store.path("vocab.txt"));
    SlabHierarchy h = load_slabs(store.path("slabs.txt"));
    TrainedSlabs trained = load_trained(store, h);
    CollectiveVectors v = build_collective_vectors(h, trained, vocab.terms(), cfg.threads);
    save_collective(v, store.path("collective.txt"));
    return {"collective.txt"};
}

std::vector<std::string> execute_concepts(const PipelineConfig& cfg, ArtifactStore& store) {
    MessageSet set = store_corpus(store);
    CollectiveVectors coll = load_collective(store.path("collective.txt"));
    MessageSet work = working_corpus(cfg, set, coll);
    TweetMatrixes tm = build_tweet_matrices(cfg, work, coll);
    save_labeled_vectors(tm.content, store.path("tweet_vectors.txt"));

    ConceptModel model = cluster_tweets(cfg, tm.normalized);
    if (model.clusters() == 0)
        throw DataError("clustering found no concepts; adjust concepts.eps or concepts.min_pts");
    save_concepts(model, store.path("concepts.txt"));

    LabeledVectors tc;
    tc.dim = static_cast<int>(model.clusters());
    tc.ids = tm.content.ids;
    tc.rows.resize(tm.normalized.size());
    parallel_for(
        tm.normalized.size(),
        [&](std::size_t i) { tc.rows[i] = concept_vector(tm.normalized[i], model); },
        static_cast<unsigned>(cfg.threads));
    save_labeled_vectors(tc, store.path("tweet_concepts.txt"));

    bool sil_degenerate = false, db_degenerate = false;
    double sil = silhouette(tm.normalized, model.assignment, &sil_degenerate);
    double db = davies_bouldin(tm.normalized, model.assignment, &db_degenerate);
    std::size_t noise = 0;
    for (int a : model.assignment)
        if (a < 0) ++noise;
    std::ofstream metrics(store.path("concept_metrics.tsv"), std::ios::binary);
    metrics << "n_points\t" << model.assignment.size() << '\n'
            << "n_clusters\t" << model.clusters() << '\n'
            << "noise\t" << noise << '\n'
            << "oov_tweets\t" << tm.oov << '\n'
            << "silhouette\t" << dtos(sil) << '\n'
            << "silhouette_degenerate\t" << (sil_degenerate ? 1 : 0) << '\n'
            << "davies_bouldin\t" << dtos(db) << '\n'
            << "davies_bouldin_degenerate\t" << (db_degenerate ? 1 : 0) << '\n';
    if (!metrics) throw DataError("short write on concept metrics");
    return {"concepts.txt", "tweet_vectors.txt", "tweet_concepts.txt", "concept_metrics.tsv"};
}

std::vector<std::string> execute_authors(const PipelineConfig& cfg, ArtifactStore& store) {
    MessageSet set = store_corpus(store);
    LabeledVectors tv = load_labeled_vectors(store.path("tweet_vectors.txt"));
    LabeledVectors tc = load_labeled_vectors(store.path("tweet_concepts.txt"));
    if (tv.ids.size() != set.size() || tc.ids.size() != set.size())
        throw DataError("tweet vectors do not match the corpus");
    for (std::size_t i = 0; i < set.size(); ++i)
        if (tv.ids[i] != set.at(i).id || tc.ids[i] != set.at(i).id)
            throw DataError("tweet vector ids do not match the corpus");

    LabeledVectors content, conceptual;
    content.dim = tv.dim;
    conceptual.dim = tc.dim;
    std::size_t clamped = 0;
    for (const auto& author : set.authors()) {
        std::vector<std::vector<double>> rows, crows;
        rows.reserve(author.message_indices.size());
        crows.reserve(author.message_indices.size());
        for (std::size_t idx : author.message_indices) {
            rows.push_back(tv.rows[idx]);
            crows.push_back(tc.rows[idx]);
        }
        content.ids.push_back(author.author_id);
        content.rows.push_back(author_content_vector(rows, cfg.author_mode, cfg.folds, &clamped));
        conceptual.ids.push_back(author.author_id);
        conceptual.rows.push_back(author_concept_vector(crows));
    }
    save_labeled_vectors(content, store.path("authors_content.txt"));
    save_labeled_vectors(conceptual, store.path("authors_concept.txt"));
    std::ofstream metrics(store.path("authors_metrics.tsv"), std::ios::binary);
    metrics << "authors\t" << content.ids.size() << '\n'
            << "clamped_values\t" << clamped << '\n';
    if (!metrics) throw DataError("short write on author metrics");
    return {"authors_content.txt", "authors_concept.txt", "authors_metrics.tsv"};
}

std::vector<std::string> execute_link(const PipelineConfig& cfg, ArtifactStore& store) {
    LabeledVectors content = load_labeled_vectors(store.path("authors_content.txt"));
    LabeledVectors conceptual = load_labeled_vectors(store.path("authors_concept.txt"));
    AuthorSimilarityMatrix xc = similarity_matrix(content, "content", cfg.metric, cfg.threads);
    AuthorSimilarityMatrix xk = similarity_matrix(conceptual, "concept", cfg.metric, cfg.threads);
    AuthorSimilarityMatrix xt = blend(xc, xk, cfg.alpha);
    AuthorGraph g = build_graph(xt, cfg.top_k);
    SpanningForest f = sw_mst(g, cfg.link_mode);
    save_matrix(xc, store.path("matrix_content.bin"));
    save_matrix(xk, store.path("matrix_concept.bin"));
    save_matrix(xt, store.path("matrix_total.bin"));
    save_forest(f, store.path("forest.txt"));
    return {"matrix_content.bin", "matrix_content.bin.idx", "matrix_concept.bin",
            "matrix_concept.bin.idx", "matrix_total.bin",   "matrix_total.bin.idx",
            "forest.txt"};
}

std::vector<std::string> execute(Stage stage, const PipelineConfig& cfg, ArtifactStore& store) {
    switch (stage) {
        case Stage::kIngest: return execute_ingest(cfg, store);
        case Stage::kSlabs: return execute_slabs(cfg, store);
        case Stage::kTrain: return execute_train(cfg, store);
        case Stage::kCollective: return execute_collective(cfg, store);
        case Stage::kConcepts: return execute_concepts(cfg, store);
        case Stage::kAuthors: return execute_authors(cfg, store);
        case Stage::kLink: return execute_link(cfg, store);
    }
    throw UsageError("unknown stage");
}

}  // namespace

// ---------------------------------------------------------------------------
// config

std::string PipelineConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    return out;
}

PipelineConfig config_from_entries(const std::map<std::string, std::string>& user) {
    std::map<std::string, std::string> merged = default_entries();
    if (user.count("facets")) {
        // the tree is being redefined; stock per-facet keys no longer apply
        for (auto it = merged.begin(); it != merged.end();)
            it = it->first.rfind("facet.", 0) == 0 ? merged.erase(it) : std::next(it);
    }
    for (const auto& [k, v] : user) {
        if (!known_key(k)) throw UsageError("unknown config key: " + k);
        merged[k] = trim(v);
    }

    PipelineConfig cfg;
    cfg.corpus = get(merged, "corpus");
    cfg.extra_corpora = split_list(get(merged, "corpus.extra"), ',');
    cfg.artifacts = get(merged, "artifacts");
    if (cfg.artifacts.empty()) throw UsageError("config artifacts path is empty");
    cfg.analogies = get(merged, "analogies");
    cfg.seed = static_cast<std::uint64_t>(
        parse_long(merged, "seed", 0, std::numeric_limits<long>::max()));
    cfg.threads = static_cast<int>(parse_long(merged, "threads", 0, 4096));
    cfg.tz_offset = parse_long(merged, "tz_offset", -86400, 86400);
    cfg.facets = parse_facets(merged);

    cfg.min_count = static_cast<std::size_t>(parse_long(merged, "embed.min_count", 1, 1 << 30));
    cfg.max_vocab = static_cast<std::size_t>(parse_long(merged, "embed.max_vocab", 0, 1 << 30));
    cfg.train.dim = static_cast<int>(parse_long(merged, "embed.dim", 1, 1 << 20));
    cfg.train.window = static_cast<int>(parse_long(merged, "embed.window", 1, 1 << 20));
    cfg.train.epochs = static_cast<int>(parse_long(merged, "embed.epochs", 0, 1 << 20));
    cfg.train.learning_rate = parse_double(merged, "embed.lr", 1e-12, 1e6);
    cfg.train.lr_floor = parse_double(merged, "embed.lr_floor", 0.0, 1.0);
    cfg.train.seed = cfg.seed;

    cfg.concepts_method = get(merged, "concepts.method");
    if (cfg.concepts_method != "dbscan" && cfg.concepts_method != "kmedoids")
        throw UsageError("concepts.method must be dbscan or kmedoids: " + cfg.concepts_method);
    cfg.eps = parse_double(merged, "concepts.eps", 1e-12, 1e6);
    cfg.min_pts = static_cast<int>(parse_long(merged, "concepts.min_pts", 1, 1 << 30));
    cfg.k = static_cast<int>(parse_long(merged, "concepts.k", 1, 1 << 30));
    cfg.restarts = static_cast<int>(parse_long(merged, "concepts.restarts", 1, 1 << 20));
    cfg.combine = combine_mode_from(get(merged, "concepts.combine"));
    cfg.zeta = static_cast<int>(parse_long(merged, "concepts.zeta", 0, 1 << 20));

    cfg.author_mode = author_mode_from(get(merged, "authors.mode"));
    cfg.folds = static_cast<int>(parse_long(merged, "authors.folds", 2, 1 << 20));

    cfg.alpha = parse_double(merged, "link.alpha", 0.0, 1.0);
    cfg.metric = metric_from(get(merged, "link.metric"));
    cfg.link_mode = link_mode_from(get(merged, "link.mode"));
    cfg.top_k = static_cast<int>(parse_long(merged, "link.top_k", 0, 1 << 30));

    cfg.entries = std::move(merged);
    return cfg;
}

std::map<std::string, std::string> load_config_entries(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open config file: " + file.string());
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw DataError("config line " + std::to_string(lineno) + ": empty key");
        if (!entries.emplace(key, value).second)
            throw DataError("config line " + std::to_string(lineno) + ": duplicate key " + key);
    }
    return entries;
}

PipelineConfig load_config(const fs::path& file) {
    return config_from_entries(load_config_entries(file));
}

void set_config_entry(std::map<std::string, std::string>& entries,
                      const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw UsageError("expected key=value override: " + assignment);
    std::string key = trim(assignment.substr(0, eq));
    if (!known_key(key)) throw UsageError("unknown config key: " + key);
    entries[key] = trim(assignment.substr(eq + 1));
}

// ---------------------------------------------------------------------------
// stages

Stage stage_from(std::string_view name) {
    if (name == "ingest") return Stage::kIngest;
    if (name == "slabs") return Stage::kSlabs;
    if (name == "train") return Stage::kTrain;
    if (name == "collective") return Stage::kCollective;
    if (name == "concepts") return Stage::kConcepts;
    if (name == "authors") return Stage::kAuthors;
    if (name == "link") return Stage::kLink;
    throw UsageError("unknown stage: " + std::string(name));
}

std::string stage_name(Stage stage) {
    switch (stage) {
        case Stage::kIngest: return "ingest";
        case Stage::kSlabs: return "slabs";
        case Stage::kTrain: return "train";
        case Stage::kCollective: return "collective";
        case Stage::kConcepts: return "concepts";
        case Stage::kAuthors: return "authors";
        case Stage::kLink: return "link";
    }
    return "?";
}

std::vector<Stage> stage_deps(Stage stage) {
    switch (stage) {
        case Stage::kIngest: return {};
        case Stage::kSlabs: return {Stage::kIngest};
        case Stage::kTrain: return {Stage::kIngest, Stage::kSlabs};
        case Stage::kCollective: return {Stage::kSlabs, Stage::kTrain};
        case Stage::kConcepts: return {Stage::kIngest, Stage::kCollective};
        case Stage::kAuthors: return {Stage::kIngest, Stage::kConcepts};
        case Stage::kLink: return {Stage::kAuthors};
    }
    return {};
}

// ---------------------------------------------------------------------------
// artifact store

ArtifactStore::ArtifactStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    load_manifest();
}

void ArtifactStore::load_manifest() {
    std::ifstream in(dir_ / "manifest.tsv");
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t p1 = line.find('\t');
        std::size_t p2 = line.find('\t', p1 + 1);
        std::size_t p3 = line.find('\t', p2 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos)
            throw DataError("bad manifest line " + std::to_string(lineno));
        StageRecord rec;
        rec.stage = line.substr(0, p1);
        rec.input_key = line.substr(p1 + 1, p2 - p1 - 1);
        rec.output_hash = line.substr(p2 + 1, p3 - p2 - 1);
        rec.files = split_list(line.substr(p3 + 1), ',');
        records_[rec.stage] = std::move(rec);
    }
}

void ArtifactStore::save_manifest() const {
    std::ofstream out(dir_ / "manifest.tsv", std::ios::binary);
    if (!out) throw DataError("cannot write manifest: " + (dir_ / "manifest.tsv").string());
    for (const auto& [stage, rec] : records_) {
        out << rec.stage << '\t' << rec.input_key << '\t' << rec.output_hash << '\t';
        for (std::size_t i = 0; i < rec.files.size(); ++i)
            out << (i ? "," : "") << rec.files[i];
        out << '\n';
    }
    if (!out) throw DataError("short write on manifest");
}

std::optional<ArtifactStore::StageRecord> ArtifactStore::record(const std::string& stage) const {
    auto it = records_.find(stage);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void ArtifactStore::put_record(const StageRecord& rec) {
    records_[rec.stage] = rec;
    save_manifest();
}

std::string ArtifactStore::hash_file(const std::string& rel) const {
    return hash_path(dir_ / rel);
}

std::string ArtifactStore::combined_hash(const std::vector<std::string>& files) const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& rel : files) {
        h = fnv1a64(rel, h);
        h = fnv1a64("=", h);
        h = fnv1a64(hash_file(rel), h);
        h = fnv1a64(";", h);
    }
    return hash_hex(h);
}

bool ArtifactStore::outputs_fresh(const StageRecord& rec) const {
    try {
        return combined_hash(rec.files) == rec.output_hash;
    } catch (const DataError&) {
        return false;  // a listed file is gone
    }
}

StageResult run_stage(Stage stage, const PipelineConfig& cfg, ArtifactStore& store) {
    std::string key = input_key(stage, cfg, store);
    if (auto rec = store.record(stage_name(stage));
        rec && rec->input_key == key && store.outputs_fresh(*rec))
        return {*rec, true};

    StoreLock lock(store.dir());
    ArtifactStore::StageRecord rec;
    rec.stage = stage_name(stage);
    rec.input_key = key;
    rec.files = execute(stage, cfg, store);
    rec.output_hash = store.combined_hash(rec.files);
    store.put_record(rec);
    return {rec, false};
}

void ensure_current(Stage stage, const PipelineConfig& cfg, const ArtifactStore& store) {
    require_current(stage, cfg, store);
}

std::vector<StageResult> run_all(const PipelineConfig& cfg, ArtifactStore& store) {
    std::vector<StageResult> results;
    for (Stage s : {Stage::kIngest, Stage::kSlabs, Stage::kTrain, Stage::kCollective,
                    Stage::kConcepts, Stage::kAuthors, Stage::kLink})
        results.push_back(run_stage(s, cfg, store));
    return results;
}

// ---------------------------------------------------------------------------
// query path

QueryResult insert_query_author(const PipelineConfig& cfg, const ArtifactStore& store,
                                const std::string& author_id,
                                const std::vector<Message>& tweets) {
    require_current(Stage::kAuthors, cfg, store);
    if (author_id.empty()) throw UsageError("query author id is empty");
    if (tweets.empty()) throw DataError("query author has no tweets");

    CollectiveVectors coll = load_collective(store.path("collective.txt"));
    ConceptModel model = load_concepts(store.path("concepts.txt"));
    LabeledVectors content = load_labeled_vectors(store.path("authors_content.txt"));
    LabeledVectors conceptual = load_labeled_vectors(store.path("authors_concept.txt"));
    if (content.dim != coll.dim)
        throw DataError("stale artifacts: collective and author vector widths differ");
    if (conceptual.dim != static_cast<int>(model.clusters()))
        throw DataError("stale artifacts: concept model and author vector widths differ");
    if (std::binary_search(content.ids.begin(), content.ids.end(), author_id))
        throw DataError("author already present: " + author_id);

    QueryResult out;
    EnrichmentTable table;
    if (cfg.zeta > 0) table = build_enrichment(coll, cfg.zeta, cfg.threads);
    std::vector<std::vector<double>> rows;
    rows.reserve(tweets.size());
    for (const Message& m : tweets) {
        Message work = m;
        if (cfg.zeta > 0) work.tokens = enrich_text(work.tokens, coll, table);
        TweetVector tv = tweet_vector(work, coll, cfg.combine);
        if (tv.all_out_of_vocab) ++out.oov_tweets;
        rows.push_back(std::move(tv.values));
    }
    out.content_vector = author_content_vector(rows, cfg.author_mode, cfg.folds);
    std::vector<std::vector<double>> normalized = rows;
    l2_normalize_rows(normalized);
    std::vector<std::vector<double>> crows;
    crows.reserve(normalized.size());
    for (const auto& r : normalized) crows.push_back(concept_vector(r, model));
    out.concept_vector = author_concept_vector(crows);

    auto pos = std::lower_bound(content.ids.begin(), content.ids.end(), author_id);
    std::size_t at = static_cast<std::size_t>(pos - content.ids.begin());
    content.ids.insert(content.ids.begin() + static_cast<std::ptrdiff_t>(at), author_id);
    content.rows.insert(content.rows.begin() + static_cast<std::ptrdiff_t>(at),
                        out.content_vector);
    conceptual.ids.insert(conceptual.ids.begin() + static_cast<std::ptrdiff_t>(at), author_id);
    conceptual.rows.insert(conceptual.rows.begin() + static_cast<std::ptrdiff_t>(at),
                        out.concept_vector);

    out.content = similarity_matrix(content, "content", cfg.metric, cfg.threads);
    out.conceptual = similarity_matrix(conceptual, "concept", cfg.metric, cfg.threads);
    out.total = blend(out.content, out.conceptual, cfg.alpha);
    AuthorGraph g = build_graph(out.total, cfg.top_k);
    out.forest = sw_mst(g, cfg.link_mode);
    out.subgraph = query_subgraph(out.forest, author_id);
    return out;
}

QuerySubgraph query_existing_author(const PipelineConfig& cfg, const ArtifactStore& store,
                                    const std::string& author_id) {
    require_current(Stage::kLink, cfg, store);
    SpanningForest f = load_forest(store.path("forest.txt"));
    return query_subgraph(f, author_id);
}

// ---------------------------------------------------------------------------
// sweeps

SweepTable run_sweep(const PipelineConfig& cfg, const ArtifactStore& store,
                     const std::string& param, const std::vector<double>& grid) {
    if (grid.empty()) throw UsageError("empty sweep grid");
    SweepTable table;
    table.param_name = param;
    std::vector<std::vector<SweepRow>> buckets(grid.size());

    if (param == "alpha") {
        for (double a : grid)
            if (!(a >= 0.0 && a <= 1.0)) throw UsageError("alpha grid value out of [0, 1]");
        require_current(Stage::kAuthors, cfg, store);
        LabeledVectors content = load_labeled_vectors(store.path("authors_content.txt"));
        LabeledVectors conceptual = load_labeled_vectors(store.path("authors_concept.txt"));
        AuthorSimilarityMatrix xc = similarity_matrix(content, "content", cfg.metric, cfg.threads);
        AuthorSimilarityMatrix xk = similarity_matrix(conceptual, "concept", cfg.metric, cfg.threads);
        parallel_for(
            grid.size(),
            [&](std::size_t i) {
                AuthorSimilarityMatrix xt = blend(xc, xk, grid[i]);
                SpanningForest f = sw_mst(build_graph(xt, cfg.top_k), cfg.link_mode);
                buckets[i] = {{grid[i], "n_components", static_cast<double>(f.n_components)},
                              {grid[i], "avg_weight", f.average_weight}};
            },
            static_cast<unsigned>(cfg.threads));
    } else if (param == "eps" || param == "k" || param == "zeta") {
        require_current(Stage::kCollective, cfg, store);
        require_current(Stage::kIngest, cfg, store);
        MessageSet set = store_corpus(store);
        CollectiveVectors coll = load_collective(store.path("collective.txt"));

        auto cluster_metrics = [](const ConceptModel& model,
                                  const std::vector<std::vector<double>>& pts, double value,
                                  std::vector<SweepRow>& rows) {
            std::size_t noise = 0;
            for (int a : model.assignment)
                if (a < 0) ++noise;
            bool deg = false;
            double sil = silhouette(pts, model.assignment, &deg);
            double db = davies_bouldin(pts, model.assignment, &deg);
            rows.push_back({value, "n_clusters", static_cast<double>(model.clusters())});
            rows.push_back({value, "noise_fraction",
                            pts.empty() ? 0.0
                                        : static_cast<double>(noise) /
                                              static_cast<double>(pts.size())});
            rows.push_back({value, "silhouette", sil});
            rows.push_back({value, "davies_bouldin", db});
        };

        if (param == "zeta") {
            for (double z : grid)
                if (z < 0.0 || z != std::floor(z))
                    throw UsageError("zeta grid values must be non-negative integers");
            parallel_for(
                grid.size(),
                [&](std::size_t i) {
                    PipelineConfig point = cfg;
                    point.zeta = static_cast<int>(grid[i]);
                    point.threads = 1;  // the sweep parallelizes over points
                    MessageSet work = working_corpus(point, set, coll);
                    TweetMatrixes tm = build_tweet_matrices(point, work, coll);
                    ConceptModel model = cluster_tweets(point, tm.normalized);
                    cluster_metrics(model, tm.normalized, grid[i], buckets[i]);
                },
                static_cast<unsigned>(cfg.threads));
        } else {
            PipelineConfig base = cfg;
            base.threads = 1;
            MessageSet work = working_corpus(cfg, set, coll);
            TweetMatrixes tm = build_tweet_matrices(cfg, work, coll);
            if (param == "eps") {
                for (double e : grid)
                    if (!(e > 0.0)) throw UsageError("eps grid values must be positive");
                parallel_for(
                    grid.size(),
                    [&](std::size_t i) {
                        ConceptModel model = dbscan(tm.normalized, grid[i], cfg.min_pts);
                        cluster_metrics(model, tm.normalized, grid[i], buckets[i]);
                    },
                    static_cast<unsigned>(cfg.threads));
            } else {
                for (double k : grid)
                    if (k < 1.0 || k != std::floor(k))
                        throw UsageError("k grid values must be positive integers");
                parallel_for(
                    grid.size(),
                    [&](std::size_t i) {
                        int k = static_cast<int>(grid[i]);
                        ConceptModel model = kmedoids(tm.normalized, k, cfg.seed, cfg.restarts);
                        cluster_metrics(model, tm.normalized, grid[i], buckets[i]);
                        double cost = 0.0;
                        for (std::size_t p = 0; p < tm.normalized.size(); ++p)
                            cost += euclidean(tm.normalized[p],
                                              model.centroids[static_cast<std::size_t>(
                                                  model.assignment[p])]);
                        buckets[i].push_back({grid[i], "total_cost", cost});
                    },
                    static_cast<unsigned>(cfg.threads));
            }
        }
    } else {
        throw UsageError("unknown sweep parameter: " + param +
                         " (expected alpha, eps, k, or zeta)");
    }

    for (auto& rows : buckets)
        table.rows.insert(table.rows.end(), rows.begin(), rows.end());
    return table;
}

// ---------------------------------------------------------------------------
// reports

ForestReport build_report(const SpanningForest& forest) {
    ForestReport report;
    report.components.resize(static_cast<std::size_t>(forest.n_components));
    for (int c = 0; c < forest.n_components; ++c)
        report.components[static_cast<std::size_t>(c)].id = c;
    for (std::size_t i = 0; i < forest.authors.size(); ++i)
        report.components[static_cast<std::size_t>(forest.component[i])].authors.push_back(
            forest.authors[i]);
    std::vector<double> weight_sum(static_cast<std::size_t>(forest.n_components), 0.0);
    for (const auto& e : forest.edges) {
        auto& comp = report.components[static_cast<std::size_t>(forest.component[(std::size_t)e.a])];
        ++comp.edge_count;
        weight_sum[static_cast<std::size_t>(comp.id)] += e.weight;
    }
    for (auto& comp : report.components) {
        if (comp.edge_count > 0)
            comp.average_weight = weight_sum[static_cast<std::size_t>(comp.id)] /
                                  static_cast<double>(comp.edge_count);
        ++report.size_histogram[comp.authors.size()];
    }
    return report;
}

std::string format_report(const SpanningForest& forest, const ForestReport& report,
                          std::size_t min_nodes, std::size_t top) {
    std::ostringstream os;
    os << "authors: " << forest.authors.size() << '\n'
       << "components: " << forest.n_components << '\n'
       << "mode: " << forest.mode << '\n'
       << "average edge weight: " << dtos(forest.average_weight) << '\n';
    os << "component sizes (size x count):";
    for (const auto& [size, count] : report.size_histogram) os << ' ' << size << 'x' << count;
    os << '\n';

    std::vector<const ComponentSummary*> big;
    for (const auto& c : report.components)
        if (c.authors.size() >= min_nodes) big.push_back(&c);
    std::sort(big.begin(), big.end(), [](const ComponentSummary* a, const ComponentSummary* b) {
        if (a->average_weight != b->average_weight) return a->average_weight > b->average_weight;
        return a->id < b->id;
    });
    if (big.size() > top) big.resize(top);
    os << "top components (at least " << min_nodes << " authors):\n";
    if (big.empty()) os << "  none\n";
    for (const ComponentSummary* c : big) {
        os << "  #" << c->id << ": " << c->authors.size() << " authors, " << c->edge_count
           << " edges, avg weight " << dtos(c->average_weight) << '\n' << "   ";
        for (const auto& a : c->authors) os << ' ' << a;
        os << '\n';
    }
    return os.str();
}

void save_component_tsv(const ForestReport& report, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write component tsv: " + file.string());
    out << "component\tsize\tedges\tavg_weight\tauthors\n";
    for (const auto& c : report.components) {
        out << c.id << '\t' << c.authors.size() << '\t' << c.edge_count << '\t'
            << dtos(c.average_weight) << '\t';
        for (std::size_t i = 0; i < c.authors.size(); ++i)
            out << (i ? " " : "") << c.authors[i];
        out << '\n';
    }
    if (!out) throw DataError("short write: " + file.string());
}

void save_heatmap_tsv(const AuthorSimilarityMatrix& m, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write heatmap tsv: " + file.string());
    out << "id";
    for (const auto& a : m.authors) out << '\t' << a;
    out << '\n';
    for (int i = 0; i < m.n(); ++i) {
        out << m.authors[static_cast<std::size_t>(i)];
        for (int j = 0; j < m.n(); ++j) out << '\t' << dtos(m.at(i, j));
        out << '\n';
    }
    if (!out) throw DataError("short write: " + file.string());
}

}  // namespace authorlink
