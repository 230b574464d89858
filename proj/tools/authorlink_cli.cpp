// authorlink: link likely same-author accounts in a short-text corpus by
// time-conditioned embeddings, concept clustering, and spanning-forest cuts.
#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "authorlink/common.hpp"
#include "authorlink/eval.hpp"
#include "authorlink/pipeline.hpp"
#include "authorlink/synth.hpp"

namespace {

using namespace authorlink;

// Global knobs shared by every subcommand. String-typed on purpose: values
// flow through the same config validation as file entries, so messages and
// ranges stay consistent.
struct Globals {
    std::string config_file;
    std::vector<std::string> sets;
    std::string artifacts;
    std::string corpus;
    std::string seed;
    std::string threads;
    std::string alpha;
};

PipelineConfig make_config(const Globals& g) {
    std::map<std::string, std::string> entries;
    if (!g.config_file.empty()) entries = load_config_entries(g.config_file);
    if (!g.corpus.empty()) entries["corpus"] = g.corpus;
    if (!g.artifacts.empty()) entries["artifacts"] = g.artifacts;
    if (!g.seed.empty()) entries["seed"] = g.seed;
    if (!g.threads.empty()) entries["threads"] = g.threads;
    if (!g.alpha.empty()) entries["link.alpha"] = g.alpha;
    for (const std::string& s : g.sets) set_config_entry(entries, s);
    return config_from_entries(entries);
}

void run_one_stage(Stage stage, const Globals& g) {
    PipelineConfig cfg = make_config(g);
    ArtifactStore store(cfg.artifacts);
    StageResult r = run_stage(stage, cfg, store);
    if (r.cache_hit) {
        std::cout << stage_name(stage) << ": up to date (" << r.record.files.size()
                  << " files)\n";
        return;
    }
    std::cout << stage_name(stage) << ": wrote " << r.record.files.size() << " files\n";
    for (const std::string& rel : r.record.files)
        std::cout << "  " << store.path(rel).string() << '\n';
}

void print_component(const std::vector<std::string>& authors,
                     const std::vector<AuthorGraph::Edge>& edges, double average_weight) {
    std::cout << "component: " << authors.size() << " authors, " << edges.size() << " edges";
    if (!edges.empty()) std::cout << ", avg weight " << dtos(average_weight);
    std::cout << '\n';
    for (const std::string& a : authors) std::cout << "  " << a << '\n';
    for (const auto& e : edges)
        std::cout << "  " << authors[static_cast<std::size_t>(e.a)] << " -- "
                  << authors[static_cast<std::size_t>(e.b)] << "  " << dtos(e.weight) << '\n';
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> grid;
    std::size_t i = 0;
    while (i <= csv.size()) {
        std::size_t j = csv.find(',', i);
        if (j == std::string::npos) j = csv.size();
        std::string item = csv.substr(i, j - i);
        if (!item.empty()) {
            try {
                grid.push_back(stod_strict(item, "grid value"));
            } catch (const DataError& e) {
                throw UsageError(e.what());
            }
        }
        i = j + 1;
    }
    return grid;
}

std::vector<int> parse_votes(const std::string& csv) {
    std::vector<int> votes;
    std::size_t i = 0;
    while (i <= csv.size()) {
        std::size_t j = csv.find(',', i);
        if (j == std::string::npos) j = csv.size();
        std::string item = csv.substr(i, j - i);
        if (!item.empty()) {
            try {
                votes.push_back(static_cast<int>(stol_strict(item, "vote")));
            } catch (const DataError& e) {
                throw UsageError(e.what());
            }
        }
        i = j + 1;
    }
    return votes;
}

std::vector<Message> author_messages(const MessageSet& set, const std::string& id) {
    auto idx = set.author_index(id);
    if (!idx) throw DataError("unknown author: " + id);
    std::vector<Message> out;
    for (std::size_t m : set.authors()[*idx].message_indices) out.push_back(set.at(m));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"link likely same-author accounts in a short-text corpus"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_file, "config file of key = value lines");
    app.add_option("--set", g.sets, "override one config entry (key=value), repeatable");
    app.add_option("--artifacts", g.artifacts, "artifact store directory");
    app.add_option("--corpus", g.corpus, "corpus file (JSONL or corpus.tsv)");
    app.add_option("--seed", g.seed, "RNG seed for training and clustering");
    app.add_option("--threads", g.threads, "worker threads (0 = hardware default)");
    app.add_option("--alpha", g.alpha, "concept/content blend weight in [0, 1]");

    std::function<void()> todo;

    for (const char* name : {"ingest", "slabs", "train", "collective", "concepts", "authors",
                             "link"}) {
        Stage stage = stage_from(name);
        std::string help = "run the " + std::string(name) + " stage (cached upstream reused)";
        CLI::App* sub = app.add_subcommand(name, help);
        sub->callback([&todo, stage, &g] { todo = [stage, &g] { run_one_stage(stage, g); }; });
    }

    // query ------------------------------------------------------------
    auto* query = app.add_subcommand("query", "resolve an author's linked component");
    auto query_author = std::make_shared<std::string>();
    auto query_tweets = std::make_shared<std::string>();
    query->add_option("--author", *query_author, "author id to look up or insert")->required();
    query->add_option("--tweets", *query_tweets,
                      "JSONL tweets of a new author; omitted = look up an existing author");
    query->callback([&todo, &g, query_author, query_tweets] {
        todo = [&g, query_author, query_tweets] {
            PipelineConfig cfg = make_config(g);
            ArtifactStore store(cfg.artifacts);
            if (query_tweets->empty()) {
                QuerySubgraph sub = query_existing_author(cfg, store, *query_author);
                print_component(sub.authors, sub.edges, sub.average_weight);
                return;
            }
            MessageSet tweets = load_messages(*query_tweets);
            QueryResult res =
                insert_query_author(cfg, store, *query_author, tweets.messages());
            if (res.oov_tweets > 0)
                std::cout << "note: " << res.oov_tweets
                          << " query tweets had no in-vocabulary token\n";
            print_component(res.subgraph.authors, res.subgraph.edges,
                            res.subgraph.average_weight);
        };
    });

    // eval ---------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "score labeled pairs, votes, or rank tweet pairs");
    auto labels_file = std::make_shared<std::string>();
    auto votes_csv = std::make_shared<std::string>();
    auto pair_authors = std::make_shared<std::vector<std::string>>();
    auto top_k = std::make_shared<std::size_t>(10);
    eval->add_option("--labels", *labels_file, "TSV of tweet_a<TAB>tweet_b<TAB>score rows");
    eval->add_option("--votes", *votes_csv, "comma-separated votes (0..3) to aggregate");
    eval->add_option("--pair-authors", *pair_authors,
                     "two author ids: rank their cross-author tweet pairs")
        ->expected(2);
    eval->add_option("--top", *top_k, "pairs to list with --pair-authors");
    eval->callback([&todo, &g, labels_file, votes_csv, pair_authors, top_k] {
        todo = [&g, labels_file, votes_csv, pair_authors, top_k] {
            bool did = false;
            if (!labels_file->empty()) {
                LabelFile labels = load_labels(*labels_file);
                ScoreCounts counts = count_scores(labels);
                std::cout << "pairs: " << counts.total() << '\n';
                for (int s = 0; s < 4; ++s)
                    std::cout << "  score " << s << ": "
                              << counts.counts[static_cast<std::size_t>(s)] << '\n';
                std::cout << "p_conceptual: " << dtos(p_conceptual(counts)) << '\n'
                          << "p_textual: " << dtos(p_textual(counts)) << '\n';
                did = true;
            }
            if (!votes_csv->empty()) {
                std::cout << "aggregated score: " << aggregate_votes(parse_votes(*votes_csv))
                          << '\n';
                did = true;
            }
            if (!pair_authors->empty()) {
                PipelineConfig cfg = make_config(g);
                ArtifactStore store(cfg.artifacts);
                ensure_current(Stage::kIngest, cfg, store);
                MessageSet set = load_corpus_tsv(store.path("corpus.tsv"));
                std::vector<Message> a = author_messages(set, (*pair_authors)[0]);
                std::vector<Message> b = author_messages(set, (*pair_authors)[1]);
                std::vector<RankedPair> ranked = top_k_similar_pairs(a, b, *top_k);
                std::size_t rank = 1;
                for (const RankedPair& p : ranked)
                    std::cout << rank++ << '\t' << p.tweet_a << '\t' << p.tweet_b << '\t'
                              << dtos(p.similarity) << '\n';
                did = true;
            }
            if (!did)
                throw UsageError("eval needs --labels, --votes, or --pair-authors");
        };
    });

    // sweep --------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "re-evaluate one parameter over a grid");
    auto sweep_param = std::make_shared<std::string>();
    auto sweep_grid = std::make_shared<std::string>();
    auto sweep_out = std::make_shared<std::string>();
    sweep->add_option("--param", *sweep_param, "alpha | eps | k | zeta")->required();
    sweep->add_option("--grid", *sweep_grid, "comma-separated grid values")->required();
    sweep->add_option("--out", *sweep_out, "output TSV (default: <store>/sweep_<param>.tsv)");
    sweep->callback([&todo, &g, sweep_param, sweep_grid, sweep_out] {
        todo = [&g, sweep_param, sweep_grid, sweep_out] {
            PipelineConfig cfg = make_config(g);
            ArtifactStore store(cfg.artifacts);
            SweepTable table = run_sweep(cfg, store, *sweep_param, parse_grid(*sweep_grid));
            std::filesystem::path out =
                sweep_out->empty() ? store.path("sweep_" + *sweep_param + ".tsv")
                                   : std::filesystem::path(*sweep_out);
            save_sweep(table, out);
            for (const SweepRow& row : table.rows)
                std::cout << *sweep_param << '=' << dtos(row.param) << '\t' << row.metric
                          << '\t' << dtos(row.value) << '\n';
            std::cout << "wrote " << out.string() << '\n';
        };
    });

    // synth --------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a deterministic synthetic corpus");
    auto spec = std::make_shared<SynthSpec>();
    auto synth_out = std::make_shared<std::string>();
    auto synth_preset = std::make_shared<std::string>("none");
    auto synth_planted = std::make_shared<std::vector<std::string>>();
    auto planted_regime = std::make_shared<int>(0);
    synth->add_option("--out", *synth_out, "corpus file to write (JSONL)")->required();
    synth->add_option("--preset", *synth_preset,
                      "regimes: none | weekday-weekend | weekday-weekend-hours");
    synth->add_option("--communities", spec->communities, "planted author communities");
    synth->add_option("--authors", spec->authors_per_community, "authors per community");
    synth->add_option("--tweets", spec->tweets_per_author, "tweets per author");
    synth->add_option("--min-tokens", spec->min_tokens, "minimum tokens per tweet");
    synth->add_option("--max-tokens", spec->max_tokens, "maximum tokens per tweet");
    synth->add_option("--weeks", spec->weeks, "calendar span in weeks");
    synth->add_option("--seed", spec->seed, "generator seed");
    synth->add_option("--topic-terms", spec->topic_terms, "community topic pool size");
    synth->add_option("--shared-terms", spec->shared_terms, "shared background pool size");
    synth->add_option("--personal-terms", spec->personal_terms, "per-author salt pool size");
    synth->add_option("--planted", *synth_planted,
                      "two words made to co-occur only inside --planted-regime")
        ->expected(2);
    synth->add_option("--planted-regime", *planted_regime, "regime index for --planted");
    synth->callback([&todo, spec, synth_out, synth_preset, synth_planted, planted_regime] {
        todo = [spec, synth_out, synth_preset, synth_planted, planted_regime] {
            spec->regimes = synth_regimes_preset(*synth_preset);
            if (!synth_planted->empty())
                spec->planted =
                    PlantedPair{(*synth_planted)[0], (*synth_planted)[1], *planted_regime};
            SynthStats stats = generate_synthetic_corpus(*spec, *synth_out);
            std::cout << "wrote " << stats.messages << " messages to " << *synth_out << '\n';
            for (std::size_t j = 0; j < spec->regimes.size(); ++j) {
                std::cout << "  regime " << j << " (" << spec->regimes[j].name
                          << "): " << stats.regime_messages[j] << " messages";
                if (spec->planted)
                    std::cout << ", " << stats.planted_cooccur[j] << " planted co-occurrences";
                std::cout << '\n';
            }
        };
    });

    // report -------------------------------------------------------------
    auto* report = app.add_subcommand("report", "summarize the linked forest and matrices");
    auto min_nodes = std::make_shared<std::size_t>(5);
    auto top = std::make_shared<std::size_t>(5);
    auto out_dir = std::make_shared<std::string>();
    report->add_option("--min-nodes", *min_nodes, "smallest component worth listing");
    report->add_option("--top", *top, "heaviest components to list");
    report->add_option("--out-dir", *out_dir, "output directory (default: <store>/report)");
    report->callback([&todo, &g, min_nodes, top, out_dir] {
        todo = [&g, min_nodes, top, out_dir] {
            PipelineConfig cfg = make_config(g);
            ArtifactStore store(cfg.artifacts);
            ensure_current(Stage::kLink, cfg, store);
            std::filesystem::path dir =
                out_dir->empty() ? store.path("report") : std::filesystem::path(*out_dir);
            std::filesystem::create_directories(dir);

            SpanningForest forest = load_forest(store.path("forest.txt"));
            ForestReport rep = build_report(forest);
            std::string text = format_report(forest, rep, *min_nodes, *top);
            std::cout << text;
            std::ofstream txt(dir / "report.txt", std::ios::binary);
            txt << text;
            if (!txt) throw DataError("short write: " + (dir / "report.txt").string());
            save_component_tsv(rep, dir / "components.tsv");
            for (const char* kind : {"content", "concept", "total"}) {
                AuthorSimilarityMatrix m =
                    load_matrix(store.path("matrix_" + std::string(kind) + ".bin"));
                save_heatmap_tsv(m, dir / ("heatmap_" + std::string(kind) + ".tsv"));
            }
            std::cout << "report written to " << dir.string() << '\n';
        };
    });

    try {
        app.parse(argc, argv);
        if (todo) todo();
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
