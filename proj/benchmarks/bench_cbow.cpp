// Embedding training throughput: single-window gradients and full slab runs.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "authorlink/cbow.hpp"
#include "authorlink/collective.hpp"
#include "authorlink/common.hpp"
#include "authorlink/corpus.hpp"
#include "authorlink/slabs.hpp"

namespace {

using namespace authorlink;

// Hourly messages over four weeks from a small author pool; token ids are
// drawn uniformly so vocabulary size stays fixed as the corpus grows.
MessageSet bench_corpus(int messages, std::uint64_t seed) {
    Rng rng(seed);
    const std::int64_t monday = 1614556800;  // Monday 2021-03-01 00:00 UTC
    std::vector<Message> msgs;
    msgs.reserve(static_cast<std::size_t>(messages));
    for (int i = 0; i < messages; ++i) {
        Message m;
        m.id = "t" + std::to_string(i);
        m.author_id = "u" + std::to_string(i % 16);
        m.timestamp = monday + (i % (28 * 24)) * 3600 + i % 60;
        const int len = 8 + static_cast<int>(rng.index(5));
        for (int k = 0; k < len; ++k) m.tokens.push_back("w" + std::to_string(rng.index(400)));
        msgs.push_back(std::move(m));
    }
    return MessageSet(std::move(msgs));
}

void BM_WindowGradients(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    std::vector<std::string> terms;
    terms.reserve(200);
    for (int i = 0; i < 200; ++i) terms.push_back("w" + std::to_string(i));
    const SlabEmbedding m = init_embedding("bench", terms, dim, 3, 7);
    Rng rng(11);
    std::vector<std::vector<int>> sentences(32);
    for (auto& s : sentences)
        for (int k = 0; k < 10; ++k) s.push_back(static_cast<int>(rng.index(200)));
    const std::vector<Window> windows = enumerate_windows(sentences, 3);
    std::vector<double> grad_input, grad_output;
    std::size_t at = 0;
    for (auto _ : state) {
        const Window& w = windows[at++ % windows.size()];
        window_gradients(m, w.context, w.center, grad_input, grad_output);
        benchmark::DoNotOptimize(grad_input.data());
        benchmark::DoNotOptimize(grad_output.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_WindowGradients)->Arg(32)->Arg(128);

void BM_TrainAllSlabs(benchmark::State& state) {
    const MessageSet set = bench_corpus(static_cast<int>(state.range(0)), 3);
    const Vocabulary vocab = Vocabulary::build(set, 1);
    const SlabHierarchy h =
        build_slab_hierarchy(set, vocab, {{"day", 7, 0.59, std::nullopt}}, 0);
    TrainParams tp;
    tp.dim = 32;
    tp.window = 3;
    tp.epochs = 1;
    tp.seed = 5;
    for (auto _ : state) {
        TrainedSlabs trained = train_all_slabs(set, h, vocab, tp, nullptr, 1);
        benchmark::DoNotOptimize(trained.by_context.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.size()));
}
BENCHMARK(BM_TrainAllSlabs)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
