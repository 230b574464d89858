// Slab discovery costs: split profiles, linkage clustering, full hierarchy.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "authorlink/common.hpp"
#include "authorlink/corpus.hpp"
#include "authorlink/slabs.hpp"

namespace {

using namespace authorlink;

MessageSet profile_corpus(int messages, std::uint64_t seed) {
    Rng rng(seed);
    const std::int64_t monday = 1614556800;  // Monday 2021-03-01 00:00 UTC
    std::vector<Message> msgs;
    msgs.reserve(static_cast<std::size_t>(messages));
    for (int i = 0; i < messages; ++i) {
        Message m;
        m.id = "t" + std::to_string(i);
        m.author_id = "u" + std::to_string(i % 24);
        m.timestamp = monday + (i % (28 * 24)) * 3600 + i % 60;
        // a weekday/weekend scent on top of a shared pool, so the day facet
        // has real structure to cluster
        const int day = (i / 24) % 7;
        const char* side = day >= 5 ? "we" : "wd";
        for (int k = 0; k < 6; ++k) m.tokens.push_back("w" + std::to_string(rng.index(300)));
        for (int k = 0; k < 4; ++k) m.tokens.push_back(side + std::to_string(rng.index(60)));
        msgs.push_back(std::move(m));
    }
    return MessageSet(std::move(msgs));
}

void BM_SplitProfiles(benchmark::State& state) {
    const MessageSet set = profile_corpus(static_cast<int>(state.range(0)), 21);
    const Vocabulary vocab = Vocabulary::build(set, 1);
    const TemporalFacet facet{"hour", 24, 0.989, std::nullopt};
    for (auto _ : state) {
        SplitProfiles profiles = build_split_profiles(set, vocab, facet, 0);
        benchmark::DoNotOptimize(profiles.weights.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.size()));
}
BENCHMARK(BM_SplitProfiles)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_HacCompleteLinkage(benchmark::State& state) {
    // synthetic grid: two planted blocks with high internal similarity
    const int n = static_cast<int>(state.range(0));
    Rng rng(9);
    SimilarityGrid grid;
    grid.n = n;
    grid.data.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const bool same = (i < n / 2) == (j < n / 2);
            const double s = i == j ? 1.0 : (same ? 0.8 : 0.3) + rng.range(-0.05, 0.05);
            grid.at(i, j) = s;
            grid.at(j, i) = s;
        }
    for (auto _ : state) {
        auto clusters = hac_complete_linkage(grid, 0.6);
        benchmark::DoNotOptimize(clusters.size());
    }
}
BENCHMARK(BM_HacCompleteLinkage)->Arg(24)->Arg(96)->Unit(benchmark::kMicrosecond);

void BM_BuildSlabHierarchy(benchmark::State& state) {
    const MessageSet set = profile_corpus(static_cast<int>(state.range(0)), 33);
    const Vocabulary vocab = Vocabulary::build(set, 1);
    const std::vector<TemporalFacet> facets = {{"day", 7, 0.59, std::nullopt},
                                               {"hour", 24, 0.989, "day"}};
    for (auto _ : state) {
        SlabHierarchy h = build_slab_hierarchy(set, vocab, facets, 0);
        benchmark::DoNotOptimize(h.contexts.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.size()));
}
BENCHMARK(BM_BuildSlabHierarchy)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace
