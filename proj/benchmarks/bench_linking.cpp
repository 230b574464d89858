// Author linking costs: pairwise similarity matrices and spanning forests.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "authorlink/author_vectors.hpp"
#include "authorlink/common.hpp"
#include "authorlink/linking.hpp"

namespace {

using namespace authorlink;

LabeledVectors random_vectors(int n, int dim, std::uint64_t seed) {
    Rng rng(seed);
    LabeledVectors v;
    v.dim = dim;
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "a%03d", i);  // ids must sort lexicographically
        v.ids.push_back(id);
        std::vector<double> row(static_cast<std::size_t>(dim));
        for (double& x : row) x = rng.range(-1.0, 1.0);
        v.rows.push_back(std::move(row));
    }
    return v;
}

void BM_SimilarityMatrix(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const LabeledVectors vectors = random_vectors(n, 128, 41);
    for (auto _ : state) {
        AuthorSimilarityMatrix m = similarity_matrix(vectors, "content", SimilarityMetric::kCosine, 1);
        benchmark::DoNotOptimize(m.data.data());
    }
    state.SetItemsProcessed(state.iterations() * n * (n - 1) / 2);
}
BENCHMARK(BM_SimilarityMatrix)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SwMstKruskal(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const LabeledVectors vectors = random_vectors(n, 32, 53);
    const AuthorSimilarityMatrix m = similarity_matrix(vectors, "total", SimilarityMetric::kCosine, 1);
    const AuthorGraph g = build_graph(m);  // complete graph
    for (auto _ : state) {
        SpanningForest f = sw_mst(g, LinkMode::kKruskal);
        benchmark::DoNotOptimize(f.edges.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.edges.size()));
}
BENCHMARK(BM_SwMstKruskal)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SwMstLiteralTopK(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const LabeledVectors vectors = random_vectors(n, 32, 67);
    const AuthorSimilarityMatrix m = similarity_matrix(vectors, "total", SimilarityMetric::kCosine, 1);
    const AuthorGraph g = build_graph(m, 5);  // per-node top-5 edges
    for (auto _ : state) {
        SpanningForest f = sw_mst(g, LinkMode::kLiteral);
        benchmark::DoNotOptimize(f.edges.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.edges.size()));
}
BENCHMARK(BM_SwMstLiteralTopK)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
