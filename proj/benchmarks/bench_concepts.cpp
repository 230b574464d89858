// Clustering costs on blob data: density expansion and medoid refinement.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "authorlink/common.hpp"
#include "authorlink/concepts.hpp"

namespace {

using namespace authorlink;

// `blobs` gaussian-ish clusters plus 5% uniform noise in [0,1]^dim.
std::vector<std::vector<double>> blob_points(int n, int dim, int blobs, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> centers;
    for (int b = 0; b < blobs; ++b) {
        std::vector<double> c(static_cast<std::size_t>(dim));
        for (double& v : c) v = rng.range(0.2, 0.8);
        centers.push_back(std::move(c));
    }
    std::vector<std::vector<double>> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<double> p(static_cast<std::size_t>(dim));
        if (i % 20 == 19) {
            for (double& v : p) v = rng.range(0.0, 1.0);
        } else {
            const auto& c = centers[static_cast<std::size_t>(i % blobs)];
            for (int d = 0; d < dim; ++d) p[static_cast<std::size_t>(d)] = c[static_cast<std::size_t>(d)] + rng.range(-0.05, 0.05);
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

void BM_Dbscan(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto pts = blob_points(n, 8, 4, 17);
    for (auto _ : state) {
        ConceptModel m = dbscan(pts, 0.12, 4);
        benchmark::DoNotOptimize(m.assignment.size());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Dbscan)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Kmedoids(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto pts = blob_points(n, 8, 4, 29);
    for (auto _ : state) {
        ConceptModel m = kmedoids(pts, 4, 7, 2, nullptr);
        benchmark::DoNotOptimize(m.assignment.size());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Kmedoids)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
