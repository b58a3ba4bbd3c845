#include <benchmark/benchmark.h>

#include "calibeat/random.hpp"
#include "calibeat/rowcol.hpp"

namespace {

using namespace calibeat;

std::vector<std::vector<Point>> random_x(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<std::vector<Point>> x(rows);
  for (auto& row : x) {
    for (std::size_t j = 0; j < cols; ++j) row.push_back({rng.uniform(), rng.uniform()});
  }
  return x;
}

void BM_HullProjection(benchmark::State& state) {
  Rng rng(3);
  std::vector<Point> pts;
  for (long k = 0; k < state.range(0); ++k) pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  const Point z{2.0, -1.0, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(project_onto_hull(z, pts));
}
BENCHMARK(BM_HullProjection)->Arg(3)->Arg(6)->Arg(12);

void BM_Theorem15(benchmark::State& state) {
  Rng rng(4);
  const auto x = random_x(3, 3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(theorem15_check(x, static_cast<std::size_t>(state.range(0)), 1));
}
BENCHMARK(BM_Theorem15)->Arg(100)->Arg(1000);

}  // namespace
