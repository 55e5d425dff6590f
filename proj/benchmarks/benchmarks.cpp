// Microbenchmarks for the hot paths: the block-tridiagonal state solve
// (expected to scale linearly in the window length) and full window fits,
// cold versus warm-started slides.

#include <benchmark/benchmark.h>

#include <vector>

#include "vbsf/engine.hpp"
#include "vbsf/rng.hpp"
#include "vbsf/state_system.hpp"
#include "vbsf/synthetic.hpp"
#include "vbsf/updates.hpp"

namespace {

// Random SPD block-tridiagonal system with a stable coupling block.
vbsf::StateSystem make_system(int r, int t, std::uint64_t seed) {
  vbsf::Rng rng(seed);
  vbsf::StateSystem sys;
  sys.off = vbsf::MatrixXd::NullaryExpr(r, r, [&](Eigen::Index, Eigen::Index) {
    return 0.3 * rng.normal();
  });
  sys.diag.reserve(t);
  const double shift = 2.5 * sys.off.norm();
  for (int tau = 0; tau < t; ++tau) {
    vbsf::MatrixXd root = vbsf::MatrixXd::NullaryExpr(
        r, r, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
    sys.diag.push_back(root * root.transpose() +
                       shift * vbsf::MatrixXd::Identity(r, r));
  }
  sys.rhs = vbsf::MatrixXd::NullaryExpr(
      r, t, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  return sys;
}

void bm_state_solve(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  const int t = static_cast<int>(state.range(1));
  const vbsf::StateSystem sys = make_system(r, t, 42);
  for (auto _ : state) {
    vbsf::StateTrajectoryPosterior post = vbsf::solve_forward_backward(sys);
    benchmark::DoNotOptimize(post.means.data());
  }
  state.SetComplexityN(t);
}

vbsf::SyntheticData make_stream(int rows, int length, std::uint64_t seed) {
  vbsf::SyntheticSpec spec;
  spec.rows = rows;
  spec.length = length;
  spec.true_rank = 3;
  spec.observe_fraction = 0.7;
  spec.offset = 2.0;
  spec.seed = seed;
  return vbsf::generate_synthetic(spec);
}

void bm_fit_window(benchmark::State& state) {
  const int window = static_cast<int>(state.range(0));
  const vbsf::SyntheticData data = make_stream(20, window + 1, 7);
  vbsf::ModelConfig cfg;
  cfg.rank = 4;
  cfg.window = window;
  cfg.max_iters = 30;
  const vbsf::ObservationWindow win = data.observed.window(0, window + 1);
  for (auto _ : state) {
    vbsf::FilterState fitted = vbsf::fit_window(win, cfg);
    benchmark::DoNotOptimize(fitted.estimate.data());
  }
  state.SetComplexityN(window + 1);
}

// Cost of ingesting one new column: slide + warm refit, amortized per column.
void bm_slide(benchmark::State& state) {
  const int window = static_cast<int>(state.range(0));
  const vbsf::SyntheticData data = make_stream(20, window + 1 + 64, 11);
  vbsf::ModelConfig cfg;
  cfg.rank = 4;
  cfg.window = window;
  cfg.max_iters = 30;
  vbsf::FilterState fitted =
      vbsf::fit_window(data.observed.window(0, window + 1), cfg);
  int next = window + 1;
  for (auto _ : state) {
    if (next >= data.observed.cols()) {  // restart the stream, untimed
      state.PauseTiming();
      fitted = vbsf::fit_window(data.observed.window(0, window + 1), cfg);
      next = window + 1;
      state.ResumeTiming();
    }
    std::vector<bool> mask(data.observed.rows());
    for (int i = 0; i < data.observed.rows(); ++i) mask[i] = data.observed.mask(i, next);
    fitted = vbsf::slide(fitted, data.observed.values.col(next), mask);
    ++next;
    benchmark::DoNotOptimize(fitted.estimate.data());
  }
}

void bm_outlier_pass(benchmark::State& state) {
  const int window = static_cast<int>(state.range(0));
  vbsf::SyntheticSpec spec;
  spec.rows = 20;
  spec.length = window + 1;
  spec.true_rank = 3;
  spec.observe_fraction = 0.7;
  spec.offset = 2.0;
  spec.seed = 13;
  const vbsf::SyntheticData data = vbsf::generate_synthetic(spec);
  vbsf::ModelConfig cfg;
  cfg.rank = 4;
  cfg.window = window;
  cfg.max_iters = 30;
  cfg.robust = true;
  const vbsf::ObservationWindow win = data.observed.window(0, window + 1);
  for (auto _ : state) {
    vbsf::FilterState fitted = vbsf::fit_window(win, cfg);
    benchmark::DoNotOptimize(fitted.estimate.data());
  }
}

}  // namespace

BENCHMARK(bm_state_solve)
    ->ArgsProduct({{1, 4, 8}, {200, 500, 1000, 2000}})
    ->Complexity(benchmark::oN);
BENCHMARK(bm_fit_window)->Arg(23)->Arg(47)->Arg(95)->Complexity(benchmark::oN);
BENCHMARK(bm_slide)->Arg(23)->Arg(47);
BENCHMARK(bm_outlier_pass)->Arg(23)->Arg(47);

BENCHMARK_MAIN();
