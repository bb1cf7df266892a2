// Serial reference vs OpenMP paths of the oracle grid kernels, a full split
// step run and a trajectory bundle. Run with OMP_NUM_THREADS to vary threads.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qmoment/dynamics.hpp"
#include "qmoment/fft.hpp"
#include "qmoment/oracle.hpp"
#include "qmoment/oracle_kernels.hpp"

using namespace qmoment;
using oracle::cplx;
using oracle::Exec;

namespace {

std::vector<cplx> random_vector(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& z : v) z = {u(rng), u(rng)};
  return v;
}

// propagator phases; repeated products stay normal
std::vector<cplx> unit_phases(std::size_t n) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.14159, 3.14159);
  std::vector<cplx> v(n);
  for (auto& z : v) z = std::polar(1.0, u(rng));
  return v;
}

std::vector<double> grid_line(std::size_t n) {
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = -20.0 + 40.0 * static_cast<double>(i) / static_cast<double>(n);
  return q;
}

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::Parallel : Exec::Serial; }

void BM_Multiply(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  auto psi = random_vector(n);
  const auto phase = unit_phases(n);
  for (auto _ : s) {
    oracle::multiply(psi.data(), phase.data(), n, exec_of(s));
    benchmark::DoNotOptimize(psi.data());
  }
  s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_MultiplyDrive(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  auto psi = random_vector(n);
  const auto base = unit_phases(n);
  const auto x = grid_line(n);
  for (auto _ : s) {
    oracle::multiply_drive(psi.data(), base.data(), x.data(), 1e-4, n, exec_of(s));
    benchmark::DoNotOptimize(psi.data());
  }
  s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_MomentSums(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  const auto psi = random_vector(n);
  const auto q = grid_line(n);
  for (auto _ : s) benchmark::DoNotOptimize(oracle::moment_sums(psi.data(), q.data(), 0.1, n, exec_of(s)));
  s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_Fft(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  const Fft fft(n);
  auto data = random_vector(n);
  for (auto _ : s) {
    fft.forward(data.data());
    fft.inverse(data.data());
    benchmark::DoNotOptimize(data.data());
  }
}

void BM_Evolve(benchmark::State& s) {
  const oracle::Grid grid{-20, 20, static_cast<std::size_t>(s.range(0))};
  const auto psi0 = oracle::gaussian_state(grid, GaussianPacket(0.1, 0.87358));
  const PolynomialPotential quartic(0.0, 0.25);
  oracle::OracleControl c;
  c.exec = exec_of(s);
  for (auto _ : s) benchmark::DoNotOptimize(oracle::evolve(psi0, quartic, 1.0, c).steps);
}

void BM_Bundle(benchmark::State& s) {
  const auto sys = assemble_system(Scenario(ScenarioKind::DrivenDoubleWell, 1, 1, 0, 1, 0.1, 1), ClosureRule::gaussian());
  std::vector<MomentState> starts;
  for (int i = 0; i < 8; ++i) starts.push_back({0.0011 + 1e-4 * i, 0.0, 0.25, 0.0, 0.0, 0.0});
  for (auto _ : s) {
    if (s.range(1)) {
      benchmark::DoNotOptimize(integrate_many(sys, starts, 50.0).size());
    } else {
      for (const auto& st : starts) benchmark::DoNotOptimize(integrate(sys, st, 50.0).size());
    }
  }
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {1L << 11, 1L << 14, 1L << 17})
    for (long par : {0L, 1L}) b->Args({n, par});
  b->ArgNames({"n", "omp"});
}

}  // namespace

BENCHMARK(BM_Multiply)->Apply(sizes);
BENCHMARK(BM_MultiplyDrive)->Apply(sizes);
BENCHMARK(BM_MomentSums)->Apply(sizes);
BENCHMARK(BM_Fft)->Arg(1 << 11)->Arg(1 << 14);
BENCHMARK(BM_Evolve)->Args({2048, 0})->Args({2048, 1})->ArgNames({"n", "omp"})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bundle)->Args({8, 0})->Args({8, 1})->ArgNames({"runs", "omp"})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
