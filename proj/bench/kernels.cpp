#include <benchmark/benchmark.h>

#include <random>

#include "eitcool/cooling.hpp"
#include "eitcool/lindblad.hpp"
#include "eitcool/spectrum.hpp"
#include "eitcool/units.hpp"

using namespace eitcool;
using units::mhz;

namespace {

atom4::EitParams operating_point() {
  atom4::EitParams p;
  p.gamma = mhz(21);
  p.delta_B = mhz(4.6);
  p.delta_p = mhz(55.6);
  p.delta_d = mhz(51.07);
  p.omega_sigma_minus = mhz(16.74);
  p.omega_sigma_plus = mhz(18.03);
  p.omega_pi = mhz(6.67);
  return p;
}

lindblad::LindbladSystem cooling_system(int n_max) {
  const auto m = cooling::MotionalMode::from_physical(
      mhz(2.38), units::kYb171MassAmu * units::kAmu, units::kYbCoolingWavelengthNm * 1e-9, n_max);
  return cooling::cooling_system(operating_point(), m, 670.0);
}

ComplexMatrix thermal_rho(const lindblad::LindbladSystem& sys) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  const int d = sys.dim();
  ComplexMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  ComplexMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

void BM_RhsReference(benchmark::State& state) {
  const auto sys = cooling_system(static_cast<int>(state.range(0)));
  const ComplexMatrix rho = thermal_rho(sys);
  for (auto _ : state) benchmark::DoNotOptimize(lindblad::rhs_reference(sys, rho));
}

void generator(benchmark::State& state, lindblad::Exec exec) {
  const auto sys = cooling_system(static_cast<int>(state.range(0)));
  const ComplexMatrix rho = thermal_rho(sys);
  const lindblad::Generator gen(sys, exec);
  ComplexMatrix out(sys.dim(), sys.dim());
  for (auto _ : state) {
    gen.apply(rho, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["dense_products"] = gen.dense_products();
}

void BM_GeneratorSerial(benchmark::State& state) { generator(state, lindblad::Exec::kSerial); }
void BM_GeneratorParallel(benchmark::State& state) { generator(state, lindblad::Exec::kParallel); }

void spectrum_sweep(benchmark::State& state, lindblad::Exec exec) {
  const auto grid = spectrum::linear_grid(mhz(30), mhz(80), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectrum::absorption_numeric(operating_point(), grid, exec));
}

void BM_SpectrumSerial(benchmark::State& state) { spectrum_sweep(state, lindblad::Exec::kSerial); }
void BM_SpectrumParallel(benchmark::State& state) { spectrum_sweep(state, lindblad::Exec::kParallel); }

}  // namespace

BENCHMARK(BM_RhsReference)->Arg(10)->Arg(25)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GeneratorSerial)->Arg(10)->Arg(25)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GeneratorParallel)->Arg(10)->Arg(25)->Arg(40)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SpectrumSerial)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpectrumParallel)->Arg(400)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
