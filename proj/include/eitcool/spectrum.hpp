#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "eitcool/atom4.hpp"
#include "eitcool/lindblad.hpp"

// Probe absorption of the four-level system versus probe detuning.
namespace eitcool::spectrum {

struct SpectrumResult {
  std::vector<double> detunings;  // probe detuning grid, rad/s
  std::vector<double> values;     // analytic W (arb. units) or numeric rho_ee
  std::array<double, 2> nulls{};  // dark resonances {delta_sigma_plus, delta_sigma_minus}
  std::array<double, 3> peaks{};  // bright resonances, ascending
  // Numeric branch only: points whose steady-state solve threw. Their value is NaN.
  std::vector<bool> failed;

  int failed_count() const;
};

/// Unnormalized scattered intensity from the effective-Hamiltonian amplitude.
double absorption_w(const atom4::EitParams& p, double delta_pi);

SpectrumResult absorption_analytic(const atom4::EitParams& p, const std::vector<double>& grid);

/// Excited population of the master-equation steady state with the probe
/// detuning set to each grid value. Grid points run concurrently for kParallel.
SpectrumResult absorption_numeric(const atom4::EitParams& p, const std::vector<double>& grid,
                                  lindblad::Exec exec = lindblad::Exec::kParallel);

struct BrightResonances {
  std::vector<double> roots;  // ascending; three unless the cubic degenerates
  bool complete = true;       // false when fewer than three distinct real roots exist
  int cooling_index = -1;     // root nearest delta_sigma_plus (the narrow peak)
};

BrightResonances bright_resonances(const atom4::EitParams& p);

/// Carrier at the dark resonance nearest the configured probe detuning. The
/// red sideband (n -> n-1) is absorbed at carrier + nu in probe detuning.
struct SidebandMarkers {
  double carrier = 0;
  double red = 0;
  double blue = 0;
};

SidebandMarkers sideband_markers(const atom4::EitParams& p, double nu);

/// s minimizing |s*analytic - numeric|_2 over points that did not fail.
double fit_scale(const SpectrumResult& analytic, const SpectrumResult& numeric);

/// |s*analytic - numeric|_2 / |numeric|_2 with the fitted s.
double relative_deviation(const SpectrumResult& analytic, const SpectrumResult& numeric);

double correlation(const SpectrumResult& analytic, const SpectrumResult& numeric);

std::vector<double> linear_grid(double lo, double hi, int points);

/// Header `delta_pi_MHz,W_analytic,rho_ee_numeric`; a failed numeric point is written as `nan`.
void write_csv(std::ostream& out, const SpectrumResult& analytic, const SpectrumResult& numeric);

}  // namespace eitcool::spectrum
