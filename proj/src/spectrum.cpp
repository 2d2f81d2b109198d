#include "eitcool/spectrum.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "eitcool/errors.hpp"
#include "eitcool/units.hpp"

namespace eitcool::spectrum {

int SpectrumResult::failed_count() const {
  int n = 0;
  for (bool f : failed) n += f ? 1 : 0;
  return n;
}

double absorption_w(const atom4::EitParams& p, double delta_pi) {
  const double a = delta_pi - p.delta_sigma_minus();
  const double b = delta_pi - p.delta_sigma_plus();
  const double om2 = p.omega_sigma_minus * p.omega_sigma_minus;
  const double op2 = p.omega_sigma_plus * p.omega_sigma_plus;
  const double ab = a * b;
  const double bracket = 4.0 * delta_pi * ab - b * om2 - a * op2;
  const double z = 4.0 * p.gamma * p.gamma * ab * ab + bracket * bracket;
  if (z == 0.0) return 0.0;
  return 16.0 * ab * ab / z;
}

namespace {

void fill_resonances(const atom4::EitParams& p, SpectrumResult& r) {
  r.nulls = {p.delta_sigma_plus(), p.delta_sigma_minus()};
  const auto br = bright_resonances(p);
  for (std::size_t i = 0; i < 3; ++i) {
    r.peaks[i] = i < br.roots.size() ? br.roots[i] : std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

SpectrumResult absorption_analytic(const atom4::EitParams& p, const std::vector<double>& grid) {
  p.validate();
  SpectrumResult r;
  r.detunings = grid;
  r.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) r.values[i] = absorption_w(p, grid[i]);
  fill_resonances(p, r);
  return r;
}

SpectrumResult absorption_numeric(const atom4::EitParams& p, const std::vector<double>& grid,
                                  lindblad::Exec exec) {
  p.validate();
  if (!(p.omega_pi > 0.0)) throw ContractViolation("absorption_numeric: omega_pi must be > 0");
  SpectrumResult r;
  r.detunings = grid;
  r.values.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<char> failed(grid.size(), 0);
  const auto c = atom4::collapse_ops(p);
  const long n = static_cast<long>(grid.size());

#pragma omp parallel for schedule(dynamic) if (exec == lindblad::Exec::kParallel)
  for (long i = 0; i < n; ++i) {
    atom4::EitParams q = p;
    q.delta_p = grid[i];
    const lindblad::LindbladSystem sys{atom4::hamiltonian_rest(q), {c.begin(), c.end()},
                                       ops::HilbertSpace{{atom4::kDim}}};
    try {
      const auto ss = lindblad::steadystate(sys);
      r.values[i] = ss.rho.matrix(atom4::kE, atom4::kE).real();
    } catch (const Error&) {
      failed[i] = 1;
    }
  }
  r.failed.assign(failed.begin(), failed.end());
  fill_resonances(p, r);
  return r;
}

BrightResonances bright_resonances(const atom4::EitParams& p) {
  if (p.omega_sigma_plus == 0.0 && p.omega_sigma_minus == 0.0) {
    throw ContractViolation("bright_resonances: both drive Rabi frequencies are zero");
  }
  const auto c = atom4::bright_cubic(p);
  BrightResonances out;
  out.roots = numerics::solve_cubic_real(c[0], c[1], c[2], c[3]);
  out.complete = out.roots.size() == 3;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.roots.size(); ++i) {
    const double d = std::abs(out.roots[i] - p.delta_sigma_plus());
    if (d < best) {
      best = d;
      out.cooling_index = static_cast<int>(i);
    }
  }
  return out;
}

SidebandMarkers sideband_markers(const atom4::EitParams& p, double nu) {
  const double dp = p.delta_sigma_plus(), dm = p.delta_sigma_minus();
  SidebandMarkers m;
  m.carrier = std::abs(p.delta_p - dp) <= std::abs(p.delta_p - dm) ? dp : dm;
  m.red = m.carrier + nu;
  m.blue = m.carrier - nu;
  return m;
}

namespace {

void check_pair(const SpectrumResult& a, const SpectrumResult& b) {
  if (a.values.size() != b.values.size()) {
    throw ContractViolation("spectrum: analytic and numeric grids differ in length");
  }
}

bool usable(const SpectrumResult& a, const SpectrumResult& b, std::size_t i) {
  return std::isfinite(a.values[i]) && std::isfinite(b.values[i]);
}

}  // namespace

double fit_scale(const SpectrumResult& analytic, const SpectrumResult& numeric) {
  check_pair(analytic, numeric);
  double ww = 0.0, wn = 0.0;
  for (std::size_t i = 0; i < analytic.values.size(); ++i) {
    if (!usable(analytic, numeric, i)) continue;
    ww += analytic.values[i] * analytic.values[i];
    wn += analytic.values[i] * numeric.values[i];
  }
  if (ww == 0.0) throw NumericalError("fit_scale: analytic spectrum is identically zero");
  return wn / ww;
}

double relative_deviation(const SpectrumResult& analytic, const SpectrumResult& numeric) {
  const double s = fit_scale(analytic, numeric);
  double dev = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < analytic.values.size(); ++i) {
    if (!usable(analytic, numeric, i)) continue;
    const double d = s * analytic.values[i] - numeric.values[i];
    dev += d * d;
    ref += numeric.values[i] * numeric.values[i];
  }
  return std::sqrt(dev / ref);
}

double correlation(const SpectrumResult& analytic, const SpectrumResult& numeric) {
  check_pair(analytic, numeric);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < analytic.values.size(); ++i) {
    if (!usable(analytic, numeric, i)) continue;
    const double x = analytic.values[i], y = numeric.values[i];
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
    ++n;
  }
  const double cov = sxy - sx * sy / n;
  return cov / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 2) throw ContractViolation("linear_grid: need at least 2 points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
  return g;
}

void write_csv(std::ostream& out, const SpectrumResult& analytic, const SpectrumResult& numeric) {
  check_pair(analytic, numeric);
  out << "delta_pi_MHz,W_analytic,rho_ee_numeric\n";
  out.precision(12);
  for (std::size_t i = 0; i < analytic.values.size(); ++i) {
    out << units::to_mhz(analytic.detunings[i]) << ',' << analytic.values[i] << ',';
    if (std::isfinite(numeric.values[i])) {
      out << numeric.values[i];
    } else {
      out << "nan";
    }
    out << '\n';
  }
}

}  // namespace eitcool::spectrum
