#include "eitcool/thermometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "eitcool/errors.hpp"
#include "eitcool/units.hpp"

namespace eitcool::thermometry {

void SidebandParams::validate() const {
  if (rabi.empty()) throw ContractViolation("SidebandParams: no spins");
  if (static_cast<long>(mode.b.size()) != n_spins()) {
    throw ContractViolation("SidebandParams: participation vector and rabi differ in length");
  }
  for (double r : rabi) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ContractViolation("SidebandParams: rabi must be >= 0");
  }
  if (!(mode.nu > 0.0)) throw ContractViolation("SidebandParams: mode frequency must be > 0");
  if (!(mode.eta > 0.0) || !std::isfinite(mode.eta)) {
    throw ContractViolation("SidebandParams: eta must be > 0");
  }
  if (mode.n_max < 0) throw ContractViolation("SidebandParams: n_max must be >= 0");
  if (mu_R != 0.0 && std::abs(std::abs(mu_R) - mode.nu) > 0.5 * mode.nu) {
    throw ContractViolation("SidebandParams: |mu_R| is not within the sideband of the mode");
  }
}

cooling::MotionalMode crystal_mode(const crystal::ModeDecomposition& modes, int m,
                                   double mass_kg, double k_mag, int n_max) {
  if (m < 0 || m >= modes.frequencies.size()) throw OutOfRangeError("crystal_mode: no such mode");
  cooling::MotionalMode out;
  out.nu = modes.frequencies[m];
  out.mass = mass_kg;
  out.k_mag = k_mag;
  out.eta = cooling::lamb_dicke(k_mag, mass_kg, out.nu);
  out.n_max = n_max;
  out.b = modes.b.col(m);
  return out;
}

double coupling(const SidebandParams& p, int j) { return p.mode.eta * p.mode.b[j] * p.rabi[j]; }

double pi_time(const SidebandParams& p) {
  p.validate();
  double sum = 0;
  for (int j = 0; j < p.n_spins(); ++j) sum += coupling(p, j) * coupling(p, j);
  if (!(sum > 0.0)) throw ContractViolation("pi_time: every sideband coupling is zero");
  return units::kPi / std::sqrt(sum);
}

namespace {

// Residual detuning from the chosen sideband resonance.
double sideband_detuning(const SidebandParams& p, Side side) {
  if (p.mu_R == 0.0) return 0.0;
  const double target = side == Side::kBlue ? p.mode.nu : -p.mode.nu;
  if ((p.mu_R > 0) != (target > 0)) {
    throw ContractViolation("SidebandParams: mu_R has the sign of the other sideband");
  }
  return p.mu_R - target;
}

bool use_symmetric(const SidebandParams& p) {
  const int n = p.n_spins();
  bool symmetric = p.basis == SpinBasis::kSymmetric ||
                   (p.basis == SpinBasis::kAuto && n > kMaxDenseSpins);
  if (!symmetric) {
    if (n > 30 || (1L << n) * (p.mode.n_max + 1) > kMaxDenseStates) {
      throw CapacityError("sideband: " + std::to_string(n) + " spins exceed the dense state "
                          "limit; use the symmetric (COM) basis");
    }
    return false;
  }
  const double g0 = coupling(p, 0);
  for (int j = 1; j < n; ++j) {
    if (std::abs(coupling(p, j) - g0) > 1e-12 * std::abs(g0)) {
      throw CapacityError("sideband: symmetric basis needs equal couplings (COM mode); " +
                          std::to_string(n) + " spins are too many for the dense basis");
    }
  }
  return true;
}

struct BlockMatrix {
  ComplexMatrix h;
  RealVector up_fraction;
  int initial = 0;
};

BlockMatrix dense_block(const SidebandParams& p, Side side, int n, double delta) {
  const int ns = p.n_spins();
  const bool blue = side == Side::kBlue;
  std::vector<int> index(std::size_t(1) << ns, -1);
  std::vector<unsigned> states;
  for (unsigned s = 0; s < (1u << ns); ++s) {
    if (blue || std::popcount(s) <= n) {
      index[s] = static_cast<int>(states.size());
      states.push_back(s);
    }
  }
  BlockMatrix out;
  const int dim = static_cast<int>(states.size());
  out.h = ComplexMatrix::Zero(dim, dim);
  out.up_fraction.resize(dim);
  for (int a = 0; a < dim; ++a) {
    const unsigned s = states[a];
    const int k = std::popcount(s);
    out.up_fraction[a] = double(k) / ns;
    out.h(a, a) = -delta * k;
    const int phonons = blue ? n + k : n - k;
    const double amp = blue ? std::sqrt(phonons + 1.0) : std::sqrt(double(phonons));
    for (int j = 0; j < ns; ++j) {
      if (s & (1u << j)) continue;
      const int b = index[s | (1u << j)];
      if (b < 0) continue;
      const double v = 0.5 * coupling(p, j) * amp;
      out.h(b, a) = v;
      out.h(a, b) = v;
    }
  }
  out.initial = index[0];
  return out;
}

BlockMatrix symmetric_block(const SidebandParams& p, Side side, int n, double delta) {
  const int ns = p.n_spins();
  const bool blue = side == Side::kBlue;
  const int top = blue ? ns : std::min(ns, n);
  const double g = coupling(p, 0);
  BlockMatrix out;
  out.h = ComplexMatrix::Zero(top + 1, top + 1);
  out.up_fraction.resize(top + 1);
  for (int k = 0; k <= top; ++k) {
    out.up_fraction[k] = double(k) / ns;
    out.h(k, k) = -delta * k;
    if (k == top) continue;
    const int phonons = blue ? n + k : n - k;
    const double amp = blue ? std::sqrt(phonons + 1.0) : std::sqrt(double(phonons));
    const double v = 0.5 * g * std::sqrt(double(k + 1) * (ns - k)) * amp;
    out.h(k + 1, k) = v;
    out.h(k, k + 1) = v;
  }
  return out;
}

}  // namespace

ComplexMatrix sideband_hamiltonian(const SidebandParams& p, Side side, int n_cut) {
  p.validate();
  const int ns = p.n_spins();
  if (ns > 12) throw CapacityError("sideband_hamiltonian: too many spins for the full matrix");
  if (n_cut < 0) throw ContractViolation("sideband_hamiltonian: n_cut must be >= 0");
  const double delta = sideband_detuning(p, side);
  const int nm = n_cut + 1;
  const int dim = (1 << ns) * nm;
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (unsigned s = 0; s < (1u << ns); ++s) {
    const int k = std::popcount(s);
    for (int m = 0; m < nm; ++m) {
      const int a = int(s) * nm + m;
      h(a, a) = -delta * k;
      const int m2 = side == Side::kBlue ? m + 1 : m - 1;
      if (m2 < 0 || m2 >= nm) continue;
      const double amp = side == Side::kBlue ? std::sqrt(m + 1.0) : std::sqrt(double(m));
      for (int j = 0; j < ns; ++j) {
        if (s & (1u << j)) continue;
        const int b = int(s | (1u << j)) * nm + m2;
        h(b, a) = 0.5 * coupling(p, j) * amp;
        h(a, b) = h(b, a);
      }
    }
  }
  return h;
}

SidebandModel::SidebandModel(const SidebandParams& p, Side side) {
  p.validate();
  const double delta = sideband_detuning(p, side);
  const bool symmetric = use_symmetric(p);
  const int n_rows = p.mode.n_max + 1;
  blocks_.resize(n_rows);
#pragma omp parallel for schedule(dynamic)
  for (int n = 0; n < n_rows; ++n) {
    const BlockMatrix bm =
        symmetric ? symmetric_block(p, side, n, delta) : dense_block(p, side, n, delta);
    const auto eig = numerics::eig_hermitian(bm.h);
    Block& b = blocks_[n];
    b.energies = eig.values;
    b.vectors = eig.vectors;
    b.weights = eig.vectors.row(bm.initial).adjoint();
    b.up_fraction = bm.up_fraction;
  }
}

double SidebandModel::population(double t, int n) const {
  if (n < 0 || n > n_max()) throw OutOfRangeError("SidebandModel: Fock index outside the table");
  const Block& b = blocks_[n];
  ComplexVector c(b.energies.size());
  for (int e = 0; e < c.size(); ++e) c[e] = std::polar(1.0, -b.energies[e] * t) * b.weights[e];
  const ComplexVector amp = b.vectors * c;
  return amp.cwiseAbs2().dot(b.up_fraction);
}

RealMatrix SidebandModel::table(std::span<const double> times) const {
  RealMatrix out(n_max() + 1, static_cast<Eigen::Index>(times.size()));
#pragma omp parallel for schedule(static)
  for (int n = 0; n <= n_max(); ++n) {
    for (std::size_t i = 0; i < times.size(); ++i) out(n, i) = population(times[i], n);
  }
  return out;
}

double sideband_populations(const SidebandParams& p, Side side, double t, int n) {
  SidebandParams q = p;
  q.mode.n_max = n;
  return SidebandModel(q, side).population(t, n);
}

namespace {

// Truncated thermal distribution over 0..n_max and the weight beyond it.
RealVector thermal_weights(double nbar, int n_max, double& tail) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw ContractViolation("thermal: nbar must be >= 0");
  RealVector w(n_max + 1);
  const double q = nbar / (nbar + 1.0);
  w[0] = 1.0 / (nbar + 1.0);
  for (int n = 1; n <= n_max; ++n) w[n] = w[n - 1] * q;
  tail = std::pow(q, n_max + 1);
  return w / w.sum();
}

}  // namespace

ThermalTrace thermal_average(const RealMatrix& table, double nbar) {
  if (table.rows() == 0) throw ContractViolation("thermal_average: empty table");
  ThermalTrace out;
  const RealVector w = thermal_weights(nbar, static_cast<int>(table.rows()) - 1, out.tail);
  out.truncation_warning = out.tail > kThermalTailLimit;
  const RealVector avg = table.transpose() * w;
  out.p_up.assign(avg.data(), avg.data() + avg.size());
  return out;
}

TraceFit fit_nbar_trace(std::span<const numerics::DataPoint> data, const SidebandParams& p,
                        double nbar_guess) {
  p.validate();
  if (data.size() < 3) throw ContractViolation("fit_nbar_trace: need at least 3 points");
  double t_last = 0;
  for (const auto& d : data) {
    if (!(d.sigma > 0.0)) throw ContractViolation("fit_nbar_trace: data sigma must be > 0");
    t_last = std::max(t_last, d.x);
  }
  if (t_last < pi_time(p)) {
    throw ContractViolation("fit_nbar_trace: data must span at least one sideband pi time");
  }
  const bool detuned = sideband_detuning(p, Side::kBlue) != 0.0;
  const SidebandModel base(p, Side::kBlue);

  auto residuals = [&](const RealVector& x) {
    // wild LM trial steps stay inside the model's domain
    const double nbar = std::exp(std::clamp(x[0], -30.0, std::log(1e4)));
    const double scale = std::abs(x[1]);
    std::vector<double> times;
    times.reserve(data.size());
    for (const auto& d : data) times.push_back(detuned ? d.x : d.x * scale);
    RealMatrix table;
    if (detuned) {
      SidebandParams q = p;
      for (double& r : q.rabi) r *= scale;
      table = SidebandModel(q, Side::kBlue).table(times);
    } else {
      table = base.table(times);
    }
    const auto avg = thermal_average(table, nbar);
    RealVector r(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) r[i] = (avg.p_up[i] - data[i].y) / data[i].sigma;
    return r;
  };

  RealVector x0(2);
  x0 << std::log(std::max(nbar_guess, 1e-3)), 1.0;
  TraceFit out;
  out.fit = numerics::fit_least_squares(residuals, x0);
  if (!out.fit.converged || !out.fit.params.allFinite()) {
    throw NonConvergenceError("fit_nbar_trace: fit did not converge");
  }
  out.nbar = std::exp(std::clamp(out.fit.params[0], -30.0, std::log(1e4)));
  out.sigma_nbar = out.nbar * out.fit.sigma[0];
  out.rabi_scale = std::abs(out.fit.params[1]);
  out.sigma_rabi_scale = out.fit.sigma[1];
  return out;
}

namespace {

struct RatioTables {
  RealVector red, blue;
};

RatioTables ratio_tables(const SidebandParams& p) {
  const double t = pi_time(p);
  const std::vector<double> times{t};
  return {SidebandModel(p, Side::kRed).table(times).col(0),
          SidebandModel(p, Side::kBlue).table(times).col(0)};
}

double ratio_at(const RatioTables& tab, double nbar) {
  double tail = 0;
  const RealVector w = thermal_weights(nbar, static_cast<int>(tab.red.size()) - 1, tail);
  return w.dot(tab.red) / w.dot(tab.blue);
}

}  // namespace

double sideband_ratio(const SidebandParams& p, double nbar) {
  return ratio_at(ratio_tables(p), nbar);
}

RatioEstimate fit_nbar_ratio(double p_red, double p_blue, const SidebandParams& p, int shots) {
  if (!(p_blue > 0.0)) throw UnphysicalRatioError("fit_nbar_ratio: blue population must be > 0");
  if (!(p_red >= 0.0)) throw ContractViolation("fit_nbar_ratio: red population must be >= 0");
  RatioEstimate out;
  out.ratio = p_red / p_blue;
  if (out.ratio >= 1.0) {
    throw UnphysicalRatioError("fit_nbar_ratio: red/blue ratio >= 1 has no thermal solution");
  }
  const RatioTables tab = ratio_tables(p);
  double lo = 0.0, hi = 0.5 * p.mode.n_max;
  if (out.ratio <= ratio_at(tab, lo)) {
    out.nbar = 0.0;
  } else {
    if (out.ratio > ratio_at(tab, hi)) {
      throw OutOfRangeError("fit_nbar_ratio: ratio beyond the Fock table; raise n_max");
    }
    while (hi - lo > 1e-10 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      (ratio_at(tab, mid) < out.ratio ? lo : hi) = mid;
    }
    out.nbar = 0.5 * (lo + hi);
  }
  if (shots > 0) {
    const double sr = projection_sigma(p_red, shots);
    const double sb = projection_sigma(p_blue, shots);
    const double sigma_ratio = std::hypot(sr / p_blue, p_red * sb / (p_blue * p_blue));
    const double h = std::max(1e-4, 1e-3 * out.nbar);
    const double n0 = std::max(0.0, out.nbar - h);
    const double slope = (ratio_at(tab, out.nbar + h) - ratio_at(tab, n0)) / (out.nbar + h - n0);
    out.sigma = sigma_ratio / slope;
  }
  return out;
}

double projection_sample(double p_up, int shots, std::mt19937_64& rng) {
  if (shots <= 0) throw ContractViolation("projection_sample: shots must be > 0");
  std::binomial_distribution<int> draw(shots, std::clamp(p_up, 0.0, 1.0));
  return double(draw(rng)) / shots;
}

double projection_sigma(double measured, int shots) {
  if (shots <= 0) throw ContractViolation("projection_sigma: shots must be > 0");
  const double q = (measured * shots + 0.5) / (shots + 1.0);
  return std::sqrt(q * (1.0 - q) / shots);
}

// ---------------------------------------------------------------------------

void OdfParams::validate() const {
  if (rabi.empty()) throw ContractViolation("OdfParams: no ions");
  for (double r : rabi) {
    if (!std::isfinite(r)) throw ContractViolation("OdfParams: rabi must be finite");
  }
  if (!(mu_R > 0.0)) throw ContractViolation("OdfParams: mu_R must be > 0");
  if (!(tau >= 0.0) || !(tau_pi >= 0.0)) throw ContractViolation("OdfParams: tau, tau_pi must be >= 0");
  if (!(gamma_D >= 0.0)) throw ContractViolation("OdfParams: gamma_D must be >= 0");
  if (phi_s != 0.0 || phi_m != 0.0) {
    throw ContractViolation("OdfParams: only phi_s = phi_m = 0 is modelled");
  }
  if (!(k_mag > 0.0) || !(mass > 0.0)) throw ContractViolation("OdfParams: k_mag and mass must be > 0");
}

Complex odf_alpha(const OdfParams& o, double omega_m, double b_jm, int j) {
  o.validate();
  if (j < 0 || j >= static_cast<int>(o.rabi.size())) throw OutOfRangeError("odf_alpha: no such ion");
  if (!(omega_m > 0.0)) throw ContractViolation("odf_alpha: mode frequency must be > 0");
  const double eta = cooling::lamb_dicke(o.k_mag, o.mass, omega_m);
  const double pref = o.rabi[j] * b_jm * eta;
  const double w = omega_m, mu = o.mu_R, tau = o.tau;
  const double big_t = o.tau + o.tau_pi;
  const double d = mu - w;
  const Complex i(0, 1);
  if (std::abs(d) * (big_t + tau + 1.0 / w) < 1e-4) {
    // numerator ~ n2 d^2 and denominator ~ 2 w d near the pole
    const Complex n2 = 0.5 * big_t * (-2.0 * w * tau + i * (1.0 - std::exp(2.0 * i * w * tau)));
    return pref * n2 * d / (2.0 * w);
  }
  const double phi = big_t * d;
  const Complex braces = w * (std::cos(mu * tau) - std::cos(mu * tau + phi)) -
                         i * mu * (std::sin(mu * tau) - std::sin(mu * tau + phi));
  const Complex num =
      w * (1.0 - std::cos(phi)) + i * mu * std::sin(phi) - std::exp(i * w * tau) * braces;
  return pref * num / (mu * mu - w * w);
}

std::vector<double> odf_signal(const OdfParams& o, const crystal::ModeDecomposition& modes,
                               std::span<const double> nbars) {
  o.validate();
  const int n_modes = static_cast<int>(modes.frequencies.size());
  const int n_ions = static_cast<int>(modes.b.rows());
  if (static_cast<int>(nbars.size()) != n_modes) {
    throw ContractViolation("odf_signal: need one nbar per mode");
  }
  if (static_cast<int>(o.rabi.size()) != n_ions) {
    throw ContractViolation("odf_signal: need one Rabi frequency per ion");
  }
  std::vector<double> out(n_ions);
  for (int j = 0; j < n_ions; ++j) {
    double s = 0;
    for (int m = 0; m < n_modes; ++m) {
      if (!(nbars[m] >= 0.0)) throw ContractViolation("odf_signal: nbar must be >= 0");
      s += std::norm(odf_alpha(o, modes.frequencies[m], modes.b(j, m), j)) * (2 * nbars[m] + 1);
    }
    out[j] = 0.5 * (1.0 - std::exp(-2.0 * o.gamma_D * o.tau) * std::exp(-2.0 * s));
  }
  return out;
}

double odf_height(const OdfParams& o, const crystal::ModeDecomposition& modes,
                  std::span<const double> nbars) {
  const auto p = odf_signal(o, modes, nbars);
  double sum = 0;
  for (double v : p) sum += v;
  return sum / p.size();
}

OdfParams calibrated(const OdfParams& o, const OdfCalibration& cal, int n_ions) {
  OdfParams out = o;
  out.rabi.assign(n_ions, cal.rabi);
  return out;
}

double odf_height_to_nbar(double height, const OdfParams& o,
                          const crystal::ModeDecomposition& modes, const OdfCalibration& cal,
                          double nbar_max) {
  const int n_modes = static_cast<int>(modes.frequencies.size());
  const OdfParams q = cal.rabi > 0.0 ? calibrated(o, cal, static_cast<int>(modes.b.rows())) : o;
  int target = cal.target;
  if (target < 0) {
    double best = 0;
    for (int m = 0; m < n_modes; ++m) {
      const double d = std::abs(modes.frequencies[m] - o.mu_R);
      if (target < 0 || d < best) {
        best = d;
        target = m;
      }
    }
  }
  if (target >= n_modes) throw OutOfRangeError("odf_height_to_nbar: no such mode");
  std::vector<double> nbars = cal.nbars;
  if (nbars.empty()) nbars.assign(n_modes, 0.0);
  if (static_cast<int>(nbars.size()) != n_modes) {
    throw ContractViolation("odf_height_to_nbar: calibration needs one nbar per mode");
  }
  auto h = [&](double n) {
    nbars[target] = n;
    return odf_height(q, modes, nbars);
  };
  double lo = 0.0, hi = nbar_max;
  const double h_lo = h(lo), h_hi = h(hi);
  if (height < h_lo || height > h_hi) {
    throw OutOfRangeError("odf_height_to_nbar: height " + std::to_string(height) +
                          " outside the invertible range [" + std::to_string(h_lo) + ", " +
                          std::to_string(h_hi) + "]");
  }
  if (height == h_lo) return 0.0;
  while (hi - lo > 1e-5) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < height ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> sigma) {
  const std::size_t n = x.size();
  if (y.size() != n || (!sigma.empty() && sigma.size() != n)) {
    throw ContractViolation("fit_line: x, y and sigma differ in length");
  }
  if (n < 3) throw ContractViolation("fit_line: need at least 3 points");
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (!sigma.empty()) {
      if (!(sigma[i] > 0.0)) throw ContractViolation("fit_line: sigma must be > 0");
      w = 1.0 / (sigma[i] * sigma[i]);
    }
    s += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = s * sxx - sx * sx;
  if (!(det > 0.0)) throw DegenerateFitError("fit_line: all x equal", 0.0);
  LinearFit out;
  out.slope = (s * sxy - sx * sy) / det;
  out.intercept = (sxx * sy - sx * sxy) / det;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (y[i] - out.intercept - out.slope * x[i]) / (sigma.empty() ? 1.0 : sigma[i]);
    out.chi2 += r * r;
  }
  const double scale = sigma.empty() ? out.chi2 / (n - 2) : 1.0;
  out.sigma_slope = std::sqrt(scale * s / det);
  out.sigma_intercept = std::sqrt(scale * sxx / det);
  return out;
}

LinearFit heating_rate_fit(std::span<const double> delays, std::span<const double> nbars,
                           std::span<const double> sigma) {
  return fit_line(delays, nbars, sigma);
}

}  // namespace eitcool::thermometry
