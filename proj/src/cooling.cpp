#include "eitcool/cooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eitcool/errors.hpp"
#include "eitcool/units.hpp"

namespace eitcool::cooling {

double lamb_dicke(double k_mag, double mass_kg, double nu) {
  return k_mag * std::sqrt(units::kHbar / (2.0 * mass_kg * nu));
}

MotionalMode MotionalMode::from_physical(double nu, double mass_kg, double wavelength_m,
                                         int n_max) {
  if (!(wavelength_m > 0.0)) throw ContractViolation("MotionalMode: wavelength must be > 0");
  MotionalMode m;
  m.nu = nu;
  m.mass = mass_kg;
  m.k_mag = units::kTwoPi / wavelength_m;
  m.n_max = n_max;
  m.b = RealVector::Ones(1);
  if (!(nu > 0.0) || !(mass_kg > 0.0)) {
    throw ContractViolation("MotionalMode: nu and mass must be > 0");
  }
  m.eta = lamb_dicke(m.k_mag, mass_kg, nu);
  return m;
}

void MotionalMode::validate() const {
  if (!(nu > 0.0) || !(mass > 0.0) || !(k_mag > 0.0)) {
    throw ContractViolation("MotionalMode: nu, mass and k_mag must be > 0");
  }
  if (n_max < 0) throw ContractViolation("MotionalMode: n_max must be >= 0");
  const double expected = lamb_dicke(k_mag, mass, nu);
  if (std::abs(eta - expected) > 1e-12 * expected) {
    throw ContractViolation("MotionalMode: eta inconsistent with k_mag, mass and nu");
  }
  if (b.size() == 0 || std::abs(b.norm() - 1.0) > 1e-10) {
    throw ContractViolation("MotionalMode: participation vector must have unit norm");
  }
}

namespace {

// The mode description without the eta consistency check, for callers that
// rescale eta on purpose (COM of an N-ion crystal, eta-scaling studies).
void check_shape(const MotionalMode& m) {
  if (!(m.nu > 0.0)) throw ContractViolation("MotionalMode: nu must be > 0");
  if (m.n_max < 0) throw ContractViolation("MotionalMode: n_max must be >= 0");
  if (!std::isfinite(m.eta)) throw ContractViolation("MotionalMode: eta is not finite");
}

}  // namespace

ComplexMatrix hamiltonian_moving(const atom4::EitParams& p, const MotionalMode& m) {
  p.validate();
  check_shape(m);
  const int nm = m.n_max + 1;
  const ops::FockOperators f(m.n_max);
  const ComplexMatrix d_probe = ops::displacement_exp(f, m.eta);
  const ComplexMatrix d_drive = d_probe.adjoint();

  ComplexMatrix h = ComplexMatrix::Zero(atom4::kDim * nm, atom4::kDim * nm);
  auto put = [&](int row, int col, const ComplexMatrix& blk) {
    h.block(row * nm, col * nm, nm, nm) = blk;
    h.block(col * nm, row * nm, nm, nm) = blk.adjoint();
  };
  put(atom4::kE, atom4::kPlus, 0.5 * p.omega_sigma_minus * d_drive);
  put(atom4::kE, atom4::kZero, -0.5 * p.omega_pi * d_probe);
  put(atom4::kE, atom4::kMinus, 0.5 * p.omega_sigma_plus * d_drive);
  const double diag[4] = {0.0, p.delta_d + p.delta_B, p.delta_p, p.delta_d - p.delta_B};
  for (int g = 0; g < atom4::kDim; ++g) {
    h.block(g * nm, g * nm, nm, nm) = diag[g] * ops::identity(nm) + m.nu * f.number;
  }
  return h;
}

lindblad::LindbladSystem cooling_system(const atom4::EitParams& p, const MotionalMode& m,
                                        double heating) {
  if (!(heating >= 0.0)) throw ContractViolation("cooling_system: heating must be >= 0");
  const int nm = m.n_max + 1;
  lindblad::LindbladSystem sys{hamiltonian_moving(p, m), {}, ops::HilbertSpace{{atom4::kDim, nm}}};
  for (const auto& c : atom4::collapse_ops(p)) {
    sys.collapse.push_back(ops::tensor({c, ops::identity(nm)}));
  }
  if (heating > 0.0) {
    const ops::FockOperators f(m.n_max);
    const double amp = std::sqrt(heating);
    sys.collapse.push_back(ops::tensor({ops::identity(atom4::kDim), ComplexMatrix(amp * f.a)}));
    sys.collapse.push_back(
        ops::tensor({ops::identity(atom4::kDim), ComplexMatrix(amp * f.a_dagger)}));
  }
  return sys;
}

ops::DensityMatrix initial_state(const MotionalMode& m, double nbar0) {
  if (!(nbar0 >= 0.0)) throw ContractViolation("initial_state: nbar0 must be >= 0");
  ComplexMatrix internal = ComplexMatrix::Zero(atom4::kDim, atom4::kDim);
  for (int g : {atom4::kPlus, atom4::kZero, atom4::kMinus}) internal(g, g) = 1.0 / 3.0;
  const auto th = ops::thermal_state(m.n_max, nbar0);
  return ops::DensityMatrix{ops::HilbertSpace{{atom4::kDim, m.n_max + 1}},
                            ops::tensor({internal, th.rho.matrix})};
}

namespace {

// <a^dagger a> without forming the full number operator: sum over atom blocks.
double mean_phonons(const ComplexMatrix& rho, int nm) {
  double n = 0.0;
  for (int g = 0; g < atom4::kDim; ++g) {
    for (int k = 0; k < nm; ++k) n += k * rho(g * nm + k, g * nm + k).real();
  }
  return n;
}

}  // namespace

void fit_exponential(CoolingResult& r) {
  r.fit_ok = false;
  const std::size_t n = r.times.size();
  if (n < 4) return;
  std::vector<numerics::DataPoint> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = {r.times[i] - r.times[0], r.nbar[i], 1.0};

  const double first = r.nbar.front(), last = r.nbar.back();
  const double span = r.times.back() - r.times.front();
  // initial rate from the first crossing of the 1/e level
  double t_e = span / 3.0;
  const double level = last + (first - last) / std::exp(1.0);
  for (std::size_t i = 1; i < n; ++i) {
    if ((first - level) * (r.nbar[i] - level) <= 0.0) {
      t_e = std::max(data[i].x, span / n);
      break;
    }
  }
  RealVector p0(3);
  p0 << first - last, 1.0 / t_e, last;
  numerics::FitOptions opt;
  RealVector scale(3);
  scale << std::max(std::abs(first - last), 1e-3), 1.0 / t_e, std::max(std::abs(last), 1e-3);
  opt.scale = scale;
  const numerics::ModelFn model = [](double t, const RealVector& q) {
    return q[0] * std::exp(-q[1] * t) + q[2];
  };
  try {
    r.fit = numerics::fit_least_squares(model, data, p0, opt);
  } catch (const Error&) {
    return;
  }
  if (!r.fit.converged || !(r.fit.params[1] > 0.0)) return;
  r.gamma_cool = r.fit.params[1];
  r.tau_cool = 1.0 / r.gamma_cool;
  r.fit_ok = true;
}

CoolingResult simulate_cooling(const atom4::EitParams& p, const MotionalMode& m, double nbar0,
                               const std::vector<double>& t_list, double heating,
                               const CoolingOptions& options) {
  if (!(nbar0 >= 0.0)) throw ContractViolation("simulate_cooling: nbar0 must be >= 0");
  const auto sys = cooling_system(p, m, heating);
  const auto rho0 = initial_state(m, nbar0);
  const int nm = m.n_max + 1;

  CoolingResult r;
  r.heating_rate = heating;
  r.times = t_list;
  r.nbar.resize(t_list.size());
  lindblad::evolve(sys, rho0, t_list,
                   [&](std::size_t i, double, const ops::DensityMatrix& rho) {
                     r.nbar[i] = mean_phonons(rho.matrix, nm);
                     r.max_top_population =
                         std::max(r.max_top_population, ops::top_fock_population(rho, 1));
                   },
                   options.evolve);
  r.truncation_flag = r.max_top_population > ops::kTruncationFlagThreshold;
  r.n_ss = r.nbar.back();
  if (options.fit) fit_exponential(r);
  return r;
}

double cooling_limit(const atom4::EitParams& p, const MotionalMode& m, double heating,
                     const LimitOptions& options) {
  const auto sys = cooling_system(p, m, heating);
  lindblad::SteadyOptions so;
  so.method = lindblad::SteadyMethod::kLongTime;
  so.t_max = options.t_max;
  so.check_interval = options.check_interval;
  so.tol = options.tol;
  so.rho0 = initial_state(m, 0.5);
  so.evolve = options.evolve;
  const auto ss = lindblad::steadystate(sys, so);
  return mean_phonons(ss.rho.matrix, m.n_max + 1);
}

DetuningScan detuning_scan(const atom4::EitParams& p, const MotionalMode& m,
                           const std::vector<double>& relative_detunings, double t_fix,
                           const ScanOptions& options) {
  if (!(t_fix > 0.0)) throw ContractViolation("detuning_scan: t_fix must be > 0");
  DetuningScan scan;
  scan.points.resize(relative_detunings.size());
  const long n = static_cast<long>(relative_detunings.size());
  CoolingOptions co;
  co.evolve = options.evolve;
  co.fit = false;

#pragma omp parallel for schedule(dynamic) if (options.exec == lindblad::Exec::kParallel)
  for (long i = 0; i < n; ++i) {
    auto& pt = scan.points[i];
    pt.relative_detuning = relative_detunings[i];
    atom4::EitParams q = p;
    q.delta_p = p.delta_d + relative_detunings[i];
    try {
      const auto r = simulate_cooling(q, m, options.nbar0, {0.0, t_fix}, options.heating, co);
      pt.nbar_final = r.nbar.back();
    } catch (const Error&) {
      pt.failed = true;
      pt.nbar_final = std::numeric_limits<double>::quiet_NaN();
    }
  }
  for (long i = 0; i < n; ++i) {
    if (scan.points[i].failed) continue;
    if (scan.argmin < 0 || scan.points[i].nbar_final < scan.points[scan.argmin].nbar_final) {
      scan.argmin = static_cast<int>(i);
    }
  }
  return scan;
}

double predicted_optimum(const atom4::EitParams& p, double nu) {
  return p.delta_B + atom4::dressed_stark_shift(p, atom4::DressedBranch::kSigmaMinus) - nu;
}

std::vector<PowerPoint> power_scan(const atom4::EitParams& p, const MotionalMode& m, Beam which,
                                   const std::vector<double>& powers,
                                   const PowerScanOptions& options) {
  if (options.coarse_detunings.empty()) {
    throw ContractViolation("power_scan: coarse detuning grid is empty");
  }
  if (options.t_list.size() < 4) throw ContractViolation("power_scan: t_list needs >= 4 times");
  std::vector<PowerPoint> out(powers.size());
  for (std::size_t k = 0; k < powers.size(); ++k) {
    PowerPoint& pt = out[k];
    pt.power_scale = powers[k];
    if (!(powers[k] >= 0.0)) throw ContractViolation("power_scan: power scale must be >= 0");
    atom4::EitParams q = p;
    const double s = std::sqrt(powers[k]);
    if (which == Beam::kDrive) {
      q.omega_sigma_plus *= s;
      q.omega_sigma_minus *= s;
    } else {
      q.omega_pi *= s;
    }
    try {
      const auto scan = detuning_scan(q, m, options.coarse_detunings, options.t_fix, options.scan);
      if (scan.argmin < 0) {
        pt.failed = true;
        continue;
      }
      pt.best_detuning = scan.best_detuning();
      q.delta_p = q.delta_d + pt.best_detuning;
      CoolingOptions co;
      co.evolve = options.scan.evolve;
      const auto r =
          simulate_cooling(q, m, options.scan.nbar0, options.t_list, options.scan.heating, co);
      if (r.fit_ok) {
        pt.gamma_cool = r.gamma_cool;
        pt.n_ss = r.n_ss;
      } else {
        // No decay to fit (e.g. beam off): no cooling.
        pt.gamma_cool = 0.0;
        pt.n_ss = r.nbar.back();
      }
    } catch (const Error&) {
      pt.failed = true;
    }
  }
  return out;
}

CoolingResult simulate_cooling_com(const atom4::EitParams& p, const MotionalMode& single_ion,
                                   int ions, double nbar0, const std::vector<double>& t_list,
                                   double heating, const CoolingOptions& options) {
  if (ions < 1) throw ContractViolation("simulate_cooling_com: ions must be >= 1");
  MotionalMode com = single_ion;
  com.eta = single_ion.eta / std::sqrt(static_cast<double>(ions));
  com.b = RealVector::Constant(ions, 1.0 / std::sqrt(static_cast<double>(ions)));
  std::vector<double> scaled(t_list);
  for (double& t : scaled) t *= ions;
  // Heating acts once per real time, so it is diluted in the stretched time.
  CoolingResult r = simulate_cooling(p, com, nbar0, scaled, heating / ions, options);
  r.times = t_list;
  r.heating_rate = heating;
  if (options.fit) fit_exponential(r);
  return r;
}

}  // namespace eitcool::cooling
