#pragma once

#include <vector>

#include "eitcool/atom4.hpp"
#include "eitcool/lindblad.hpp"

// EIT cooling of one quantized motional mode.
namespace eitcool::cooling {

struct MotionalMode {
  double nu = 0;     // rad/s
  double mass = 0;   // kg
  double k_mag = 0;  // 1/m
  double eta = 0;    // k_mag * sqrt(hbar / (2 mass nu))
  int n_max = 0;
  RealVector b;      // participation vector, unit norm

  /// Single-ion mode with eta derived from the wavelength.
  static MotionalMode from_physical(double nu, double mass_kg, double wavelength_m, int n_max);
  void validate() const;
};

double lamb_dicke(double k_mag, double mass_kg, double nu);

/// Moving-ion Hamiltonian on atom (x) mode, with nu a^dagger a added. Drive
/// and probe are counter-propagating, so the drive legs carry exp(-i eta y)
/// and the probe leg exp(+i eta y).
ComplexMatrix hamiltonian_moving(const atom4::EitParams& p, const MotionalMode& m);

/// Atomic decay (x) I plus the heating pair sqrt(rate) a, sqrt(rate) a^dagger.
lindblad::LindbladSystem cooling_system(const atom4::EitParams& p, const MotionalMode& m,
                                        double heating);

/// Equal mixture of |+>, |0>, |-> (x) thermal(nbar0).
ops::DensityMatrix initial_state(const MotionalMode& m, double nbar0);

struct CoolingOptions {
  lindblad::EvolveOptions evolve;
  bool fit = true;
};

struct CoolingResult {
  std::vector<double> times;  // s
  std::vector<double> nbar;
  double gamma_cool = 0;      // 1/s, from nbar(t) = a exp(-gamma t) + c
  double tau_cool = 0;        // s
  double n_ss = 0;            // nbar at the last time; the fitted offset c is fit.params[2]
  double heating_rate = 0;    // quanta/s
  numerics::FitResult fit;
  bool fit_ok = false;
  double max_top_population = 0;  // largest population of the top two Fock levels
  bool truncation_flag = false;
};

CoolingResult simulate_cooling(const atom4::EitParams& p, const MotionalMode& m, double nbar0,
                               const std::vector<double>& t_list, double heating,
                               const CoolingOptions& options = {});

/// Fits a exp(-gamma t) + c (unit weights) to an nbar trace. Sets gamma_cool,
/// tau_cool, fit and fit_ok. The tail of a real trace is not a single
/// exponential, so c can undershoot the plateau and is not used as n_ss.
void fit_exponential(CoolingResult& r);

struct LimitOptions {
  double t_max = 2e-3;           // s
  double check_interval = 2e-5;  // s
  double tol = 1e-8;
  lindblad::EvolveOptions evolve;
};

/// Steady-state phonon number from long-time evolution.
double cooling_limit(const atom4::EitParams& p, const MotionalMode& m, double heating,
                     const LimitOptions& options = {});

struct ScanPoint {
  double relative_detuning = 0;  // delta_p - delta_d, rad/s
  double nbar_final = 0;
  bool failed = false;
};

struct DetuningScan {
  std::vector<ScanPoint> points;
  int argmin = -1;  // over points that did not fail
  double best_detuning() const { return argmin < 0 ? 0.0 : points[argmin].relative_detuning; }
};

struct ScanOptions {
  double nbar0 = 7.0;
  double heating = 0;
  lindblad::Exec exec = lindblad::Exec::kParallel;  // over scan points
  lindblad::EvolveOptions evolve;
};

/// Holds delta_d fixed and sets delta_p = delta_d + each relative detuning;
/// reports nbar at t_fix.
DetuningScan detuning_scan(const atom4::EitParams& p, const MotionalMode& m,
                           const std::vector<double>& relative_detunings, double t_fix,
                           const ScanOptions& options = {});

/// Predicted optimum delta_B + delta_DR - nu for the leg at delta_d + delta_B.
double predicted_optimum(const atom4::EitParams& p, double nu);

enum class Beam { kDrive, kProbe };

struct PowerPoint {
  double power_scale = 0;
  double best_detuning = 0;
  double gamma_cool = 0;
  double n_ss = 0;
  bool failed = false;
};

struct PowerScanOptions {
  ScanOptions scan;
  std::vector<double> coarse_detunings;  // relative detunings tried at each power
  double t_fix = 0;                      // s, used to rank the coarse grid
  std::vector<double> t_list;            // s, dynamics fitted at the best detuning
};

/// Rabi frequencies of the chosen beam scale as sqrt(power). At each power
/// the relative detuning is re-optimized on the coarse grid before fitting.
std::vector<PowerPoint> power_scan(const atom4::EitParams& p, const MotionalMode& m, Beam which,
                                   const std::vector<double>& powers,
                                   const PowerScanOptions& options);

/// COM mode of an N-ion crystal treated as N independent single-ion coolers
/// acting on one mode: the single-ion model at eta / sqrt(N) with all
/// cooling rates added, i.e. evaluated at N t. The limit is unchanged.
CoolingResult simulate_cooling_com(const atom4::EitParams& p, const MotionalMode& single_ion,
                                   int ions, double nbar0, const std::vector<double>& t_list,
                                   double heating, const CoolingOptions& options = {});

}  // namespace eitcool::cooling
