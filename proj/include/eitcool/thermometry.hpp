#pragma once

#include <random>
#include <span>
#include <vector>

#include "eitcool/cooling.hpp"
#include "eitcool/crystal.hpp"
#include "eitcool/numerics.hpp"

// Phonon-number measurement from Raman sideband traces and from the
// optical-dipole-force dephasing of a Ramsey signal.
namespace eitcool::thermometry {

enum class Side { kRed, kBlue };

enum class SpinBasis {
  kAuto,       // dense up to kMaxDenseSpins, symmetric above
  kDense,      // all 2^N spin configurations
  kSymmetric,  // Dicke states; exact only when every coupling is equal (COM)
};

inline constexpr int kMaxDenseSpins = 8;
inline constexpr long kMaxDenseStates = 1L << 18;

struct SidebandParams {
  cooling::MotionalMode mode;  // eta and b of the probed mode; n_max bounds the Fock table
  std::vector<double> rabi;    // carrier Rabi frequency per spin, rad/s
  double mu_R = 0;             // Raman detuning w_R - w_0; 0 means on the chosen sideband
  SpinBasis basis = SpinBasis::kAuto;

  int n_spins() const { return static_cast<int>(rabi.size()); }
  void validate() const;
};

/// Mode m of a crystal as a MotionalMode (eta at that mode frequency).
cooling::MotionalMode crystal_mode(const crystal::ModeDecomposition& modes, int m,
                                   double mass_kg, double k_mag, int n_max);

/// Sideband Rabi rate of spin j: eta_m * b_j * Omega_j.
double coupling(const SidebandParams& p, int j);

/// Blue-sideband pi time of the collective transition out of |down...down, 0>.
double pi_time(const SidebandParams& p);

/// Full Hamiltonian on spins (x) Fock(0..n_cut) in the frame of the sideband
/// drive, spin j as bit j of the spin index, |up> = 1. Used as an oracle for
/// the block-resolved evolution.
ComplexMatrix sideband_hamiltonian(const SidebandParams& p, Side side, int n_cut);

/// Fock-resolved unitary evolution from |down...down>|n>. The Hamiltonian
/// conserves n -/+ (number of up spins), so each initial n evolves in its own
/// small block that is diagonalized once.
class SidebandModel {
 public:
  SidebandModel(const SidebandParams& p, Side side);

  /// P_up(t, n) averaged over spins, for n = 0..n_max.
  double population(double t, int n) const;
  int n_max() const { return static_cast<int>(blocks_.size()) - 1; }

  /// rows n = 0..n_max, columns t. Rows run concurrently.
  RealMatrix table(std::span<const double> times) const;

 private:
  struct Block {
    RealVector energies;
    ComplexMatrix vectors;  // columns are eigenvectors
    ComplexVector weights;  // eigenvector overlaps with the initial state
    RealVector up_fraction;
  };
  std::vector<Block> blocks_;
};

double sideband_populations(const SidebandParams& p, Side side, double t, int n);

struct ThermalTrace {
  std::vector<double> p_up;
  double tail = 0;  // thermal weight beyond the table
  bool truncation_warning = false;
};

inline constexpr double kThermalTailLimit = 1e-3;

/// Thermal weights n^k / (n+1)^(k+1) over the table rows, renormalized.
ThermalTrace thermal_average(const RealMatrix& table, double nbar);

struct TraceFit {
  double nbar = 0;
  double sigma_nbar = 0;
  double rabi_scale = 1;
  double sigma_rabi_scale = 0;
  numerics::FitResult fit;  // in (log nbar, rabi scale)
};

/// Least squares of the thermal-averaged model over nbar = exp(u) and an
/// overall Rabi scale. Data sigma must be > 0.
TraceFit fit_nbar_trace(std::span<const numerics::DataPoint> data, const SidebandParams& p,
                        double nbar_guess = 0.5);

struct RatioEstimate {
  double nbar = 0;
  double sigma = 0;  // from projection noise when shots > 0
  double ratio = 0;
};

/// Inverts P_red / P_blue at the blue pi time by bisection on [0, n_max / 2].
RatioEstimate fit_nbar_ratio(double p_red, double p_blue, const SidebandParams& p,
                             int shots = 0);

/// Predicted P_red / P_blue at the blue pi time.
double sideband_ratio(const SidebandParams& p, double nbar);

inline constexpr int kDefaultShots = 200;

/// Fraction of up outcomes in `shots` projective measurements.
double projection_sample(double p_up, int shots, std::mt19937_64& rng);

/// 1 sigma of a measured fraction. Uses (k + 1/2) / (shots + 1) so that
/// outcomes of all-down or all-up keep a nonzero error bar.
double projection_sigma(double measured, int shots);

// ---------------------------------------------------------------------------
// Optical dipole force

struct OdfParams {
  std::vector<double> rabi;  // Omega_j, rad/s
  double mu_R = 0;           // rad/s
  double tau = 0;            // s, one ODF arm
  double tau_pi = 0;         // s, echo pulse
  double gamma_D = 0;        // 1/s
  double phi_s = 0;          // only the calibrated phases phi_s = phi_m = 0 are modelled
  double phi_m = 0;
  double k_mag = 0;          // |Delta k|, 1/m
  double mass = 0;           // kg

  void validate() const;
};

/// alpha_jm for one mode. The expression is 0/0 at mu_R = w_m; within
/// |mu_R - w_m| (tau + tau_pi + 1/w_m) < 1e-4 its first-order series is used.
Complex odf_alpha(const OdfParams& o, double omega_m, double b_jm, int j);

/// P_up of every ion.
std::vector<double> odf_signal(const OdfParams& o, const crystal::ModeDecomposition& modes,
                               std::span<const double> nbars);

/// Ion-averaged P_up.
double odf_height(const OdfParams& o, const crystal::ModeDecomposition& modes,
                  std::span<const double> nbars);

struct OdfCalibration {
  double rabi = 0;             // single-ion Omega, applied to every ion
  std::vector<double> nbars;   // occupations of the other modes
  int target = -1;             // -1 selects the mode nearest mu_R
};

/// Copy of o with every ion's Rabi frequency set to the calibration value.
OdfParams calibrated(const OdfParams& o, const OdfCalibration& cal, int n_ions);

/// Inverts the ion-averaged height for the target mode's nbar (bisection,
/// tolerance 1e-4 in nbar, search range [0, nbar_max]).
double odf_height_to_nbar(double height, const OdfParams& o,
                          const crystal::ModeDecomposition& modes, const OdfCalibration& cal,
                          double nbar_max = 100.0);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double sigma_slope = 0;
  double sigma_intercept = 0;
  double chi2 = 0;
};

/// Weighted straight line. Without sigmas the errors are scaled by the residual variance.
LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> sigma = {});

/// Heating rate in quanta/s from nbar measured after each delay.
LinearFit heating_rate_fit(std::span<const double> delays, std::span<const double> nbars,
                           std::span<const double> sigma = {});

}  // namespace eitcool::thermometry
