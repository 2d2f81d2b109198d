#pragma once

#include <array>
#include <span>
#include <vector>

#include "eitcool/numerics.hpp"

// Differential AC-Stark shifts of the clock and Zeeman qubits and the Ramsey
// traces used to calibrate the three polarization components of a beam.
namespace eitcool::stark {

struct StarkParams {
  double omega_plus = 0;   // rad/s
  double omega_minus = 0;  // rad/s
  double omega_pi = 0;     // rad/s
  double delta = 0;        // beam detuning, rad/s
  double delta_P = 0;      // P1/2 hyperfine splitting, rad/s
  double delta_S = 0;      // S1/2 hyperfine splitting, rad/s
  double delta_B = 0;      // Zeeman splitting, rad/s
  double gamma_clock = 0;  // envelope constant, 1/s
  double gamma_zeeman = 0; // envelope constant, 1/s

  void validate() const;
};

/// Smallest allowed |denominator| in the shift formulas.
double guard_band();

/// 12.642812 GHz ground and 2.105 GHz excited hyperfine splittings, 4.6 MHz
/// Zeeman splitting, no Rabi frequencies.
StarkParams yb171_defaults();

enum class Qubit { kClock, kZeemanPlus, kZeemanMinus };

double clock_shift(const StarkParams& p);

/// sign = +1 or -1.
double zeeman_shift(const StarkParams& p, int sign);

double shift(const StarkParams& p, Qubit q);

/// sin^2(shift t) times the two spontaneous-emission envelopes.
double ramsey_signal(const StarkParams& p, Qubit q, double t);

struct RamseyTrace {
  Qubit qubit = Qubit::kClock;
  std::vector<numerics::DataPoint> data;  // x = t in s
};

struct RabiFit {
  double omega_plus = 0, omega_minus = 0, omega_pi = 0;  // rad/s, >= 0
  double sigma_plus = 0, sigma_minus = 0, sigma_pi = 0;
  double gamma_clock = 0, gamma_zeeman = 0;
  std::array<bool, 3> wide_sigma{};  // {+, -, pi}: relative sigma above kWideSigma
  double pi_fraction = 0;            // |omega_pi| / sqrt(omega_plus^2 + omega_minus^2)
  bool ambiguous = false;            // another sign branch fits within delta chi^2 < 1
  numerics::FitResult fit;           // params (omega_plus, omega_minus, omega_pi, gamma_clock, gamma_zeeman)
};

inline constexpr double kWideSigma = 0.25;

/// Joint least squares over the three Ramsey models with the detunings of p0
/// held fixed. Starting points come from each trace's dominant frequency,
/// one per sign assignment of the three shifts. A Ramsey trace only fixes
/// |shift|, so when several assignments fit equally the one nearest the p0
/// Rabi frequencies is returned and `ambiguous` is set.
RabiFit fit_rabi_components(std::span<const RamseyTrace> traces, const StarkParams& p0);

}  // namespace eitcool::stark
