#include "eitcool/stark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eitcool/errors.hpp"
#include "eitcool/units.hpp"

namespace eitcool::stark {

double guard_band() { return units::mhz(0.5); }

void StarkParams::validate() const {
  for (double v : {omega_plus, omega_minus, omega_pi, delta, delta_P, delta_S, delta_B}) {
    if (!std::isfinite(v)) throw ContractViolation("StarkParams: non-finite parameter");
  }
  if (!(gamma_clock >= 0.0) || !(gamma_zeeman >= 0.0)) {
    throw ContractViolation("StarkParams: envelope constants must be >= 0");
  }
}

StarkParams yb171_defaults() {
  StarkParams p;
  p.delta_S = units::kTwoPi * 12.642812e9;
  p.delta_P = units::kTwoPi * 2.105e9;
  p.delta_B = units::mhz(4.6);
  return p;
}

namespace {

double inv(double d, const char* name) {
  if (std::abs(d) <= guard_band()) {
    throw NearResonanceError(std::string("stark: denominator ") + name +
                             " is within the 0.5 MHz guard band");
  }
  return 1.0 / d;
}

}  // namespace

double clock_shift(const StarkParams& p) {
  p.validate();
  const double a = inv(p.delta, "Delta");
  const double b = inv(p.delta_P + p.delta_S - p.delta, "Delta_P + Delta_S - Delta");
  const double c = inv(p.delta_P - p.delta, "Delta_P - Delta");
  const double sq = p.omega_minus * p.omega_minus + p.omega_plus * p.omega_plus;
  return p.omega_pi * p.omega_pi * (a + b) + sq * (b - c);
}

double zeeman_shift(const StarkParams& p, int sign) {
  p.validate();
  if (sign != 1 && sign != -1) throw ContractViolation("zeeman_shift: sign must be +1 or -1");
  const double s = sign;
  const double far = inv(p.delta_P + p.delta_S - p.delta, "Delta_P + Delta_S - Delta");
  const double near = inv(p.delta_P - p.delta, "Delta_P - Delta");
  const double a = inv(p.delta + s * p.delta_B, sign > 0 ? "Delta + delta_B" : "Delta - delta_B");
  const double b = inv(p.delta_P - p.delta - s * p.delta_B,
                       sign > 0 ? "Delta_P - Delta - delta_B" : "Delta_P - Delta + delta_B");
  const double w_mp = sign > 0 ? p.omega_minus : p.omega_plus;
  const double w_pm = sign > 0 ? p.omega_plus : p.omega_minus;
  return w_mp * w_mp * (a - b + far) + p.omega_pi * p.omega_pi * (-near + far) +
         w_pm * w_pm * far;
}

double shift(const StarkParams& p, Qubit q) {
  switch (q) {
    case Qubit::kClock: return clock_shift(p);
    case Qubit::kZeemanPlus: return zeeman_shift(p, 1);
    case Qubit::kZeemanMinus: return zeeman_shift(p, -1);
  }
  return 0;
}

double ramsey_signal(const StarkParams& p, Qubit q, double t) {
  if (!(t >= 0.0)) throw ContractViolation("ramsey_signal: t must be >= 0");
  const double s = std::sin(shift(p, q) * t);
  const double near = p.delta_P - p.delta;
  double decay = 0;
  if (q == Qubit::kClock) {
    const double sq = p.omega_minus * p.omega_minus + p.omega_plus * p.omega_plus;
    decay = p.gamma_clock * (p.omega_pi * p.omega_pi / (p.delta * p.delta) + sq / (near * near));
  } else {
    const int sign = q == Qubit::kZeemanPlus ? 1 : -1;
    const double w_mp = sign > 0 ? p.omega_minus : p.omega_plus;
    const double d = p.delta + sign * p.delta_B;
    decay = p.gamma_zeeman * (w_mp * w_mp / (d * d) + p.omega_pi * p.omega_pi / (near * near));
  }
  return s * s * std::exp(-decay * t);
}

namespace {

StarkParams with(const StarkParams& base, const RealVector& x) {
  StarkParams p = base;
  p.omega_plus = x[0];
  p.omega_minus = x[1];
  p.omega_pi = x[2];
  p.gamma_clock = std::abs(x[3]);
  p.gamma_zeeman = std::abs(x[4]);
  return p;
}

// |shift| of one trace from a grid search of A sin^2(w t), refined locally.
double dominant_frequency(const std::vector<numerics::DataPoint>& data) {
  double t_max = 0, dt = std::numeric_limits<double>::infinity();
  std::vector<double> ts;
  for (const auto& d : data) ts.push_back(d.x);
  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i] > ts[i - 1]) dt = std::min(dt, ts[i] - ts[i - 1]);
  }
  t_max = ts.back();
  if (!(t_max > 0.0) || !std::isfinite(dt)) {
    throw ContractViolation("fit_rabi_components: each trace needs distinct times > 0");
  }
  auto cost = [&](double w) {
    double sy = 0, ss = 0;
    for (const auto& d : data) {
      const double s = std::pow(std::sin(w * d.x), 2);
      sy += s * d.y / (d.sigma * d.sigma);
      ss += s * s / (d.sigma * d.sigma);
    }
    const double a = ss > 0 ? sy / ss : 0.0;
    double r = 0;
    for (const auto& d : data) {
      const double e = (a * std::pow(std::sin(w * d.x), 2) - d.y) / d.sigma;
      r += e * e;
    }
    return r;
  };
  double step = units::kPi / (8 * t_max);
  const double w_hi = units::kPi / (2 * dt);
  double best = step, best_cost = cost(step);
  for (double w = 2 * step; w <= w_hi; w += step) {
    const double c = cost(w);
    if (c < best_cost) {
      best_cost = c;
      best = w;
    }
  }
  for (int level = 0; level < 3; ++level) {
    const double center = best;
    step /= 10;
    for (int k = -10; k <= 10; ++k) {
      const double w = center + k * step;
      if (w <= 0) continue;
      const double c = cost(w);
      if (c < best_cost) {
        best_cost = c;
        best = w;
      }
    }
  }
  return best;
}

}  // namespace

RabiFit fit_rabi_components(std::span<const RamseyTrace> traces, const StarkParams& p0) {
  p0.validate();
  if (traces.size() != 3) throw ContractViolation("fit_rabi_components: need three traces");
  std::size_t n = 0;
  for (const auto& tr : traces) {
    if (tr.data.size() < 3) throw ContractViolation("fit_rabi_components: trace too short");
    for (const auto& d : tr.data) {
      if (!(d.sigma > 0.0)) throw ContractViolation("fit_rabi_components: sigma must be > 0");
    }
    n += tr.data.size();
  }

  // Shifts are linear in the squared components: shift_q = A_q . (w+^2, w-^2, wpi^2).
  RealMatrix a(3, 3);
  RealVector f(3);
  for (int q = 0; q < 3; ++q) {
    for (int c = 0; c < 3; ++c) {
      StarkParams unit = p0;
      unit.omega_plus = c == 0;
      unit.omega_minus = c == 1;
      unit.omega_pi = c == 2;
      a(q, c) = shift(unit, traces[q].qubit);
    }
    f[q] = dominant_frequency(traces[q].data);
  }

  auto residuals = [&](const RealVector& x) {
    RealVector full(5);
    full << x.head(3), x.size() == 5 ? x.tail(2) : RealVector(Eigen::Vector2d(p0.gamma_clock, p0.gamma_zeeman));
    const StarkParams p = with(p0, full);
    RealVector r(n);
    std::size_t k = 0;
    for (const auto& tr : traces) {
      for (const auto& d : tr.data) r[k++] = (ramsey_signal(p, tr.qubit, d.x) - d.y) / d.sigma;
    }
    return r;
  };

  // Stage 1: Rabi components only, envelopes held at p0, from every sign
  // branch. Each trace fixes only |shift|, so several branches can fit
  // equally well; those ties go to the branch nearest the p0 components.
  std::vector<numerics::FitResult> fits;
  for (int signs = 0; signs < 8; ++signs) {
    RealVector rhs(3);
    for (int q = 0; q < 3; ++q) rhs[q] = (signs >> q & 1) ? -f[q] : f[q];
    const RealVector sq = a.fullPivLu().solve(rhs);
    if (!sq.allFinite()) continue;
    if (sq.minCoeff() < -0.05 * sq.cwiseAbs().maxCoeff()) continue;
    RealVector x(3);
    for (int c = 0; c < 3; ++c) x[c] = std::sqrt(std::max(sq[c], 1e-6 * sq.cwiseAbs().maxCoeff()));
    numerics::FitOptions opt;
    opt.scale = RealVector::Constant(3, std::max(x.maxCoeff(), 1.0));
    try {
      fits.push_back(numerics::fit_least_squares(residuals, x, opt));
    } catch (const NumericalError&) {
      // a sign branch that does not fit is simply skipped
    }
  }
  if (fits.empty()) throw NonConvergenceError("fit_rabi_components: no sign branch converged");
  double chi2_min = std::numeric_limits<double>::infinity();
  for (const auto& fit : fits) chi2_min = std::min(chi2_min, fit.residual_norm * fit.residual_norm);
  const Eigen::Vector3d guess(std::abs(p0.omega_plus), std::abs(p0.omega_minus), std::abs(p0.omega_pi));
  numerics::FitResult best;
  int tied = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& fit : fits) {
    if (fit.residual_norm * fit.residual_norm > chi2_min + 1.0) continue;
    ++tied;
    const double distance = (fit.params.cwiseAbs() - guess).norm();
    if (distance < best_distance) {
      best_distance = distance;
      best = fit;
    }
  }

  // Stage 2: free the envelope constants. Zero decay leaves their columns
  // flat, in which case the stage 1 result stands.
  RealVector x5(5);
  x5 << best.params, std::max(p0.gamma_clock, 1e3), std::max(p0.gamma_zeeman, 1e3);
  numerics::FitOptions opt;
  RealVector scale(5);
  const double w_scale = std::max(best.params.cwiseAbs().maxCoeff(), 1.0);
  // envelope constants of order 1e6 /s give visible decay over a Ramsey trace
  scale << w_scale, w_scale, w_scale, std::max(p0.gamma_clock, 1e6), std::max(p0.gamma_zeeman, 1e6);
  opt.scale = scale;
  try {
    const auto fit = numerics::fit_least_squares(residuals, x5, opt);
    if (fit.residual_norm <= best.residual_norm) best = fit;
  } catch (const NumericalError&) {
  }
  if (best.params.size() == 3) {
    RealVector full(5);
    full << best.params, p0.gamma_clock, p0.gamma_zeeman;
    best.params = full;
  }

  RabiFit out;
  out.fit = best;
  out.ambiguous = tied > 1;
  out.omega_plus = std::abs(best.params[0]);
  out.omega_minus = std::abs(best.params[1]);
  out.omega_pi = std::abs(best.params[2]);
  out.gamma_clock = std::abs(best.params[3]);
  out.gamma_zeeman = std::abs(best.params[4]);
  out.sigma_plus = best.sigma[0];
  out.sigma_minus = best.sigma[1];
  out.sigma_pi = best.sigma[2];
  const double vals[3] = {out.omega_plus, out.omega_minus, out.omega_pi};
  for (int c = 0; c < 3; ++c) {
    out.wide_sigma[c] = !(best.sigma[c] <= kWideSigma * vals[c]);
  }
  const double sigma_norm = std::hypot(out.omega_plus, out.omega_minus);
  out.pi_fraction = sigma_norm > 0 ? out.omega_pi / sigma_norm : 0.0;
  return out;
}

}  // namespace eitcool::stark
