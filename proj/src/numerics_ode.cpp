#include <algorithm>
#include <cmath>
#include <sstream>

#include "eitcool/errors.hpp"
#include "eitcool/numerics.hpp"

namespace eitcool::numerics {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// PI controller constants (Hairer & Wanner, DOPRI5).
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kSafe = 0.9;
constexpr double kFacMin = 0.2;   // h shrinks by at most 5x
constexpr double kFacMax = 10.0;  // h grows by at most 10x

void validate(const OdeSpec& spec, const ComplexVector& y0) {
  if (!spec.rhs) throw ContractViolation("integrate_ode: rhs is empty");
  if (spec.t_list.empty()) throw ContractViolation("integrate_ode: t_list is empty");
  for (std::size_t i = 1; i < spec.t_list.size(); ++i) {
    if (!(spec.t_list[i] > spec.t_list[i - 1])) {
      throw ContractViolation("integrate_ode: t_list must be strictly increasing");
    }
  }
  if (!(spec.rel_tol > 0.0) || !(spec.abs_tol > 0.0)) {
    throw ContractViolation("integrate_ode: tolerances must be positive");
  }
  if (!y0.allFinite()) throw ContractViolation("integrate_ode: y0 is not finite");
}

double error_norm(const ComplexVector& err, const ComplexVector& y0, const ComplexVector& y1,
                  double rtol, double atol) {
  double acc = 0.0;
  const Eigen::Index n = err.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sk = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    acc += std::norm(err[i]) / (sk * sk);
  }
  return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
}

}  // namespace

OdeStats integrate_ode(const OdeSpec& spec, const ComplexVector& y0, const OdeObserver& observe) {
  validate(spec, y0);
  OdeStats stats;
  const auto& ts = spec.t_list;
  const Eigen::Index n = y0.size();

  ComplexVector y = y0;
  double t = ts.front();
  if (observe) observe(0, t, y);
  if (ts.size() == 1) return stats;

  ComplexVector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y1(n), err(n);
  spec.rhs(y, k1);
  ++stats.rhs_evals;

  const double span = ts.back() - ts.front();
  double h = spec.initial_step;
  if (h <= 0.0) {
    const double ny = y.norm() / std::sqrt(static_cast<double>(std::max<Eigen::Index>(n, 1)));
    const double nf = k1.norm() / std::sqrt(static_cast<double>(std::max<Eigen::Index>(n, 1)));
    h = (nf > 0.0) ? 0.01 * (ny + spec.abs_tol) / nf : span;
    h = std::min(h, span);
  }
  double fac_old = 1e-4;

  for (std::size_t next = 1; next < ts.size(); ++next) {
    const double t_target = ts[next];
    while (t < t_target) {
      if (stats.accepted + stats.rejected >= spec.max_steps) {
        std::ostringstream msg;
        msg << "integrate_ode: step budget exhausted at t = " << t;
        throw StiffnessError(msg.str(), t);
      }
      bool clipped = false;
      double h_step = h;
      // Stretch by up to 1% rather than leave a sliver before an output time.
      if (t + 1.01 * h_step >= t_target) {
        h_step = t_target - t;
        clipped = true;
      }
      if (h_step <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), span)) {
        std::ostringstream msg;
        msg << "integrate_ode: step size underflow at t = " << t;
        throw StiffnessError(msg.str(), t);
      }

      tmp = y + h_step * a21 * k1;
      spec.rhs(tmp, k2);
      tmp = y + h_step * (a31 * k1 + a32 * k2);
      spec.rhs(tmp, k3);
      tmp = y + h_step * (a41 * k1 + a42 * k2 + a43 * k3);
      spec.rhs(tmp, k4);
      tmp = y + h_step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      spec.rhs(tmp, k5);
      tmp = y + h_step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      spec.rhs(tmp, k6);
      y1 = y + h_step * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      spec.rhs(y1, k7);
      stats.rhs_evals += 6;

      err = h_step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = error_norm(err, y, y1, spec.rel_tol, spec.abs_tol);
      if (!std::isfinite(en)) {
        h = 0.2 * h_step;
        ++stats.rejected;
        continue;
      }
      const double fac11 = std::pow(en, kExpo);
      if (en <= 1.0) {
        double fac = fac11 / std::pow(fac_old, kBeta);
        fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
        const double h_new = h_step / fac;
        fac_old = std::max(en, 1e-4);
        t = clipped ? t_target : t + h_step;
        y.swap(y1);
        k1.swap(k7);
        ++stats.accepted;
        // A step shortened only to land on an output time does not shrink
        // the proposal for the next one.
        h = clipped ? std::max(h, h_new) : h_new;
      } else {
        h = h_step / std::min(1.0 / kFacMin, fac11 / kSafe);
        ++stats.rejected;
      }
    }
    if (observe) observe(next, t, y);
  }
  return stats;
}

std::vector<ComplexVector> integrate_ode(const OdeSpec& spec, const ComplexVector& y0) {
  std::vector<ComplexVector> out(spec.t_list.size());
  integrate_ode(spec, y0, [&](std::size_t i, double, const ComplexVector& y) { out[i] = y; });
  return out;
}

}  // namespace eitcool::numerics
