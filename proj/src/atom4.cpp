#include "eitcool/atom4.hpp"

#include <cmath>
#include <sstream>

#include "eitcool/errors.hpp"

namespace eitcool::atom4 {

void EitParams::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(omega_sigma_plus) || !finite(omega_sigma_minus) || !finite(omega_pi) ||
      !finite(delta_d) || !finite(delta_p) || !finite(delta_B) || !finite(gamma)) {
    throw ContractViolation("EitParams: non-finite field");
  }
  if (!(gamma > 0.0)) throw ContractViolation("EitParams: gamma must be > 0");
  if (omega_sigma_plus < 0.0 || omega_sigma_minus < 0.0 || omega_pi < 0.0) {
    throw ContractViolation("EitParams: Rabi frequencies must be >= 0");
  }
}

ComplexMatrix hamiltonian_rest(const EitParams& p) {
  ComplexMatrix h = ComplexMatrix::Zero(kDim, kDim);
  h(kE, kPlus) = h(kPlus, kE) = 0.5 * p.omega_sigma_minus;
  h(kE, kZero) = h(kZero, kE) = -0.5 * p.omega_pi;
  h(kE, kMinus) = h(kMinus, kE) = 0.5 * p.omega_sigma_plus;
  h(kPlus, kPlus) = p.delta_d + p.delta_B;
  h(kZero, kZero) = p.delta_p;
  h(kMinus, kMinus) = p.delta_d - p.delta_B;
  return h;
}

DarkStates dark_states(const EitParams& p) {
  const double n1 = std::hypot(p.omega_pi, p.omega_sigma_minus);
  const double n2 = std::hypot(p.omega_pi, p.omega_sigma_plus);
  if (n1 == 0.0 || n2 == 0.0) {
    throw ContractViolation("dark_states: zero-norm dark state (all couplings of a leg vanish)");
  }
  DarkStates d{ComplexVector::Zero(kDim), ComplexVector::Zero(kDim)};
  d.d1[kPlus] = p.omega_pi / n1;
  d.d1[kZero] = p.omega_sigma_minus / n1;
  d.d2[kZero] = p.omega_sigma_plus / n2;
  d.d2[kMinus] = p.omega_pi / n2;
  return d;
}

std::array<ComplexMatrix, 3> collapse_ops(const EitParams& p) {
  if (!(p.gamma > 0.0)) throw ContractViolation("collapse_ops: gamma must be > 0");
  const double amp = std::sqrt(p.gamma / 3.0);
  std::array<ComplexMatrix, 3> c;
  const int targets[3] = {kPlus, kZero, kMinus};
  for (int i = 0; i < 3; ++i) {
    c[i] = ComplexMatrix::Zero(kDim, kDim);
    c[i](targets[i], kE) = amp;
  }
  return c;
}

ComplexMatrix dressed_hamiltonian(const EitParams& p) {
  ComplexMatrix h = ComplexMatrix::Zero(kDim, kDim);
  h(kE, kPlus) = h(kPlus, kE) = 0.5 * p.omega_sigma_minus;
  h(kE, kMinus) = h(kMinus, kE) = 0.5 * p.omega_sigma_plus;
  h(kPlus, kPlus) = p.delta_sigma_minus();
  h(kMinus, kMinus) = p.delta_sigma_plus();
  return h;
}

RealVector dressed_energies(const EitParams& p) {
  return numerics::eig_hermitian(dressed_hamiltonian(p)).values;
}

std::array<double, 4> bright_cubic(const EitParams& p) {
  const double dp = p.delta_sigma_plus();
  const double dm = p.delta_sigma_minus();
  const double om2 = p.omega_sigma_minus * p.omega_sigma_minus;
  const double op2 = p.omega_sigma_plus * p.omega_sigma_plus;
  // 4x^3 - 4(dp+dm)x^2 + 4 dp dm x - om2 x + om2 dp - op2 x + op2 dm
  return {4.0, -4.0 * (dp + dm), 4.0 * dp * dm - om2 - op2, om2 * dp + op2 * dm};
}

double dressed_stark_shift(const EitParams& p, DressedBranch branch) {
  const double bare =
      branch == DressedBranch::kSigmaPlus ? p.delta_sigma_plus() : p.delta_sigma_minus();
  const double coupling =
      branch == DressedBranch::kSigmaPlus ? p.omega_sigma_plus : p.omega_sigma_minus;
  if (!(coupling > 0.0)) {
    // Uncoupled leg: the bare level is itself an eigenvalue.
    return 0.0;
  }
  const RealVector e = dressed_energies(p);
  // The |0> level sits at exactly 0 and is not part of either drive leg.
  double best = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  double pick = 0.0;
  bool zero_skipped = false;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (!zero_skipped && std::abs(e[i]) <= 1e-12 * std::max(1.0, e.cwiseAbs().maxCoeff())) {
      zero_skipped = true;
      continue;
    }
    const double dist = std::abs(e[i] - bare);
    if (dist < best) {
      second = best;
      best = dist;
      pick = e[i];
    } else if (dist < second) {
      second = dist;
    }
  }
  const double scale = std::max({std::abs(bare), coupling, 1.0});
  if (std::abs(second - best) <= 1e-9 * scale) {
    std::ostringstream msg;
    msg << "dressed_stark_shift: two dressed levels are equidistant from the bare level at "
        << bare;
    throw AmbiguityError(msg.str());
  }
  return pick - bare;
}

namespace {

// Level adiabatically connected to the bare level: eigenvalues of the
// e/+/- block keep the rank order of (0, delta_sigma_plus, delta_sigma_minus).
double connected_shift(const EitParams& p, DressedBranch branch) {
  const double bare =
      branch == DressedBranch::kSigmaPlus ? p.delta_sigma_plus() : p.delta_sigma_minus();
  const double other =
      branch == DressedBranch::kSigmaPlus ? p.delta_sigma_minus() : p.delta_sigma_plus();
  int rank = 0;
  if (bare > 0.0) ++rank;
  if (bare > other) ++rank;
  ComplexMatrix h = dressed_hamiltonian(p);
  const int keep[3] = {kE, kPlus, kMinus};
  ComplexMatrix sub(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) sub(i, j) = h(keep[i], keep[j]);
  return numerics::eig_hermitian(sub).values[rank] - bare;
}

}  // namespace

double calibrate_stark_shift(EitParams& p, double target, DressedBranch branch) {
  if (!(target > 0.0)) throw ContractViolation("calibrate_stark_shift: target must be > 0");
  const EitParams base = p;
  auto shift_at = [&](double s) {
    EitParams q = base;
    q.omega_sigma_plus *= s;
    q.omega_sigma_minus *= s;
    q.omega_pi *= s;
    return connected_shift(q, branch);
  };
  if (shift_at(1.0) == 0.0) {
    throw ContractViolation("calibrate_stark_shift: the chosen drive leg is uncoupled");
  }
  // The shift grows monotonically with the drive strength; bracket then bisect.
  double lo = 0.0;
  double hi = 1.0;
  int guard = 0;
  while (shift_at(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 60) throw NonConvergenceError("calibrate_stark_shift: target not reachable");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (shift_at(mid) < target ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  p.omega_sigma_plus *= s;
  p.omega_sigma_minus *= s;
  p.omega_pi *= s;
  return s;
}

}  // namespace eitcool::atom4
