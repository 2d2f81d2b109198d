#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "eitcool/errors.hpp"
#include "eitcool/numerics.hpp"

namespace eitcool::numerics {

double hermitian_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

ComplexMatrix symmetrize(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

HermitianEigen eig_hermitian(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream msg;
    msg << "eig_hermitian: matrix is " << m.rows() << "x" << m.cols() << ", not square";
    throw ContractViolation(msg.str());
  }
  if (m.size() == 0) return {RealVector(0), ComplexMatrix(0, 0)};
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double defect = hermitian_defect(m);
  if (defect > 1e-10 * scale) {
    std::ostringstream msg;
    msg << "eig_hermitian: matrix is not Hermitian (max |M - M^dagger| = " << defect << ")";
    throw ContractViolation(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(symmetrize(m));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eig_hermitian: tridiagonal QR did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

double eval_cubic(double c3, double c2, double c1, double c0, double x) {
  return ((c3 * x + c2) * x + c1) * x + c0;
}

double eval_cubic_derivative(double c3, double c2, double c1, double x) {
  return (3.0 * c3 * x + 2.0 * c2) * x + c1;
}

// Newton polish on the original polynomial; only accepted while |p| drops.
double polish_root(double c3, double c2, double c1, double c0, double x) {
  double px = std::abs(eval_cubic(c3, c2, c1, c0, x));
  for (int it = 0; it < 4 && px > 0.0; ++it) {
    const double d = eval_cubic_derivative(c3, c2, c1, x);
    if (d == 0.0) break;
    const double candidate = x - eval_cubic(c3, c2, c1, c0, x) / d;
    const double pc = std::abs(eval_cubic(c3, c2, c1, c0, candidate));
    if (!(pc < px)) break;
    x = candidate;
    px = pc;
  }
  return x;
}

}  // namespace

std::vector<double> solve_cubic_real(double c3, double c2, double c1, double c0) {
  if (c3 == 0.0) {
    throw ContractViolation("solve_cubic_real: leading coefficient is zero (degenerate order)");
  }
  // Monic form, then rescale x = s*y so the normalized coefficients are O(1).
  const double a0 = c2 / c3;
  const double b0 = c1 / c3;
  const double d0 = c0 / c3;
  double s = std::max({std::abs(a0), std::sqrt(std::abs(b0)), std::cbrt(std::abs(d0))});
  if (s == 0.0) return {0.0};
  const double a = a0 / s;
  const double b = b0 / (s * s);
  const double c = d0 / (s * s * s);

  const double q = (a * a - 3.0 * b) / 9.0;
  const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  const double q3 = q * q * q;

  std::vector<double> roots;
  const double disc = r * r - q3;
  if (q > 0.0 && std::abs(disc) <= 1e-12 * std::max(r * r, q3)) {
    // Double root; both branches below are ill-conditioned here.
    const double sq = std::copysign(std::sqrt(q), r);
    roots = {-2.0 * sq - a / 3.0, sq - a / 3.0};
  } else if (disc < 0.0) {
    const double theta = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
    const double m = -2.0 * std::sqrt(q);
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    roots = {m * std::cos(theta / 3.0) - a / 3.0,
             m * std::cos((theta + kTwoPi) / 3.0) - a / 3.0,
             m * std::cos((theta - kTwoPi) / 3.0) - a / 3.0};
  } else {
    const double big_a = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q3)), r);
    const double big_b = big_a == 0.0 ? 0.0 : q / big_a;
    roots = {big_a + big_b - a / 3.0};
  }

  for (double& x : roots) x = polish_root(c3, c2, c1, c0, x * s);
  std::sort(roots.begin(), roots.end());

  std::vector<double> unique;
  for (double x : roots) {
    if (!unique.empty() && std::abs(x - unique.back()) <= 1e-7 * std::max(s, std::abs(x))) {
      continue;
    }
    unique.push_back(x);
  }
  return unique;
}

}  // namespace eitcool::numerics
