#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace eitcool {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

}  // namespace eitcool

namespace eitcool::numerics {

/// Largest absolute entry of M - M^dagger.
double hermitian_defect(const ComplexMatrix& m);

/// (M + M^dagger)/2. Used to strip round-off before Hermitian routines.
ComplexMatrix symmetrize(const ComplexMatrix& m);

struct HermitianEigen {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // columns, orthonormal
};

/// Eigen-decomposition of a Hermitian matrix. Throws ContractViolation if
/// `m` is not square or not Hermitian within 1e-10 (relative to its max
/// entry for large matrices).
HermitianEigen eig_hermitian(const ComplexMatrix& m);

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, ascending, repeated roots
/// reported once. Throws ContractViolation when c3 == 0.
std::vector<double> solve_cubic_real(double c3, double c2, double c1, double c0);

// ---------------------------------------------------------------------------
// ODE integration

/// dy/dt = rhs(y); the map must be linear and time independent.
using LinearRhs = std::function<void(const ComplexVector& y, ComplexVector& dydt)>;

struct OdeSpec {
  LinearRhs rhs;
  std::vector<double> t_list;  // strictly increasing; y0 is the state at t_list[0]
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double initial_step = 0.0;   // 0 selects a step from the rhs norm
  long max_steps = 50'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

/// Called once per entry of t_list with the state at exactly that time.
using OdeObserver = std::function<void(std::size_t index, double t, const ComplexVector& y)>;

/// Dormand-Prince 5(4) with PI step control. Steps are clipped so that every
/// requested time is hit exactly. Throws StiffnessError when the step size
/// underflows, carrying the last successfully reached time.
OdeStats integrate_ode(const OdeSpec& spec, const ComplexVector& y0, const OdeObserver& observe);

/// Convenience form that stores the whole trajectory.
std::vector<ComplexVector> integrate_ode(const OdeSpec& spec, const ComplexVector& y0);

// ---------------------------------------------------------------------------
// Nonlinear least squares

struct FitResult {
  RealVector params;
  RealVector sigma;           // 1 sigma from the inverse of J^T J
  double residual_norm = 0;   // sqrt(chi^2)
  bool converged = false;
  int n_iter = 0;
  RealMatrix covariance;
};

struct FitOptions {
  int max_iter = 200;
  double rel_step = 1e-6;          // central-difference step relative to scale
  std::optional<RealVector> scale; // per-parameter scale; defaults to max(|p0_i|, 1)
  double xtol = 1e-12;
  double ftol = 1e-14;
  double max_condition = 1e14;
};

/// Residual vector already divided by the data sigmas.
using ResidualFn = std::function<RealVector(const RealVector& params)>;

FitResult fit_least_squares(const ResidualFn& residuals, const RealVector& p0,
                            const FitOptions& options = {});

struct DataPoint {
  double x = 0;
  double y = 0;
  double sigma = 1;
};

using ModelFn = std::function<double(double x, const RealVector& params)>;

/// chi^2 fit of y(x) = model(x, p). Requires at least as many points as
/// parameters and every sigma > 0.
FitResult fit_least_squares(const ModelFn& model, std::span<const DataPoint> data,
                            const RealVector& p0, const FitOptions& options = {});

}  // namespace eitcool::numerics
