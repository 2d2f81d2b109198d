#include <algorithm>
#include <cmath>
#include <sstream>

#include "eitcool/errors.hpp"
#include "eitcool/numerics.hpp"

namespace eitcool::numerics {

namespace {

RealMatrix numeric_jacobian(const ResidualFn& f, const RealVector& p, const RealVector& steps,
                            Eigen::Index m) {
  RealMatrix jac(m, p.size());
  RealVector q = p;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = steps[j];
    q[j] = p[j] + h;
    const RealVector fp = f(q);
    q[j] = p[j] - h;
    const RealVector fm = f(q);
    q[j] = p[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

double condition_of(const RealMatrix& jtj) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(jtj);
  const double hi = es.eigenvalues().maxCoeff();
  const double lo = es.eigenvalues().minCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

FitResult fit_least_squares(const ResidualFn& residuals, const RealVector& p0,
                            const FitOptions& options) {
  if (!residuals) throw ContractViolation("fit_least_squares: residual function is empty");
  const Eigen::Index np = p0.size();
  if (np == 0) throw ContractViolation("fit_least_squares: no parameters");

  RealVector scale(np);
  if (options.scale) {
    if (options.scale->size() != np) {
      throw ContractViolation("fit_least_squares: scale has wrong length");
    }
    scale = options.scale->cwiseAbs();
  } else {
    scale = p0.cwiseAbs().cwiseMax(1.0);
  }
  const RealVector steps = options.rel_step * scale;

  RealVector p = p0;
  RealVector r = residuals(p);
  const Eigen::Index m = r.size();
  if (m < np) {
    std::ostringstream msg;
    msg << "fit_least_squares: " << m << " residuals for " << np << " parameters";
    throw ContractViolation(msg.str());
  }
  if (!r.allFinite()) throw ContractViolation("fit_least_squares: residuals at p0 are not finite");
  double chi2 = r.squaredNorm();

  FitResult result;
  double lambda = 1e-3;
  RealMatrix jac = numeric_jacobian(residuals, p, steps, m);
  int iter = 0;
  bool converged = false;
  for (; iter < options.max_iter; ++iter) {
    const RealMatrix jtj = jac.transpose() * jac;
    const RealVector grad = jac.transpose() * r;
    if (grad.cwiseAbs().maxCoeff() == 0.0 || chi2 == 0.0) {
      converged = true;
      break;
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      RealMatrix a = jtj;
      for (Eigen::Index i = 0; i < np; ++i) {
        a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
      }
      const RealVector delta = a.ldlt().solve(-grad);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const RealVector trial = p + delta;
      const RealVector rt = residuals(trial);
      const double chi2_t = rt.allFinite() ? rt.squaredNorm() : std::numeric_limits<double>::infinity();
      if (chi2_t <= chi2) {
        const double drop = chi2 - chi2_t;
        const bool small_step =
            (delta.cwiseAbs().array() <= options.xtol * (p.cwiseAbs().array() + options.xtol * scale.array()))
                .all();
        p = trial;
        r = rt;
        chi2 = chi2_t;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = true;
        if (small_step || drop <= options.ftol * chi2) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No downhill step at any damping: we sit at a (numerical) minimum.
      converged = true;
      break;
    }
    jac = numeric_jacobian(residuals, p, steps, m);
    if (converged) break;
  }

  const RealMatrix jtj = jac.transpose() * jac;
  const double cond = condition_of(jtj);
  if (!(cond < options.max_condition)) {
    std::ostringstream msg;
    msg << "fit_least_squares: singular Jacobian (condition estimate " << cond << ")";
    throw DegenerateFitError(msg.str(), cond);
  }
  result.covariance = jtj.ldlt().solve(RealMatrix::Identity(np, np));
  result.params = p;
  result.sigma = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  result.residual_norm = std::sqrt(chi2);
  result.converged = converged;
  result.n_iter = iter + (converged ? 1 : 0);
  return result;
}

FitResult fit_least_squares(const ModelFn& model, std::span<const DataPoint> data,
                            const RealVector& p0, const FitOptions& options) {
  if (!model) throw ContractViolation("fit_least_squares: model is empty");
  if (static_cast<Eigen::Index>(data.size()) < p0.size()) {
    throw ContractViolation("fit_least_squares: fewer data points than parameters");
  }
  for (const auto& d : data) {
    if (!(d.sigma > 0.0)) throw ContractViolation("fit_least_squares: sigma must be > 0");
  }
  auto residuals = [&](const RealVector& p) {
    RealVector r(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = (model(data[i].x, p) - data[i].y) / data[i].sigma;
    }
    return r;
  };
  return fit_least_squares(residuals, p0, options);
}

}  // namespace eitcool::numerics
