#include "eitcool/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "eitcool/errors.hpp"
#include "eitcool/units.hpp"

namespace eitcool::crystal {

double CrystalConfig::q() const { return charge == 0.0 ? units::kElementaryCharge : charge; }

void CrystalConfig::validate() const {
  if (n_ions < 1) throw ContractViolation("CrystalConfig: n_ions must be >= 1");
  if (!(mass > 0.0)) throw ContractViolation("CrystalConfig: mass must be > 0");
  if (!(omega_x > 0.0) || !(omega_y > 0.0) || !(omega_z > 0.0)) {
    throw ContractViolation("CrystalConfig: trap frequencies must be > 0");
  }
  if (restarts < 0) throw ContractViolation("CrystalConfig: restarts must be >= 0");
}

double length_scale(const CrystalConfig& c) {
  const double k = c.q() * c.q() / (4.0 * units::kPi * units::kEpsilon0 * c.mass);
  return std::cbrt(k / (c.omega_z * c.omega_z));
}

namespace {

// Dimensionless in-plane problem: V = sum (a x^2 + z^2) / 2 + sum_{i<j} 1/r_ij,
// coordinates stored as (x_0, z_0, x_1, z_1, ...).
struct Plane {
  int n;
  double a;  // (omega_x / omega_z)^2

  double energy(const RealVector& u) const {
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      v += 0.5 * (a * u[2 * i] * u[2 * i] + u[2 * i + 1] * u[2 * i + 1]);
      for (int j = i + 1; j < n; ++j) {
        v += 1.0 / std::hypot(u[2 * i] - u[2 * j], u[2 * i + 1] - u[2 * j + 1]);
      }
    }
    return v;
  }

  RealVector gradient(const RealVector& u) const {
    RealVector g(2 * n);
    for (int i = 0; i < n; ++i) {
      g[2 * i] = a * u[2 * i];
      g[2 * i + 1] = u[2 * i + 1];
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double dx = u[2 * i] - u[2 * j], dz = u[2 * i + 1] - u[2 * j + 1];
        const double r = std::hypot(dx, dz);
        const double r3 = r * r * r;
        g[2 * i] -= dx / r3;
        g[2 * i + 1] -= dz / r3;
        g[2 * j] += dx / r3;
        g[2 * j + 1] += dz / r3;
      }
    }
    return g;
  }

  RealMatrix hessian(const RealVector& u) const {
    RealMatrix h = RealMatrix::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      h(2 * i, 2 * i) = a;
      h(2 * i + 1, 2 * i + 1) = 1.0;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d[2] = {u[2 * i] - u[2 * j], u[2 * i + 1] - u[2 * j + 1]};
        const double r = std::hypot(d[0], d[1]);
        const double r3 = r * r * r, r5 = r3 * r * r;
        for (int p = 0; p < 2; ++p) {
          for (int q = 0; q < 2; ++q) {
            const double t = 3.0 * d[p] * d[q] / r5 - (p == q ? 1.0 / r3 : 0.0);
            h(2 * i + p, 2 * i + q) += t;
            h(2 * j + p, 2 * j + q) += t;
            h(2 * i + p, 2 * j + q) -= t;
            h(2 * j + p, 2 * i + q) -= t;
          }
        }
      }
    }
    return h;
  }
};

constexpr double kGradientTol = 1e-10;

struct Descent {
  RealVector u;
  double energy = std::numeric_limits<double>::infinity();
  double max_gradient = std::numeric_limits<double>::infinity();
  bool ok = false;
};

// Damped Newton on |eigenvalues| of the Hessian, with backtracking on the energy.
Descent newton(const Plane& pl, RealVector u) {
  Descent out;
  double v = pl.energy(u);
  for (int it = 0; it < 500; ++it) {
    const RealVector g = pl.gradient(u);
    const double gmax = g.cwiseAbs().maxCoeff();
    if (gmax < kGradientTol) {
      out.ok = true;
      out.max_gradient = gmax;
      break;
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(pl.hessian(u));
    const RealVector lam = es.eigenvalues();
    const double floor = 1e-6 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    const RealVector gq = es.eigenvectors().transpose() * g;
    RealVector sq(gq.size());
    for (Eigen::Index k = 0; k < gq.size(); ++k) sq[k] = -gq[k] / std::max(std::abs(lam[k]), floor);
    RealVector step = es.eigenvectors() * sq;
    // keep ions from jumping through one another
    const double smax = step.cwiseAbs().maxCoeff();
    if (smax > 0.5) step *= 0.5 / smax;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const RealVector trial = u + t * step;
      const double vt = pl.energy(trial);
      if (std::isfinite(vt) && vt <= v + 1e-4 * t * g.dot(step)) {
        u = trial;
        v = vt;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // at rounding level of the energy: accept a pure Newton step if it
      // reduces the gradient
      const RealVector trial = u + step;
      if (pl.gradient(trial).cwiseAbs().maxCoeff() < gmax) {
        u = trial;
        v = pl.energy(u);
      } else {
        out.max_gradient = gmax;
        break;
      }
    }
  }
  out.u = u;
  out.energy = v;
  if (!out.ok) out.max_gradient = pl.gradient(u).cwiseAbs().maxCoeff();
  if (out.ok) {
    // in-plane minimum, not a saddle
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(pl.hessian(u), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-8 * es.eigenvalues().cwiseAbs().maxCoeff()) out.ok = false;
  }
  return out;
}

RealVector hexagonal_seed(int n, std::mt19937_64& rng) {
  std::vector<std::pair<double, double>> sites;
  const int r = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))) + 2;
  for (int i = -r; i <= r; ++i) {
    for (int j = -r; j <= r; ++j) {
      sites.push_back({i + 0.5 * j, j * std::sqrt(3.0) / 2.0});
    }
  }
  std::stable_sort(sites.begin(), sites.end(), [](const auto& p, const auto& q) {
    return std::hypot(p.first, p.second) < std::hypot(q.first, q.second);
  });
  std::normal_distribution<double> jitter(0.0, 0.02);
  RealVector u(2 * n);
  for (int k = 0; k < n; ++k) {
    u[2 * k] = 1.2 * sites[k].first + jitter(rng);
    u[2 * k + 1] = 1.2 * sites[k].second + jitter(rng);
  }
  return u;
}

RealVector random_seed(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, units::kTwoPi);
  std::uniform_real_distribution<double> rad(0.0, 1.0);
  const double radius = 1.5 * std::sqrt(static_cast<double>(n));
  RealVector u(2 * n);
  for (int k = 0; k < n; ++k) {
    const double rr = radius * std::sqrt(rad(rng)), th = ang(rng);
    u[2 * k] = rr * std::cos(th);
    u[2 * k + 1] = rr * std::sin(th);
  }
  return u;
}

}  // namespace

Equilibrium equilibrium_positions(const CrystalConfig& c) {
  c.validate();
  const double ell = length_scale(c);
  const Plane pl{c.n_ions, (c.omega_x / c.omega_z) * (c.omega_x / c.omega_z)};
  Equilibrium eq;
  if (c.n_ions == 1) {
    eq.positions = {Position{}};
    eq.accepted_from = 0;
    return eq;
  }

  const int seeds = c.restarts + 1;
  std::vector<Descent> runs(static_cast<std::size_t>(seeds));
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 rng(c.seed * 1000003ULL + static_cast<std::uint64_t>(s));
    const RealVector u0 = s == 0 ? hexagonal_seed(c.n_ions, rng) : random_seed(c.n_ions, rng);
    runs[static_cast<std::size_t>(s)] = newton(pl, u0);
  }

  int best = -1;
  for (int s = 0; s < seeds; ++s) {
    const auto& r = runs[static_cast<std::size_t>(s)];
    if (!r.ok) continue;
    // equal energies within rounding keep the earlier seed
    if (best < 0 || r.energy < runs[static_cast<std::size_t>(best)].energy - 1e-12 * std::abs(r.energy)) {
      best = s;
    }
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "equilibrium_positions: no stationary minimum found from " << seeds << " seeds";
    throw StructuralSearchError(msg.str());
  }
  const Descent& r = runs[static_cast<std::size_t>(best)];
  double cx = 0.0, cz = 0.0;
  for (int k = 0; k < c.n_ions; ++k) {
    cx += r.u[2 * k];
    cz += r.u[2 * k + 1];
  }
  cx /= c.n_ions;
  cz /= c.n_ions;
  eq.positions.resize(static_cast<std::size_t>(c.n_ions));
  for (int k = 0; k < c.n_ions; ++k) {
    eq.positions[k] = {(r.u[2 * k] - cx) * ell, (r.u[2 * k + 1] - cz) * ell};
  }
  eq.energy = r.energy;
  eq.max_gradient = r.max_gradient;
  eq.accepted_from = best;
  return eq;
}

ModeDecomposition transverse_modes(const CrystalConfig& c, const std::vector<Position>& positions) {
  c.validate();
  const int n = c.n_ions;
  if (static_cast<int>(positions.size()) != n) {
    throw ContractViolation("transverse_modes: position count does not match n_ions");
  }
  const double ell = length_scale(c);
  const Plane pl{n, (c.omega_x / c.omega_z) * (c.omega_x / c.omega_z)};
  RealVector u(2 * n);
  for (int k = 0; k < n; ++k) {
    u[2 * k] = positions[k].x / ell;
    u[2 * k + 1] = positions[k].z / ell;
  }
  if (n > 1 && pl.gradient(u).cwiseAbs().maxCoeff() > 1e-8) {
    throw ContractViolation("transverse_modes: positions are not an equilibrium");
  }

  const double kappa = c.q() * c.q() / (4.0 * units::kPi * units::kEpsilon0 * c.mass);
  RealMatrix k = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = c.omega_y * c.omega_y;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double r = std::hypot(positions[i].x - positions[j].x, positions[i].z - positions[j].z);
      const double t = kappa / (r * r * r);
      k(i, i) -= t;
      k(i, j) = t;
    }
  }
  const auto e = numerics::eig_hermitian(k.cast<Complex>());
  ModeDecomposition out;
  out.positions = positions;
  out.hessian = k;
  out.frequencies.resize(n);
  out.b.resize(n, n);
  for (int m = 0; m < n; ++m) {
    const double lam = e.values[m];
    if (lam < 0.0) {
      std::ostringstream msg;
      msg << "transverse_modes: mode " << m << " has negative eigenvalue " << lam
          << " (rad/s)^2; the planar crystal is unstable";
      throw InstabilityError(msg.str(), m);
    }
    out.frequencies[m] = std::sqrt(lam);
    // Eigenvectors of a real symmetric matrix: drop the arbitrary complex phase.
    ComplexVector v = e.vectors.col(m);
    Eigen::Index piv = 0;
    v.cwiseAbs().maxCoeff(&piv);
    v *= std::abs(v[piv]) / v[piv];
    RealVector b = v.real();
    b /= b.norm();
    const double sum = b.sum();
    if (sum < -1e-8 || (std::abs(sum) <= 1e-8 && b[piv] < 0)) b = -b;
    out.b.col(m) = b;
  }
  return out;
}

std::string to_json(const CrystalConfig& c, const Equilibrium& eq, const ModeDecomposition& modes) {
  nlohmann::ordered_json j;
  j["n_ions"] = c.n_ions;
  j["trap_MHz"] = {units::to_mhz(c.omega_x), units::to_mhz(c.omega_y), units::to_mhz(c.omega_z)};
  j["mass_kg"] = c.mass;
  j["charge_C"] = c.q();
  j["seed"] = c.seed;
  j["restarts"] = c.restarts;
  j["accepted_from"] = eq.accepted_from;
  j["max_gradient"] = eq.max_gradient;
  j["constants"] = {{"hbar", units::kHbar},
                    {"elementary_charge", units::kElementaryCharge},
                    {"epsilon0", units::kEpsilon0},
                    {"amu", units::kAmu}};
  auto& pos = j["positions_um"] = nlohmann::ordered_json::array();
  for (const auto& p : eq.positions) pos.push_back({p.x * 1e6, p.z * 1e6});
  auto& freq = j["frequencies_MHz"] = nlohmann::ordered_json::array();
  for (Eigen::Index m = 0; m < modes.frequencies.size(); ++m) {
    freq.push_back(units::to_mhz(modes.frequencies[m]));
  }
  // participation[m][j] = b_j^m
  auto& part = j["participation"] = nlohmann::ordered_json::array();
  for (Eigen::Index m = 0; m < modes.b.cols(); ++m) {
    std::vector<double> col(modes.b.rows());
    for (Eigen::Index r = 0; r < modes.b.rows(); ++r) col[r] = modes.b(r, m);
    part.push_back(col);
  }
  return j.dump(2);
}

}  // namespace eitcool::crystal
