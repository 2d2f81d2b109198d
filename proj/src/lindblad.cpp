#include "eitcool/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/SparseCore>
#include <omp.h>

#include "eitcool/errors.hpp"

namespace eitcool::lindblad {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

void LindbladSystem::validate() const {
  space.validate();
  const int d = space.total();
  if (hamiltonian.rows() != d || hamiltonian.cols() != d) {
    throw ContractViolation("LindbladSystem: Hamiltonian dimension does not match the space");
  }
  const double scale = std::max(1.0, hamiltonian.cwiseAbs().maxCoeff());
  if (numerics::hermitian_defect(hamiltonian) > 1e-10 * scale) {
    throw ContractViolation("LindbladSystem: Hamiltonian is not Hermitian");
  }
  for (const auto& c : collapse) {
    if (c.rows() != d || c.cols() != d) {
      throw ContractViolation("LindbladSystem: collapse operator dimension does not match");
    }
  }
}

// ---------------------------------------------------------------------------
// Structured generator

namespace {

enum class BlockKind { kZero, kDiagonal, kSparse, kDense };

struct Entry {
  int row;
  int col;
  Complex value;
};

struct Block {
  BlockKind kind = BlockKind::kZero;
  ComplexVector diag;
  SparseMatrix sparse;
  std::vector<Entry> entries;  // diagonal and sparse kinds
  int group = -1;     // dense: index into the shared matrix list
  Complex scale = 1;  // dense: block = scale * group matrix
};

// Dense blocks proportional to an earlier one reuse its matrix.
int find_group(const std::vector<ComplexMatrix>& groups, const ComplexMatrix& m, Complex& scale) {
  Eigen::Index r = 0, c = 0;
  const double mmax = m.cwiseAbs().maxCoeff(&r, &c);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const ComplexMatrix& ref = groups[g];
    if (std::abs(ref(r, c)) == 0.0) continue;
    const Complex s = m(r, c) / ref(r, c);
    if ((m - s * ref).cwiseAbs().maxCoeff() <= 1e-14 * mmax) {
      scale = s;
      return static_cast<int>(g);
    }
  }
  return -1;
}

Block classify(const ComplexMatrix& m, std::vector<ComplexMatrix>* groups) {
  Block b;
  const Eigen::Index n = m.rows();
  Eigen::Index nnz = 0;
  bool diagonal = true;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (m(i, j) != Complex(0.0)) {
        ++nnz;
        if (i != j) diagonal = false;
        b.entries.push_back({static_cast<int>(i), static_cast<int>(j), m(i, j)});
      }
    }
  }
  if (nnz == 0) return b;
  if (diagonal) {
    b.kind = BlockKind::kDiagonal;
    b.diag = m.diagonal();
    return b;
  }
  if (groups == nullptr || nnz * 8 <= n * n) {
    b.kind = BlockKind::kSparse;
    b.sparse = m.sparseView(Complex(0.0), 0.0);
    b.sparse.makeCompressed();
    return b;
  }
  b.kind = BlockKind::kDense;
  b.entries.clear();
  Complex s = 1.0;
  const int g = find_group(*groups, m, s);
  if (g >= 0) {
    b.group = g;
    b.scale = s;
  } else {
    groups->push_back(m);
    b.group = static_cast<int>(groups->size()) - 1;
  }
  return b;
}

template <class Src, class Dst>
void add_left_product(const Block& b, const Src& src, Dst&& dst, Complex factor) {
  switch (b.kind) {
    case BlockKind::kZero:
      break;
    case BlockKind::kDiagonal:
      dst.noalias() += factor * (b.diag.asDiagonal() * src);
      break;
    case BlockKind::kSparse:
      dst.noalias() += factor * (b.sparse * src);
      break;
    case BlockKind::kDense:
      break;  // handled through groups
  }
}

ComplexMatrix left_apply(const Block& b, const std::vector<ComplexMatrix>& groups,
                         const ComplexMatrix& src) {
  switch (b.kind) {
    case BlockKind::kZero:
      return ComplexMatrix::Zero(src.rows(), src.cols());
    case BlockKind::kDiagonal:
      return b.diag.asDiagonal() * src;
    case BlockKind::kSparse:
      return b.sparse * src;
    case BlockKind::kDense:
      return b.scale * (groups[static_cast<std::size_t>(b.group)] * src);
  }
  return src;
}

// src * b^dagger
ComplexMatrix right_apply_adjoint(const Block& b, const std::vector<ComplexMatrix>& groups,
                                  const ComplexMatrix& src) {
  switch (b.kind) {
    case BlockKind::kZero:
      return ComplexMatrix::Zero(src.rows(), src.cols());
    case BlockKind::kDiagonal:
      return src * b.diag.conjugate().asDiagonal();
    case BlockKind::kSparse:
      return src * b.sparse.adjoint();
    case BlockKind::kDense:
      return std::conj(b.scale) * (src * groups[static_cast<std::size_t>(b.group)].adjoint());
  }
  return src;
}

// One grouped dense product: out_i += sum over terms of coeff * M * rho_k.
// Destination mode: one product per row block, sources summed first.
// Source mode: one product per source block, result scattered.
struct DensePlan {
  int group = 0;
  bool by_destination = true;
  int anchor = 0;  // destination row block (by_destination) or source block
  std::vector<std::pair<int, Complex>> terms;  // (source or destination, coeff)
};

}  // namespace

struct Generator::Impl {
  int d = 0;
  int nb = 1;  // blocks along the first subsystem
  int n = 0;   // block size
  Exec exec = Exec::kSerial;

  std::vector<Block> heff;                 // nb x nb, row-major
  std::vector<ComplexMatrix> heff_groups;  // shared dense matrices
  std::vector<DensePlan> plans;

  struct CollapseBlock {
    int row = 0;
    int col = 0;
    Block block;
  };
  std::vector<std::vector<CollapseBlock>> collapse;
  std::vector<ComplexMatrix> collapse_groups;

  double slowest = 0;
  int products = 0;

  void build(const LindbladSystem& sys) {
    sys.validate();
    d = sys.dim();
    nb = sys.space.subsystems() > 1 ? sys.space.dims.front() : 1;
    n = d / nb;

    ComplexMatrix h = sys.hamiltonian;
    slowest = std::numeric_limits<double>::infinity();
    for (const auto& c : sys.collapse) {
      const ComplexMatrix cdc = c.adjoint() * c;
      h -= Complex(0.0, 0.5) * cdc;
      const double rate = cdc.cwiseAbs().maxCoeff();
      if (rate > 0.0) slowest = std::min(slowest, rate);
    }
    if (!std::isfinite(slowest)) slowest = 0.0;

    heff.resize(static_cast<std::size_t>(nb * nb));
    for (int i = 0; i < nb; ++i) {
      for (int k = 0; k < nb; ++k) {
        heff[static_cast<std::size_t>(i * nb + k)] =
            classify(h.block(i * n, k * n, n, n), &heff_groups);
      }
    }
    plan_dense();

    for (const auto& c : sys.collapse) {
      std::vector<CollapseBlock> blocks;
      for (int i = 0; i < nb; ++i) {
        for (int k = 0; k < nb; ++k) {
          Block b = classify(c.block(i * n, k * n, n, n), &collapse_groups);
          if (b.kind != BlockKind::kZero) blocks.push_back({i, k, std::move(b)});
        }
      }
      if (!blocks.empty()) collapse.push_back(std::move(blocks));
    }
  }

  void plan_dense() {
    plans.clear();
    products = 0;
    for (int g = 0; g < static_cast<int>(heff_groups.size()); ++g) {
      std::map<int, std::vector<std::pair<int, Complex>>> by_dst, by_src;
      for (int i = 0; i < nb; ++i) {
        for (int k = 0; k < nb; ++k) {
          const Block& b = heff[static_cast<std::size_t>(i * nb + k)];
          if (b.kind == BlockKind::kDense && b.group == g) {
            by_dst[i].push_back({k, b.scale});
            by_src[k].push_back({i, b.scale});
          }
        }
      }
      const bool dst = by_dst.size() <= by_src.size();
      for (auto& [anchor, terms] : dst ? by_dst : by_src) {
        plans.push_back({g, dst, anchor, terms});
      }
      products += static_cast<int>(dst ? by_dst.size() : by_src.size());
    }
    products *= nb;
  }

  // Column block j of B = -i Heff rho.
  void heff_column(const Eigen::Ref<const ComplexMatrix>& rho, ComplexMatrix& out, int j) const {
    const Complex mi(0.0, -1.0);
    for (int i = 0; i < nb; ++i) out.block(i * n, j * n, n, n).setZero();
    for (int i = 0; i < nb; ++i) {
      for (int k = 0; k < nb; ++k) {
        const Block& b = heff[static_cast<std::size_t>(i * nb + k)];
        add_left_product(b, rho.block(k * n, j * n, n, n), out.block(i * n, j * n, n, n), mi);
      }
    }
    ComplexMatrix tmp(n, n);
    for (const auto& plan : plans) {
      const ComplexMatrix& m = heff_groups[static_cast<std::size_t>(plan.group)];
      if (plan.by_destination) {
        tmp.setZero();
        for (const auto& [k, coeff] : plan.terms) tmp += coeff * rho.block(k * n, j * n, n, n);
        out.block(plan.anchor * n, j * n, n, n).noalias() += mi * (m * tmp);
      } else {
        tmp.noalias() = m * rho.block(plan.anchor * n, j * n, n, n);
        for (const auto& [i, coeff] : plan.terms) {
          out.block(i * n, j * n, n, n) += (mi * coeff) * tmp;
        }
      }
    }
  }

  // Column block j of sum_c c rho c^dagger, added into out.
  void jump_column(const Eigen::Ref<const ComplexMatrix>& rho, Eigen::Ref<ComplexMatrix>& out,
                   int j) const {
    for (const auto& blocks : collapse) {
      for (const auto& right : blocks) {
        if (right.row != j) continue;
        for (const auto& left : blocks) {
          if (left.block.kind != BlockKind::kDense && right.block.kind != BlockKind::kDense) {
            // out += L X R^dagger entry by entry: nnz(L) * nnz(R) terms
            auto dst = out.block(left.row * n, j * n, n, n);
            const auto x = rho.block(left.col * n, right.col * n, n, n);
            for (const Entry& r : right.block.entries) {
              const Complex rc = std::conj(r.value);
              for (const Entry& l : left.block.entries) {
                dst(l.row, r.row) += l.value * x(l.col, r.col) * rc;
              }
            }
            continue;
          }
          const ComplexMatrix t =
              left_apply(left.block, collapse_groups,
                         rho.block(left.col * n, right.col * n, n, n));
          out.block(left.row * n, j * n, n, n) +=
              right_apply_adjoint(right.block, collapse_groups, t);
        }
      }
    }
  }

  void apply(const Eigen::Ref<const ComplexMatrix>& rho, Eigen::Ref<ComplexMatrix> drho) const {
    if (rho.rows() != d || rho.cols() != d || drho.rows() != d || drho.cols() != d) {
      throw ContractViolation("Generator::apply: state dimension mismatch");
    }
    // Reused across calls: states above ~100 x 100 would otherwise be mapped
    // and unmapped by the allocator on every evaluation.
    thread_local ComplexMatrix b;
    b.resize(d, d);
    if (exec == Exec::kParallel && nb > 1) {
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
      for (int j = 0; j < nb; ++j) heff_column(rho, b, j);
    } else {
      for (int j = 0; j < nb; ++j) heff_column(rho, b, j);
    }
    drho.noalias() = b + b.adjoint();
    if (exec == Exec::kParallel && nb > 1) {
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
      for (int j = 0; j < nb; ++j) jump_column(rho, drho, j);
    } else {
      for (int j = 0; j < nb; ++j) jump_column(rho, drho, j);
    }
  }
};

Generator::Generator(const LindbladSystem& sys, Exec exec) : impl_(std::make_unique<Impl>()) {
  impl_->exec = exec;
  impl_->build(sys);
}
Generator::~Generator() = default;
Generator::Generator(Generator&&) noexcept = default;
Generator& Generator::operator=(Generator&&) noexcept = default;

int Generator::dim() const { return impl_->d; }
Exec Generator::exec() const { return impl_->exec; }
void Generator::set_exec(Exec exec) { impl_->exec = exec; }
int Generator::dense_products() const { return impl_->products; }
double Generator::slowest_rate() const { return impl_->slowest; }

void Generator::apply(Eigen::Ref<const ComplexMatrix> rho, Eigen::Ref<ComplexMatrix> drho) const {
  impl_->apply(rho, drho);
}

ComplexMatrix Generator::apply(Eigen::Ref<const ComplexMatrix> rho) const {
  ComplexMatrix out(impl_->d, impl_->d);
  impl_->apply(rho, out);
  return out;
}

// ---------------------------------------------------------------------------
// Reference forms

ComplexMatrix rhs_reference(const LindbladSystem& sys, const ComplexMatrix& rho) {
  sys.validate();
  const Complex i(0.0, 1.0);
  ComplexMatrix out = -i * (sys.hamiltonian * rho - rho * sys.hamiltonian);
  for (const auto& c : sys.collapse) {
    const ComplexMatrix cdc = c.adjoint() * c;
    out += c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
  }
  return out;
}

ComplexVector vec(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

ComplexMatrix unvec(const ComplexVector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) {
    throw ContractViolation("unvec: length is not dim^2");
  }
  return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

namespace {

// Kronecker product a (x) b.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

ComplexMatrix liouvillian(const LindbladSystem& sys) {
  sys.validate();
  const int d = sys.dim();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  const Complex i(0.0, 1.0);
  // vec(A X B) = (B^T (x) A) vec(X)
  ComplexMatrix l = -i * (kron(id, sys.hamiltonian) - kron(sys.hamiltonian.transpose(), id));
  for (const auto& c : sys.collapse) {
    const ComplexMatrix cdc = c.adjoint() * c;
    l += kron(c.conjugate(), c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id);
  }
  return l;
}

// ---------------------------------------------------------------------------
// Evolution

namespace {

numerics::LinearRhs matrix_rhs(const Generator& gen, int d) {
  return [&gen, d](const ComplexVector& y, ComplexVector& dy) {
    dy.resize(static_cast<Eigen::Index>(d) * d);
    gen.apply(Eigen::Map<const ComplexMatrix>(y.data(), d, d),
              Eigen::Map<ComplexMatrix>(dy.data(), d, d));
  };
}

ops::DensityMatrix to_density(const ops::HilbertSpace& space, const ComplexVector& y, int d) {
  ops::DensityMatrix out{space, numerics::symmetrize(unvec(y, d))};
  return out;
}

void check_rho0(const LindbladSystem& sys, const ops::DensityMatrix& rho0) {
  if (rho0.matrix.rows() != sys.dim() || rho0.matrix.cols() != sys.dim()) {
    throw ContractViolation("evolve: rho0 dimension does not match the system");
  }
  rho0.validate();
}

}  // namespace

void evolve(const LindbladSystem& sys, const ops::DensityMatrix& rho0,
            const std::vector<double>& t_list, const StateObserver& observe,
            const EvolveOptions& options) {
  check_rho0(sys, rho0);
  const Generator gen(sys, options.exec);
  const int d = sys.dim();

  numerics::OdeSpec spec;
  spec.t_list = t_list;
  spec.rel_tol = options.rel_tol;
  spec.abs_tol = options.abs_tol;
  spec.rhs = matrix_rhs(gen, d);
  numerics::integrate_ode(spec, vec(rho0.matrix), [&](std::size_t idx, double t, const ComplexVector& y) {
    if (observe) observe(idx, t, to_density(sys.space, y, d));
  });
}

std::vector<ops::DensityMatrix> evolve(const LindbladSystem& sys, const ops::DensityMatrix& rho0,
                                       const std::vector<double>& t_list,
                                       const EvolveOptions& options) {
  std::vector<ops::DensityMatrix> out(t_list.size());
  evolve(sys, rho0, t_list, [&](std::size_t i, double, const ops::DensityMatrix& r) { out[i] = r; },
         options);
  return out;
}

// ---------------------------------------------------------------------------
// Steady state

namespace {

double generator_scale(const LindbladSystem& sys) {
  double s = sys.hamiltonian.cwiseAbs().maxCoeff();
  for (const auto& c : sys.collapse) s = std::max(s, (c.adjoint() * c).cwiseAbs().maxCoeff());
  return std::max(s, std::numeric_limits<double>::min());
}

SteadyState null_space_steady(const LindbladSystem& sys) {
  const int d = sys.dim();
  if (d > kNullSpaceMaxDim) {
    std::ostringstream msg;
    msg << "steadystate: null_space method limited to dim <= " << kNullSpaceMaxDim << " (got " << d
        << "); use long_time";
    throw CapacityError(msg.str());
  }
  const double scale = generator_scale(sys);
  const ComplexMatrix l = liouvillian(sys) / scale;

  Eigen::FullPivLU<ComplexMatrix> lu(l);
  lu.setThreshold(1e-11);
  const int kernel = static_cast<int>(lu.dimensionOfKernel());
  if (kernel != 1) {
    std::ostringstream msg;
    msg << "steadystate: Liouvillian kernel has dimension " << kernel;
    throw NonUniqueSteadyStateError(msg.str(), kernel);
  }

  // Replace the first equation by the trace condition.
  ComplexMatrix a = l;
  a.row(0).setZero();
  for (int k = 0; k < d; ++k) a(0, k * d + k) = 1.0;
  ComplexVector rhs = ComplexVector::Zero(static_cast<Eigen::Index>(d) * d);
  rhs[0] = 1.0;
  const ComplexVector x = a.partialPivLu().solve(rhs);

  SteadyState out;
  out.rho = ops::DensityMatrix{sys.space, numerics::symmetrize(unvec(x, d))};
  out.rho.matrix /= out.rho.matrix.trace().real();
  out.residual = (l * vec(out.rho.matrix)).cwiseAbs().maxCoeff();
  return out;
}

SteadyState long_time_steady(const LindbladSystem& sys, const SteadyOptions& opt) {
  const int d = sys.dim();
  const Generator probe(sys);
  const double rate = probe.slowest_rate();
  double t_max = opt.t_max;
  if (t_max <= 0.0) {
    if (rate <= 0.0) throw ContractViolation("steadystate: no dissipation; set t_max explicitly");
    t_max = 50.0 / rate;
  }
  double dt = opt.check_interval;
  if (dt <= 0.0) dt = rate > 0.0 ? std::min(1.0 / rate, t_max / 20.0) : t_max / 20.0;

  ops::DensityMatrix rho;
  if (opt.rho0) {
    rho = *opt.rho0;
  } else {
    rho = ops::DensityMatrix{sys.space, ComplexMatrix::Identity(d, d) / static_cast<double>(d)};
  }

  const Generator gen(sys, opt.evolve.exec);
  numerics::OdeSpec spec;
  spec.rel_tol = opt.evolve.rel_tol;
  spec.abs_tol = opt.evolve.abs_tol;
  spec.rhs = matrix_rhs(gen, d);

  double t = 0.0;
  ComplexVector y = vec(rho.matrix);
  const long checks = std::max(1L, std::lround(std::ceil(t_max / dt * (1.0 - 1e-12))));
  for (long k = 1; k <= checks; ++k) {
    const double t_next = k == checks ? t_max : k * dt;
    spec.t_list = {t, t_next};
    const auto traj = numerics::integrate_ode(spec, y);
    const double change = (traj.back() - y).cwiseAbs().maxCoeff();
    y = traj.back();
    t = t_next;
    if (change < opt.tol) {
      SteadyState out;
      out.rho = to_density(sys.space, y, d);
      out.rho.matrix /= out.rho.matrix.trace().real();
      out.time = t;
      out.residual = gen.apply(out.rho.matrix).cwiseAbs().maxCoeff() / generator_scale(sys);
      return out;
    }
  }
  std::ostringstream msg;
  msg << "steadystate: long-time evolution not settled within t_max = " << t_max << " s";
  throw TimeoutError(msg.str());
}

}  // namespace

SteadyState steadystate(const LindbladSystem& sys, const SteadyOptions& options) {
  sys.validate();
  if (options.method == SteadyMethod::kNullSpace) return null_space_steady(sys);
  return long_time_steady(sys, options);
}

}  // namespace eitcool::lindblad
