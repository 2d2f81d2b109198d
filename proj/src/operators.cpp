#include "eitcool/operators.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "eitcool/errors.hpp"

namespace eitcool::ops {

int HilbertSpace::total() const {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

void HilbertSpace::validate() const {
  if (dims.empty()) throw ContractViolation("HilbertSpace: no subsystems");
  for (int d : dims) {
    if (d < 1) throw ContractViolation("HilbertSpace: subsystem dimension must be >= 1");
  }
}

void DensityMatrix::validate() const {
  space.validate();
  if (matrix.rows() != space.total() || matrix.cols() != space.total()) {
    throw ContractViolation("DensityMatrix: matrix shape does not match its space");
  }
  if (numerics::hermitian_defect(matrix) > 1e-10) {
    throw ContractViolation("DensityMatrix: not Hermitian");
  }
  if (std::abs(matrix.trace() - Complex(1.0)) > 1e-9) {
    throw ContractViolation("DensityMatrix: trace differs from 1");
  }
  const auto eig = numerics::eig_hermitian(matrix);
  if (eig.values.size() > 0 && eig.values.minCoeff() < -1e-8) {
    throw ContractViolation("DensityMatrix: negative eigenvalue");
  }
}

FockOperators::FockOperators(int n)
    : n_max(n),
      a(ComplexMatrix::Zero(n + 1, n + 1)),
      a_dagger(ComplexMatrix::Zero(n + 1, n + 1)),
      number(ComplexMatrix::Zero(n + 1, n + 1)) {
  if (n < 0) throw ContractViolation("FockOperators: n_max must be >= 0");
  for (int k = 1; k <= n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  a_dagger = a.adjoint();
  for (int k = 0; k <= n; ++k) number(k, k) = static_cast<double>(k);
}

ComplexMatrix identity(int dim) { return ComplexMatrix::Identity(dim, dim); }

ComplexMatrix tensor(std::span<const ComplexMatrix> ops) {
  if (ops.empty()) throw ContractViolation("tensor: empty operator list");
  ComplexMatrix out = ops.front();
  if (out.rows() != out.cols()) throw ContractViolation("tensor: operator is not square");
  for (std::size_t k = 1; k < ops.size(); ++k) {
    const ComplexMatrix& b = ops[k];
    if (b.rows() != b.cols()) throw ContractViolation("tensor: operator is not square");
    ComplexMatrix next(out.rows() * b.rows(), out.cols() * b.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = out(i, j) * b;
      }
    }
    out = std::move(next);
  }
  return out;
}

ComplexMatrix tensor(std::initializer_list<ComplexMatrix> ops) {
  return tensor(std::span<const ComplexMatrix>(ops.begin(), ops.size()));
}

ComplexMatrix embed(const HilbertSpace& space, int index, const ComplexMatrix& op) {
  space.validate();
  if (index < 0 || index >= space.subsystems()) {
    throw OutOfRangeError("embed: subsystem index out of range");
  }
  if (op.rows() != space.dims[index] || op.cols() != space.dims[index]) {
    throw ContractViolation("embed: operator dimension does not match subsystem");
  }
  std::vector<ComplexMatrix> factors;
  for (int k = 0; k < space.subsystems(); ++k) {
    factors.push_back(k == index ? op : identity(space.dims[k]));
  }
  return tensor(factors);
}

std::vector<double> thermal_weights(int n_max, double nbar, double* kept_weight) {
  if (!(nbar >= 0.0)) throw ContractViolation("thermal_state: nbar must be >= 0");
  if (n_max < 0) throw ContractViolation("thermal_state: n_max must be >= 0");
  std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double ratio = nbar / (nbar + 1.0);
  double p = 1.0 / (nbar + 1.0);
  double sum = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    w[static_cast<std::size_t>(n)] = p;
    sum += p;
    p *= ratio;
  }
  for (double& x : w) x /= sum;
  if (kept_weight) *kept_weight = sum;
  return w;
}

ThermalState thermal_state(int n_max, double nbar) {
  double kept = 1.0;
  const auto w = thermal_weights(n_max, nbar, &kept);
  ThermalState out;
  out.rho.space = HilbertSpace{{n_max + 1}};
  out.rho.matrix = ComplexMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) out.rho.matrix(n, n) = w[static_cast<std::size_t>(n)];
  out.renormalization = kept;
  out.deficit = 1.0 - kept;
  out.truncation_warning = kept < 0.99;
  return out;
}

int default_fock_cutoff(double nbar0) {
  if (!(nbar0 >= 0.0)) throw ContractViolation("default_fock_cutoff: nbar0 must be >= 0");
  return std::max(15, static_cast<int>(std::ceil(6.0 * nbar0)) + 10);
}

ComplexMatrix displacement_exp(const FockOperators& fock, double eta) {
  const double reach = std::abs(eta) * std::sqrt(static_cast<double>(fock.n_max));
  if (reach > 1.0) {
    std::ostringstream msg;
    msg << "displacement_exp: |eta| sqrt(n_max) = " << reach
        << " exceeds 1; the Fock truncation is too coarse for this eta";
    throw TruncationError(msg.str());
  }
  // exp(i eta X) with X = a + a^dagger real symmetric: diagonalize X.
  const ComplexMatrix x = fock.a + fock.a_dagger;
  const auto eig = numerics::eig_hermitian(x);
  ComplexVector phases(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    phases[k] = std::exp(Complex(0.0, eta * eig.values[k]));
  }
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

DensityMatrix partial_trace(const DensityMatrix& rho, int keep) {
  const HilbertSpace& space = rho.space;
  space.validate();
  if (keep < 0 || keep >= space.subsystems()) {
    throw OutOfRangeError("partial_trace: subsystem index out of range");
  }
  if (rho.matrix.rows() != space.total()) {
    throw ContractViolation("partial_trace: matrix does not match space");
  }
  const int dk = space.dims[keep];
  int inner = 1;  // product of dims after `keep`
  for (int k = keep + 1; k < space.subsystems(); ++k) inner *= space.dims[k];
  const int outer = space.total() / (dk * inner);  // product of dims before `keep`

  DensityMatrix out{HilbertSpace{{dk}}, ComplexMatrix::Zero(dk, dk)};
  for (int i = 0; i < dk; ++i) {
    for (int j = 0; j < dk; ++j) {
      Complex acc = 0.0;
      for (int o = 0; o < outer; ++o) {
        for (int n = 0; n < inner; ++n) {
          const int row = (o * dk + i) * inner + n;
          const int col = (o * dk + j) * inner + n;
          acc += rho.matrix(row, col);
        }
      }
      out.matrix(i, j) = acc;
    }
  }
  return out;
}

Complex expect(const ComplexMatrix& op, const DensityMatrix& rho) {
  if (op.rows() != rho.matrix.rows() || op.cols() != rho.matrix.cols()) {
    throw ContractViolation("expect: operator and density matrix dimensions differ");
  }
  // tr(op rho) without forming the product.
  return (op.transpose().cwiseProduct(rho.matrix)).sum();
}

double top_fock_population(const DensityMatrix& rho, int index, int levels) {
  const DensityMatrix reduced = partial_trace(rho, index);
  const int d = reduced.dim();
  double p = 0.0;
  for (int n = std::max(0, d - levels); n < d; ++n) p += reduced.matrix(n, n).real();
  return p;
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  const auto eig = numerics::eig_hermitian(numerics::symmetrize(a - b));
  return 0.5 * eig.values.cwiseAbs().sum();
}

}  // namespace eitcool::ops
