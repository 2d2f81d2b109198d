#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "eitcool/numerics.hpp"
#include "eitcool/operators.hpp"

namespace eitcool::lindblad {

struct LindbladSystem {
  ComplexMatrix hamiltonian;
  std::vector<ComplexMatrix> collapse;
  ops::HilbertSpace space;

  int dim() const { return static_cast<int>(hamiltonian.rows()); }
  void validate() const;
};

enum class Exec { kSerial, kParallel };

/// Right-hand side of the master equation in matrix form.
///
/// The operators are split into blocks along the first subsystem (e.g. the
/// atom in atom x motion). Each block is stored as zero, diagonal, sparse or
/// dense; dense blocks that are scalar multiples of one another share one
/// matrix product per column block. With one subsystem the whole operator is a
/// single block and this reduces to the plain matrix form.
class Generator {
 public:
  explicit Generator(const LindbladSystem& sys, Exec exec = Exec::kSerial);
  ~Generator();
  Generator(Generator&&) noexcept;
  Generator& operator=(Generator&&) noexcept;

  int dim() const;
  Exec exec() const;
  void set_exec(Exec exec);

  /// drho = L(rho) for Hermitian rho (d x d). The Hamiltonian part is formed
  /// as B + B^dagger with B = -i Heff rho, which relies on rho = rho^dagger.
  /// drho must already be d x d; it may alias neither rho nor each other.
  void apply(Eigen::Ref<const ComplexMatrix> rho, Eigen::Ref<ComplexMatrix> drho) const;
  ComplexMatrix apply(Eigen::Ref<const ComplexMatrix> rho) const;

  /// Number of N x N dense products per application (cost diagnostic).
  int dense_products() const;

  /// Smallest nonzero collapse rate max|c^dagger c|, used for time scales.
  double slowest_rate() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Direct -i[H, rho] + sum(c rho c^dagger - {c^dagger c, rho}/2) with full
/// matrix products. Reference for the structured generator.
ComplexMatrix rhs_reference(const LindbladSystem& sys, const ComplexMatrix& rho);

/// Dense d^2 x d^2 Liouvillian acting on column-major vec(rho).
ComplexMatrix liouvillian(const LindbladSystem& sys);

ComplexVector vec(const ComplexMatrix& m);
ComplexMatrix unvec(const ComplexVector& v, int dim);

struct EvolveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  Exec exec = Exec::kSerial;
};

using StateObserver = std::function<void(std::size_t index, double t, const ops::DensityMatrix&)>;

/// Integrates the master equation and reports rho at each t in t_list
/// (rho0 is the state at t_list[0]). Reported states are re-symmetrized.
void evolve(const LindbladSystem& sys, const ops::DensityMatrix& rho0,
            const std::vector<double>& t_list, const StateObserver& observe,
            const EvolveOptions& options = {});

std::vector<ops::DensityMatrix> evolve(const LindbladSystem& sys, const ops::DensityMatrix& rho0,
                                       const std::vector<double>& t_list,
                                       const EvolveOptions& options = {});

enum class SteadyMethod { kNullSpace, kLongTime };

struct SteadyOptions {
  SteadyMethod method = SteadyMethod::kNullSpace;
  // long_time only
  double t_max = 0;           // 0: 50 / slowest collapse rate
  double check_interval = 0;  // 0: 1 / slowest collapse rate, capped at t_max / 20
  double tol = 1e-8;          // max |rho(t + dt) - rho(t)|
  std::optional<ops::DensityMatrix> rho0;  // default: maximally mixed
  EvolveOptions evolve;
};

inline constexpr int kNullSpaceMaxDim = 64;

struct SteadyState {
  ops::DensityMatrix rho;
  double residual = 0;  // max |L rho| in units of the largest generator entry
  double time = 0;      // long_time: evolution time used
};

/// Throws NonUniqueSteadyStateError for a degenerate kernel and TimeoutError
/// when long-time evolution has not settled by t_max.
SteadyState steadystate(const LindbladSystem& sys, const SteadyOptions& options = {});

}  // namespace eitcool::lindblad
