#pragma once

#include <initializer_list>
#include <span>
#include <vector>

#include "eitcool/numerics.hpp"

namespace eitcool::ops {

struct HilbertSpace {
  std::vector<int> dims;  // ordered subsystem dimensions, e.g. {4, n_max + 1}

  int total() const;
  int subsystems() const { return static_cast<int>(dims.size()); }
  void validate() const;
  bool operator==(const HilbertSpace&) const = default;
};

struct DensityMatrix {
  HilbertSpace space;
  ComplexMatrix matrix;

  int dim() const { return static_cast<int>(matrix.rows()); }
  /// Checks Hermiticity (1e-10), unit trace (1e-9) and eigenvalues >= -1e-8.
  void validate() const;
};

struct FockOperators {
  int n_max = 0;
  ComplexMatrix a;
  ComplexMatrix a_dagger;
  ComplexMatrix number;

  explicit FockOperators(int n_max);
  int dim() const { return n_max + 1; }
};

ComplexMatrix identity(int dim);

/// Kronecker product in listed order.
ComplexMatrix tensor(std::span<const ComplexMatrix> ops);
ComplexMatrix tensor(std::initializer_list<ComplexMatrix> ops);

/// Embeds a single-subsystem operator into the full space.
ComplexMatrix embed(const HilbertSpace& space, int index, const ComplexMatrix& op);

struct ThermalState {
  DensityMatrix rho;
  double renormalization = 1.0;  // untruncated weight held by the kept levels
  double deficit = 0.0;          // 1 - renormalization
  bool truncation_warning = false;
};

/// Thermal occupation p_n = nbar^n / (nbar+1)^(n+1), n = 0..n_max, renormalized.
ThermalState thermal_state(int n_max, double nbar);

/// Truncated geometric weights of a thermal state (renormalized); shared with
/// the sideband thermal average.
std::vector<double> thermal_weights(int n_max, double nbar, double* kept_weight = nullptr);

/// Fock cutoff used when none is configured: ceil(6 nbar) + 10, at least 15.
int default_fock_cutoff(double nbar0);

/// exp(i eta (a + a^dagger)) on the truncated space.
ComplexMatrix displacement_exp(const FockOperators& fock, double eta);

DensityMatrix partial_trace(const DensityMatrix& rho, int keep);

Complex expect(const ComplexMatrix& op, const DensityMatrix& rho);

/// Population of the top `levels` Fock states of subsystem `index`.
double top_fock_population(const DensityMatrix& rho, int index, int levels = 2);

/// Threshold above which a motional result is flagged unreliable.
inline constexpr double kTruncationFlagThreshold = 1e-3;

/// Trace distance 0.5 * ||a - b||_1 of two Hermitian matrices.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace eitcool::ops
