#pragma once

#include <array>

#include "eitcool/numerics.hpp"

// Four-level double-EIT system. Basis order is {|e>, |+>, |0>, |->}.
namespace eitcool::atom4 {

inline constexpr int kDim = 4;
inline constexpr int kE = 0;
inline constexpr int kPlus = 1;
inline constexpr int kZero = 2;
inline constexpr int kMinus = 3;

struct EitParams {
  double omega_sigma_plus = 0;   // rad/s
  double omega_sigma_minus = 0;  // rad/s
  double omega_pi = 0;           // rad/s
  double delta_d = 0;            // drive detuning, rad/s
  double delta_p = 0;            // probe detuning, rad/s
  double delta_B = 0;            // Zeeman splitting, rad/s
  double gamma = 0;              // total excited-state decay rate, 1/s

  // Detunings of the |+> and |-> legs. The sigma labels follow
  // delta_sigma_plus = delta_d - delta_B; see README for the sign note.
  double delta_sigma_plus() const { return delta_d - delta_B; }
  double delta_sigma_minus() const { return delta_d + delta_B; }

  void validate() const;
};

ComplexMatrix hamiltonian_rest(const EitParams& p);

struct DarkStates {
  ComplexVector d1;  // ~ omega_pi |+> + omega_sigma_minus |0>
  ComplexVector d2;  // ~ omega_sigma_plus |0> + omega_pi |->
};

DarkStates dark_states(const EitParams& p);

std::array<ComplexMatrix, 3> collapse_ops(const EitParams& p);

/// Drive-only Hamiltonian: probe off, |0> uncoupled.
ComplexMatrix dressed_hamiltonian(const EitParams& p);

/// Eigenvalues of the drive-only Hamiltonian, ascending.
RealVector dressed_energies(const EitParams& p);

/// Coefficients (c3, c2, c1, c0) of
/// 4x(x - Ds+)(x - Ds-) - (x - Ds+) Os-^2 - (x - Ds-) Os+^2.
std::array<double, 4> bright_cubic(const EitParams& p);

enum class DressedBranch {
  kSigmaPlus,   // level nearest delta_sigma_plus (= delta_d - delta_B)
  kSigmaMinus,  // level nearest delta_sigma_minus (= delta_d + delta_B)
};

/// Dressed-state shift of the chosen bare level: (nearest dressed eigenvalue)
/// minus the bare detuning. Throws AmbiguityError when two dressed levels
/// are equidistant from the bare level.
double dressed_stark_shift(const EitParams& p, DressedBranch branch = DressedBranch::kSigmaPlus);

/// Multiplies all three Rabi frequencies by a common factor chosen so that
/// dressed_stark_shift(branch) equals `target`. Returns the factor.
double calibrate_stark_shift(EitParams& p, double target,
                             DressedBranch branch = DressedBranch::kSigmaPlus);

}  // namespace eitcool::atom4
