#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eitcool/numerics.hpp"

// Planar ion crystal in a harmonic trap: equilibrium in the x-z plane and
// the transverse (y) normal modes.
namespace eitcool::crystal {

struct CrystalConfig {
  int n_ions = 1;
  double mass = 0;     // kg
  double omega_x = 0;  // rad/s
  double omega_y = 0;  // rad/s, transverse
  double omega_z = 0;  // rad/s
  double charge = 0;   // C; 0 selects one elementary charge
  std::uint64_t seed = 1;
  int restarts = 20;

  double q() const;
  void validate() const;
};

struct Position {
  double x = 0;  // m
  double z = 0;  // m
};

struct Equilibrium {
  std::vector<Position> positions;
  double energy = 0;        // units of M omega_z^2 l^2
  double max_gradient = 0;  // dimensionless
  int accepted_from = -1;   // 0: hexagonal seed, k > 0: random restart k
};

/// Length unit l = (q^2 / (4 pi eps0 M omega_z^2))^(1/3).
double length_scale(const CrystalConfig& c);

/// Lowest-energy stationary point over the seeds. Throws
/// StructuralSearchError when no seed converges.
Equilibrium equilibrium_positions(const CrystalConfig& c);

struct ModeDecomposition {
  RealVector frequencies;  // rad/s, ascending
  RealMatrix b;            // column m is the participation vector of mode m
  std::vector<Position> positions;
  RealMatrix hessian;      // K / (rad/s)^2
};

/// Throws InstabilityError if some transverse eigenvalue is negative, and
/// ContractViolation if the positions are not an equilibrium.
ModeDecomposition transverse_modes(const CrystalConfig& c, const std::vector<Position>& positions);

/// JSON document with positions (um), frequencies (MHz), participation
/// matrix, seed and the constants used.
std::string to_json(const CrystalConfig& c, const Equilibrium& eq, const ModeDecomposition& modes);

}  // namespace eitcool::crystal
