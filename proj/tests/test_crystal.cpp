#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "eitcool/crystal.hpp"
#include "eitcool/errors.hpp"
#include "eitcool/units.hpp"

using namespace eitcool;
using namespace eitcool::crystal;
using units::mhz;

namespace {

CrystalConfig paper_config(int n = 12) {
  CrystalConfig c;
  c.n_ions = n;
  c.mass = units::kYb171MassAmu * units::kAmu;
  c.omega_x = mhz(0.34);
  c.omega_y = mhz(1.22);
  c.omega_z = mhz(0.42);
  return c;
}

double kappa(const CrystalConfig& c) {
  return c.q() * c.q() / (4.0 * M_PI * units::kEpsilon0 * c.mass);
}

}  // namespace

TEST_CASE("single ion sits at the origin") {
  const auto eq = equilibrium_positions(paper_config(1));
  REQUIRE(eq.positions.size() == 1);
  CHECK(eq.positions[0].x == 0.0);
  CHECK(eq.positions[0].z == 0.0);
  const auto modes = transverse_modes(paper_config(1), eq.positions);
  CHECK(modes.frequencies[0] == doctest::Approx(mhz(1.22)).epsilon(1e-12));
}

TEST_CASE("two ions: closed-form separation and modes") {
  const CrystalConfig c = paper_config(2);
  const auto eq = equilibrium_positions(c);
  // weaker x confinement: the pair aligns along x, M wx^2 d/2 = k M / d^2
  const double d = std::cbrt(2.0 * kappa(c) / (c.omega_x * c.omega_x));
  const double sep = std::hypot(eq.positions[0].x - eq.positions[1].x,
                                eq.positions[0].z - eq.positions[1].z);
  CHECK(sep == doctest::Approx(d).epsilon(1e-9));
  CHECK(std::abs(eq.positions[0].z) < 1e-9 * d);

  const auto modes = transverse_modes(c, eq.positions);
  const double second = std::sqrt(c.omega_y * c.omega_y - 2.0 * kappa(c) / (d * d * d));
  CHECK(modes.frequencies[0] == doctest::Approx(second).epsilon(1e-9));
  CHECK(modes.frequencies[1] == doctest::Approx(c.omega_y).epsilon(1e-9));
}

TEST_CASE("twelve-ion planar crystal") {
  const CrystalConfig c = paper_config();
  const auto eq = equilibrium_positions(c);
  CHECK(eq.max_gradient < 1e-10);
  const auto modes = transverse_modes(c, eq.positions);
  REQUIRE(modes.frequencies.size() == 12);
  // COM is the top mode with uniform participation
  CHECK(std::abs(modes.frequencies[11] / c.omega_y - 1.0) < 1e-9);
  for (int j = 0; j < 12; ++j) CHECK(std::abs(modes.b(j, 11) - 1.0 / std::sqrt(12.0)) < 1e-9);
  for (int m = 1; m < 12; ++m) CHECK(modes.frequencies[m - 1] <= modes.frequencies[m]);
  CHECK(modes.frequencies[0] > 0.0);
  // orthonormal participation matrix
  const RealMatrix bb = modes.b.transpose() * modes.b;
  CHECK((bb - RealMatrix::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-9);
  const RealMatrix bbt = modes.b * modes.b.transpose();
  CHECK((bbt - RealMatrix::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-9);
  // trace identity
  double sum = 0;
  for (int m = 0; m < 12; ++m) sum += modes.frequencies[m] * modes.frequencies[m];
  CHECK(std::abs(sum - modes.hessian.trace()) < 1e-9 * modes.hessian.trace());
  // center of charge
  double cx = 0, cz = 0;
  for (const auto& p : eq.positions) {
    cx += p.x;
    cz += p.z;
  }
  CHECK(std::abs(cx) < 1e-15);
  CHECK(std::abs(cz) < 1e-15);
}

TEST_CASE("the crystal search is deterministic and seed-independent in energy") {
  CrystalConfig c = paper_config();
  const auto a = equilibrium_positions(c);
  const auto b = equilibrium_positions(c);
  CHECK(a.energy == b.energy);
  CHECK(a.positions[3].x == b.positions[3].x);
  c.seed = 99;
  const auto other = equilibrium_positions(c);
  CHECK(other.energy == doctest::Approx(a.energy).epsilon(1e-9));
}

TEST_CASE("mode ratios are invariant under a mass rescaling") {
  CrystalConfig c = paper_config(7);
  const auto m1 = transverse_modes(c, equilibrium_positions(c).positions);
  c.mass *= 3.7;
  const auto m2 = transverse_modes(c, equilibrium_positions(c).positions);
  for (int m = 0; m < 7; ++m) {
    CHECK(m1.frequencies[m] / c.omega_y == doctest::Approx(m2.frequencies[m] / c.omega_y).epsilon(1e-9));
  }
}

TEST_CASE("weak transverse confinement is unstable") {
  CrystalConfig c = paper_config();
  c.omega_y = mhz(0.2);
  const auto eq = equilibrium_positions(c);
  CHECK_THROWS_AS(transverse_modes(c, eq.positions), InstabilityError);

  c = paper_config(3);
  const auto e3 = equilibrium_positions(c);
  auto moved = e3.positions;
  moved[0].x += 1e-7;
  CHECK_THROWS_AS(transverse_modes(c, moved), ContractViolation);
}

TEST_CASE("crystal json") {
  const CrystalConfig c = paper_config(3);
  const auto eq = equilibrium_positions(c);
  const auto modes = transverse_modes(c, eq.positions);
  const auto j = nlohmann::json::parse(to_json(c, eq, modes));
  CHECK(j["positions_um"].size() == 3);
  CHECK(j["frequencies_MHz"].size() == 3);
  CHECK(j["participation"].size() == 3);
  CHECK(j["seed"] == 1);
  CHECK(j["frequencies_MHz"][2].get<double>() == doctest::Approx(1.22).epsilon(1e-9));
}
