#include <doctest.h>

#include <cmath>

#include "eitcool/cooling.hpp"
#include "eitcool/errors.hpp"
#include "eitcool/units.hpp"

using namespace eitcool;
using namespace eitcool::cooling;
using atom4::EitParams;
using units::mhz;

namespace {

const double kNu = mhz(2.38);

EitParams operating_point() {
  EitParams p;
  p.gamma = mhz(21);
  p.delta_B = mhz(4.6);
  p.delta_p = mhz(55.6);
  p.omega_sigma_minus = mhz(16.74);
  p.omega_sigma_plus = mhz(18.03);
  p.omega_pi = mhz(6.67);
  p.delta_d = p.delta_p - (p.delta_B + mhz(2.31) - kNu);
  atom4::calibrate_stark_shift(p, mhz(2.31), atom4::DressedBranch::kSigmaMinus);
  return p;
}

MotionalMode yb_mode(int n_max) {
  return MotionalMode::from_physical(kNu, units::kYb171MassAmu * units::kAmu,
                                     units::kYbCoolingWavelengthNm * 1e-9, n_max);
}

std::vector<double> times_us(double end, int points) {
  std::vector<double> t(points + 1);
  for (int k = 0; k <= points; ++k) t[k] = units::us(end * k / points);
  return t;
}

}  // namespace

TEST_CASE("Lamb-Dicke parameter of the single-ion mode") {
  const auto m = yb_mode(10);
  // k sqrt(hbar / 2 M nu) evaluated independently (CODATA 2018 values)
  CHECK(m.eta == doctest::Approx(0.059933324399165634).epsilon(1e-8));
  CHECK_NOTHROW(m.validate());
  MotionalMode bad = m;
  bad.eta *= 1.01;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = m;
  bad.b = RealVector::Constant(2, 1.0);
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("moving-ion Hamiltonian at zero eta decouples") {
  const EitParams p = operating_point();
  MotionalMode m = yb_mode(6);
  m.eta = 0.0;
  const ComplexMatrix h = hamiltonian_moving(p, m);
  const ops::FockOperators f(6);
  const ComplexMatrix expected = ops::tensor({atom4::hamiltonian_rest(p), ops::identity(7)}) +
                                 ops::tensor({ops::identity(4), ComplexMatrix(m.nu * f.number)});
  CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(numerics::hermitian_defect(h) == 0.0);
}

TEST_CASE("moving-ion Hamiltonian to first order in eta") {
  const EitParams p = operating_point();
  MotionalMode m = yb_mode(12);
  const ops::FockOperators f(12);
  const ComplexMatrix x = f.a + f.a_dagger;
  const Complex i(0, 1);
  // drive legs carry exp(-i eta x), the probe leg exp(+i eta x)
  ComplexMatrix h1 = ComplexMatrix::Zero(4 * 13, 4 * 13);
  auto put = [&](int r, int c, const ComplexMatrix& blk) {
    h1.block(r * 13, c * 13, 13, 13) = blk;
    h1.block(c * 13, r * 13, 13, 13) = blk.adjoint();
  };
  put(atom4::kE, atom4::kPlus, -i * 0.5 * p.omega_sigma_minus * x);
  put(atom4::kE, atom4::kZero, -i * 0.5 * p.omega_pi * x);
  put(atom4::kE, atom4::kMinus, -i * 0.5 * p.omega_sigma_plus * x);

  m.eta = 0.0;
  const ComplexMatrix h0 = hamiltonian_moving(p, m);
  double err[2];
  int k = 0;
  for (double eta : {1e-3, 2e-3}) {
    m.eta = eta;
    // low Fock corner, away from the truncation edge
    const ComplexMatrix d = hamiltonian_moving(p, m) - h0 - eta * h1;
    double e = 0;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        e = std::max(e, d.block(r * 13, c * 13, 6, 6).cwiseAbs().maxCoeff());
    err[k++] = e;
  }
  // remainder is second order: doubling eta quadruples it
  CHECK(err[1] / err[0] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(err[0] < 10 * 1e-6 * p.omega_sigma_plus);
}

TEST_CASE("no beams, no heating: phonon number is constant") {
  EitParams p;
  p.gamma = mhz(21);
  const auto m = yb_mode(10);
  const auto r = simulate_cooling(p, m, 1.0, times_us(20, 4), 0.0);
  for (double n : r.nbar) CHECK(n == doctest::Approx(r.nbar.front()).epsilon(1e-10));
  CHECK_FALSE(r.fit_ok);
}

TEST_CASE("no beams: heating channels add quanta linearly") {
  EitParams p;
  p.gamma = mhz(21);
  const auto m = yb_mode(25);
  const double heating = 670.0;  // 0.67 quanta/ms
  const auto r = simulate_cooling(p, m, 1.0, times_us(1000, 4), heating);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const double expected = r.nbar.front() + heating * r.times[i];
    CHECK(r.nbar[i] == doctest::Approx(expected).epsilon(0.02));
  }
  CHECK_FALSE(r.truncation_flag);
}

TEST_CASE("cooling run on a small space") {
  const EitParams p = operating_point();
  const auto m = yb_mode(8);
  const auto r = simulate_cooling(p, m, 1.0, times_us(60, 60), 0.0);
  REQUIRE(r.fit_ok);
  CHECK(r.nbar.back() < 0.2 * r.nbar.front());
  CHECK(r.n_ss <= r.nbar.front());
  CHECK(r.tau_cool > units::us(2));
  CHECK(r.tau_cool < units::us(60));
  // monotone after the initial transient (t > 5 / Gamma)
  for (std::size_t i = 1; i < r.times.size(); ++i) {
    if (r.times[i - 1] > 5.0 / p.gamma) CHECK(r.nbar[i] <= r.nbar[i - 1] + 1e-9);
  }
  for (double n : r.nbar) CHECK(n >= 0.0);
}

TEST_CASE("blue sideband on the bright peak heats") {
  EitParams p = operating_point();
  const auto m = yb_mode(8);
  // cooling condition: delta_p - delta_d = delta_B + delta_DR - nu; mirror with + nu
  const double shift = atom4::dressed_stark_shift(p, atom4::DressedBranch::kSigmaMinus);
  p.delta_p = p.delta_d + p.delta_B + shift + kNu;
  CoolingOptions o;
  o.fit = false;
  const auto r = simulate_cooling(p, m, 0.5, times_us(5, 5), 0.0, o);
  CHECK(r.nbar.back() > r.nbar.front());

  p.delta_p = p.delta_d + p.delta_B + shift - kNu;
  const auto c = simulate_cooling(p, m, 0.5, times_us(5, 5), 0.0, o);
  CHECK(c.nbar.back() < c.nbar.front());
}

TEST_CASE("cooling rate scales with eta squared") {
  const EitParams p = operating_point();
  MotionalMode m = yb_mode(6);
  const double eta = m.eta;
  // initial slope from a short run starting at nbar = 0.5
  double slope[2];
  int k = 0;
  for (double e : {eta, eta / 2}) {
    m.eta = e;
    CoolingOptions o;
    o.fit = false;
    const auto r = simulate_cooling(p, m, 0.5, times_us(1, 1), 0.0, o);
    slope[k++] = r.nbar.front() - r.nbar.back();
  }
  CHECK(slope[0] / slope[1] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("long-time limit agrees with the plateau") {
  const EitParams p = operating_point();
  const auto m = yb_mode(6);
  const auto r = simulate_cooling(p, m, 0.5, times_us(120, 12), 670.0);
  const double limit = cooling_limit(p, m, 670.0);
  CHECK(limit == doctest::Approx(r.n_ss).epsilon(0.10));
  CHECK(limit < 0.15);
}

TEST_CASE("detuning scan: far detuning leaves the mode to heat") {
  const EitParams p = operating_point();
  const auto m = yb_mode(10);
  ScanOptions o;
  o.nbar0 = 1.0;
  o.heating = 670.0;
  const double t_fix = units::us(20);
  const auto s = detuning_scan(p, m, {mhz(40), mhz(4.53)}, t_fix, o);
  REQUIRE(s.argmin == 1);
  const double expected = s.points[0].nbar_final;
  // reference: no cooling at all, heated from the truncated initial mean
  const auto th = ops::thermal_state(10, 1.0);
  const double start = ops::expect(ops::FockOperators(10).number, th.rho).real();
  CHECK(expected == doctest::Approx(start + 670.0 * t_fix).epsilon(0.2));

  o.exec = lindblad::Exec::kSerial;
  const auto serial = detuning_scan(p, m, {mhz(40), mhz(4.53)}, t_fix, o);
  CHECK(serial.points[0].nbar_final == s.points[0].nbar_final);
  CHECK(serial.points[1].nbar_final == s.points[1].nbar_final);
  CHECK_THROWS_AS(detuning_scan(p, m, {0.0}, 0.0, o), ContractViolation);
}

TEST_CASE("predicted optimum at the operating point") {
  const EitParams p = operating_point();
  CHECK(units::to_mhz(predicted_optimum(p, kNu)) == doctest::Approx(4.6 + 2.31 - 2.38).epsilon(1e-9));
}

TEST_CASE("power scan with the probe off gives no cooling") {
  const EitParams p = operating_point();
  const auto m = yb_mode(5);
  PowerScanOptions o;
  o.scan.nbar0 = 0.5;
  o.coarse_detunings = {mhz(4.0), mhz(4.53)};
  o.t_fix = units::us(3);
  o.t_list = times_us(3, 6);
  const auto pts = power_scan(p, m, Beam::kProbe, {0.0, 1.0}, o);
  REQUIRE(pts.size() == 2);
  CHECK_FALSE(pts[0].failed);
  CHECK(pts[0].gamma_cool == 0.0);
  CHECK(pts[1].n_ss < pts[0].n_ss);
}

TEST_CASE("COM mode of N ions cools at a similar rate") {
  const EitParams p = operating_point();
  const auto m = yb_mode(6);
  CoolingOptions o;
  o.fit = false;
  // window long against the internal pumping transient
  const auto one = simulate_cooling(p, m, 0.5, times_us(10, 1), 0.0, o);
  const auto four = simulate_cooling_com(p, m, 4, 0.5, times_us(10, 1), 0.0, o);
  const double r1 = one.nbar.front() - one.nbar.back();
  const double r4 = four.nbar.front() - four.nbar.back();
  CHECK(r4 / r1 > 0.5);
  CHECK(r4 / r1 < 2.0);
  CHECK(four.times == one.times);
}

TEST_CASE("truncation flag") {
  EitParams p;
  p.gamma = mhz(21);
  const auto m = yb_mode(6);
  CoolingOptions o;
  o.fit = false;
  const auto r = simulate_cooling(p, m, 3.0, times_us(1, 1), 0.0, o);
  CHECK(r.truncation_flag);
  CHECK_THROWS_AS(simulate_cooling(p, m, -1.0, times_us(1, 1), 0.0), ContractViolation);
}
