#include <doctest.h>

#include <cmath>
#include <random>

#include "eitcool/errors.hpp"
#include "eitcool/stark.hpp"
#include "eitcool/units.hpp"

using namespace eitcool;
using namespace eitcool::stark;
using units::mhz;

namespace {

StarkParams beam(double plus, double pi, double minus, double delta_mhz) {
  StarkParams p = yb171_defaults();
  p.omega_plus = mhz(plus);
  p.omega_pi = mhz(pi);
  p.omega_minus = mhz(minus);
  p.delta = mhz(delta_mhz);
  return p;
}

// Paper order {sigma-, pi, sigma+}.
StarkParams drive() { return beam(18.03, 1.72, 16.74, 51.07); }
StarkParams probe() { return beam(3.17, 6.67, 1.49, 55.6); }

std::vector<RamseyTrace> synthesize(const StarkParams& p, int points = 300, double periods = 6) {
  std::vector<RamseyTrace> out;
  for (Qubit q : {Qubit::kClock, Qubit::kZeemanPlus, Qubit::kZeemanMinus}) {
    RamseyTrace tr;
    tr.qubit = q;
    const double t_end = periods * units::kPi / std::abs(shift(p, q));
    for (int i = 1; i <= points; ++i) {
      const double t = t_end * i / points;
      tr.data.push_back({t, ramsey_signal(p, q, t), 0.01});
    }
    out.push_back(tr);
  }
  return out;
}

void check_recovery(const RabiFit& f, const StarkParams& truth, double tol) {
  CHECK(f.omega_plus == doctest::Approx(truth.omega_plus).epsilon(tol));
  CHECK(f.omega_minus == doctest::Approx(truth.omega_minus).epsilon(tol));
  CHECK(f.omega_pi == doctest::Approx(truth.omega_pi).epsilon(tol));
}

}  // namespace

TEST_CASE("shift formula reductions") {
  StarkParams p = beam(0, 0, 0, 55.6);
  CHECK(clock_shift(p) == 0.0);
  CHECK(zeeman_shift(p, 1) == 0.0);
  CHECK(zeeman_shift(p, -1) == 0.0);

  p.omega_pi = mhz(6.67);
  const double far = p.delta_P + p.delta_S - p.delta;
  CHECK(clock_shift(p) == doctest::Approx(p.omega_pi * p.omega_pi * (1 / p.delta + 1 / far)));

  p = beam(3.17, 0, 0, 55.6);
  CHECK(zeeman_shift(p, 1) == doctest::Approx(p.omega_plus * p.omega_plus / far));
  p = beam(0, 0, 1.49, 55.6);
  CHECK(zeeman_shift(p, -1) == doctest::Approx(p.omega_minus * p.omega_minus / far));
  CHECK_THROWS_AS(zeeman_shift(p, 0), ContractViolation);
}

TEST_CASE("clock shift against an independent evaluation") {
  // long double, frequencies in MHz (omega / 2pi), result converted back
  const long double wp = 3.17L, wm = 1.49L, wpi = 6.67L, d = 55.6L;
  const long double dp = 2105.0L, ds = 12642.812L;
  const long double mhz_shift = wpi * wpi * (1 / d + 1 / (dp + ds - d)) +
                                (wm * wm + wp * wp) * (1 / (dp + ds - d) - 1 / (dp - d));
  CHECK(clock_shift(probe()) == doctest::Approx(double(mhz_shift) * units::kTwoPi * 1e6).epsilon(1e-9));
  CHECK(std::isfinite(clock_shift(drive())));
}

TEST_CASE("shift symmetries") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    StarkParams p = beam(u(rng), u(rng), u(rng), 30 + 3 * u(rng));
    StarkParams neg = p;
    neg.omega_plus = -p.omega_plus;
    neg.omega_minus = -p.omega_minus;
    neg.omega_pi = -p.omega_pi;
    CHECK(clock_shift(neg) == clock_shift(p));
    CHECK(zeeman_shift(neg, 1) == zeeman_shift(p, 1));
    CHECK(zeeman_shift(neg, -1) == zeeman_shift(p, -1));

    // swapping the sigma components and the sign maps +1 onto -1 once
    // delta_B changes sign with them
    StarkParams sw = p;
    std::swap(sw.omega_plus, sw.omega_minus);
    sw.delta_B = -p.delta_B;
    CHECK(zeeman_shift(sw, -1) == doctest::Approx(zeeman_shift(p, 1)).epsilon(1e-12));
    CHECK(zeeman_shift(sw, 1) == doctest::Approx(zeeman_shift(p, -1)).epsilon(1e-12));
  }
}

TEST_CASE("guard band and sign change across Delta = Delta_P") {
  StarkParams p = drive();
  p.delta = mhz(0.3);
  CHECK_THROWS_AS(clock_shift(p), NearResonanceError);
  p.delta = p.delta_P;
  CHECK_THROWS_AS(clock_shift(p), NearResonanceError);
  p.delta = -p.delta_B + mhz(0.2);
  CHECK_THROWS_AS(zeeman_shift(p, 1), NearResonanceError);

  StarkParams below = drive(), above = drive();
  below.omega_pi = above.omega_pi = 0;
  below.delta = below.delta_P - mhz(1.0);
  above.delta = above.delta_P + mhz(1.0);
  CHECK(clock_shift(below) * clock_shift(above) < 0);
}

TEST_CASE("Ramsey signal") {
  StarkParams p = drive();
  for (Qubit q : {Qubit::kClock, Qubit::kZeemanPlus, Qubit::kZeemanMinus}) {
    CHECK(ramsey_signal(p, q, 0.0) == 0.0);
    const double period = units::kPi / std::abs(shift(p, q));
    CHECK(ramsey_signal(p, q, period) < 1e-12);
    CHECK(ramsey_signal(p, q, 0.5 * period) == doctest::Approx(1.0));
  }
  // envelope: successive maxima shrink
  p.gamma_zeeman = 2e6;
  const double period = units::kPi / std::abs(zeeman_shift(p, 1));
  double prev = 2;
  for (int k = 0; k < 6; ++k) {
    const double v = ramsey_signal(p, Qubit::kZeemanPlus, (k + 0.5) * period);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(ramsey_signal(p, Qubit::kClock, -1.0), ContractViolation);
}

TEST_CASE("Rabi components round trip for the paper beams") {
  for (StarkParams truth : {drive(), probe()}) {
    truth.gamma_clock = 2e6;
    truth.gamma_zeeman = 2e6;
    const auto traces = synthesize(truth);
    StarkParams p0 = yb171_defaults();
    p0.delta = truth.delta;
    p0.gamma_clock = p0.gamma_zeeman = 1e6;
    const auto f = fit_rabi_components(traces, p0);
    check_recovery(f, truth, 0.01);
    CHECK(f.pi_fraction == doctest::Approx(std::abs(truth.omega_pi) /
                                           std::hypot(truth.omega_plus, truth.omega_minus))
                               .epsilon(0.01));
  }
}

TEST_CASE("Rabi components round trip for random beams") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.5, 20.0), ud(20.0, 120.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double plus = u(rng), pi = u(rng), minus = u(rng);
    const StarkParams truth = beam(plus, pi, minus, ud(rng));
    // prior knowledge of the beam, 10% off; it only breaks sign-branch ties
    StarkParams p0 = truth;
    p0.omega_plus *= 1.1;
    p0.omega_minus *= 0.9;
    p0.omega_pi *= 1.1;
    const auto f = fit_rabi_components(synthesize(truth), p0);
    check_recovery(f, truth, 0.01);
  }
}

TEST_CASE("mislabelled traces fit far worse") {
  StarkParams truth = drive();
  truth.gamma_clock = truth.gamma_zeeman = 2e6;
  StarkParams p0 = yb171_defaults();
  p0.delta = truth.delta;
  p0.gamma_clock = p0.gamma_zeeman = 1e6;
  auto traces = synthesize(truth);
  const double good = fit_rabi_components(traces, p0).fit.residual_norm;
  std::swap(traces[0].qubit, traces[1].qubit);
  const double bad = fit_rabi_components(traces, p0).fit.residual_norm;
  CHECK(bad >= 10 * good);
  CHECK(bad > 1.0);
}
