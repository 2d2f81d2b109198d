#include <doctest.h>

#include <cmath>
#include <sstream>

#include "eitcool/errors.hpp"
#include "eitcool/spectrum.hpp"
#include "eitcool/units.hpp"

using namespace eitcool;
using namespace eitcool::spectrum;
using atom4::EitParams;
using units::mhz;

namespace {

EitParams fig5() {
  EitParams p;
  p.delta_d = mhz(55.0);
  p.delta_B = mhz(4.6);
  p.omega_sigma_plus = p.omega_sigma_minus = mhz(17);
  p.omega_pi = mhz(0.5);
  p.delta_p = p.delta_d;
  p.gamma = mhz(21);
  return p;
}

std::vector<int> local_maxima(const std::vector<double>& v) {
  std::vector<int> idx;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] > v[i - 1] && v[i] >= v[i + 1]) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

// Full width at half maximum of the peak containing index i, linearly interpolated.
double fwhm(const std::vector<double>& x, const std::vector<double>& y, int i) {
  const double half = 0.5 * y[i];
  int l = i, r = i;
  while (l > 0 && y[l] > half) --l;
  while (r + 1 < static_cast<int>(y.size()) && y[r] > half) ++r;
  const double xl = x[l] + (half - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
  const double xr = x[r - 1] + (half - y[r - 1]) * (x[r] - x[r - 1]) / (y[r] - y[r - 1]);
  return xr - xl;
}

int nearest_index(const std::vector<double>& x, double v) {
  int best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs(x[i] - v) < std::abs(x[best] - v)) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

TEST_CASE("analytic spectrum vanishes at the dark resonances") {
  const EitParams p = fig5();
  CHECK(absorption_w(p, p.delta_sigma_plus()) == 0.0);
  CHECK(absorption_w(p, p.delta_sigma_minus()) == 0.0);
  const auto r = absorption_analytic(p, linear_grid(mhz(30), mhz(80), 400));
  for (double v : r.values) CHECK(v >= 0.0);
  CHECK(r.nulls[0] == p.delta_sigma_plus());
  CHECK(r.nulls[1] == p.delta_sigma_minus());
}

TEST_CASE("analytic maxima sit at the bright resonances") {
  const EitParams p = fig5();
  const auto grid = linear_grid(mhz(-40), mhz(80), 6001);
  const auto r = absorption_analytic(p, grid);
  const double step = grid[1] - grid[0];
  const auto maxima = local_maxima(r.values);
  REQUIRE(maxima.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(grid[maxima[k]] - r.peaks[k]) <= step);
}

TEST_CASE("narrow peak width scales with the linewidth") {
  EitParams p = fig5();
  const auto grid = linear_grid(mhz(40), mhz(56), 16001);
  double widths[2];
  for (int k = 0; k < 2; ++k) {
    const auto r = absorption_analytic(p, grid);
    const auto br = bright_resonances(p);
    widths[k] = fwhm(grid, r.values, nearest_index(grid, br.roots[br.cooling_index]));
    p.gamma *= 2.0;
  }
  CHECK(widths[1] / widths[0] == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("bright resonances") {
  EitParams p = fig5();
  p.omega_sigma_plus = p.omega_sigma_minus = 1e-3;
  auto br = bright_resonances(p);
  REQUIRE(br.roots.size() == 3);
  CHECK(std::abs(br.roots[0]) < 1e-6);
  CHECK(br.roots[1] == doctest::Approx(p.delta_sigma_plus()).epsilon(1e-12));
  CHECK(br.roots[2] == doctest::Approx(p.delta_sigma_minus()).epsilon(1e-12));

  p = fig5();
  br = bright_resonances(p);
  REQUIRE(br.complete);
  const RealVector e = atom4::dressed_energies(p);
  // e holds the three bright levels and the uncoupled |0> at zero
  std::vector<double> nonzero;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (std::abs(e[i]) > 1e-6) nonzero.push_back(e[i]);
  }
  REQUIRE(nonzero.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(br.roots[k] - nonzero[k]) < 1e-9 * mhz(1));

  const double shift = atom4::dressed_stark_shift(p);
  CHECK(std::abs(br.roots[br.cooling_index] - p.delta_sigma_plus() - shift) < 1e-9 * mhz(1));

  p.omega_sigma_plus = p.omega_sigma_minus = 0;
  CHECK_THROWS_AS(bright_resonances(p), ContractViolation);
}

TEST_CASE("numeric spectrum is dark at the dark resonance") {
  const EitParams p = fig5();
  const auto r = absorption_numeric(p, {p.delta_sigma_plus(), p.delta_sigma_minus()});
  CHECK(r.values[0] < 1e-6);
  CHECK(r.values[1] < 1e-6);
  CHECK(r.failed_count() == 0);
}

TEST_CASE("null exactness relative to the broad peak") {
  EitParams p = fig5();
  p.omega_pi = p.omega_sigma_plus / 10;
  const auto grid = linear_grid(mhz(-40), mhz(80), 241);
  const auto r = absorption_numeric(p, grid);
  double peak = 0;
  for (double v : r.values) peak = std::max(peak, v);
  const auto n = absorption_numeric(p, {p.delta_sigma_plus(), p.delta_sigma_minus()});
  CHECK(n.values[0] < 1e-4 * peak);
  CHECK(n.values[1] < 1e-4 * peak);
}

TEST_CASE("numeric spectrum matches the analytic shape") {
  const EitParams p = fig5();
  const auto grid = linear_grid(mhz(30), mhz(80), 400);
  const auto a = absorption_analytic(p, grid);
  const auto n = absorption_numeric(p, grid);
  REQUIRE(n.failed_count() == 0);
  CHECK(correlation(a, n) > 0.999);
  CHECK(relative_deviation(a, n) < 0.05);
  CHECK(fit_scale(a, n) > 0.0);
}

TEST_CASE("weak-probe spectrum scales with probe power") {
  EitParams p = fig5();
  const auto grid = linear_grid(mhz(30), mhz(80), 101);
  const auto one = absorption_numeric(p, grid);
  p.omega_pi *= std::sqrt(2.0);
  const auto two = absorption_numeric(p, grid);
  double s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s1 += one.values[i];
    s2 += two.values[i];
  }
  // Omega_pi^2 doubles, so the scattering rate doubles; doubling power twice gives x4.
  CHECK(s2 / s1 == doctest::Approx(2.0).epsilon(0.1));
  p.omega_pi *= std::sqrt(2.0);
  const auto four = absorption_numeric(p, grid);
  double s4 = 0;
  for (double v : four.values) s4 += v;
  CHECK(s4 / s1 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("serial and parallel numeric sweeps agree") {
  const EitParams p = fig5();
  const auto grid = linear_grid(mhz(40), mhz(70), 31);
  const auto a = absorption_numeric(p, grid, lindblad::Exec::kSerial);
  const auto b = absorption_numeric(p, grid, lindblad::Exec::kParallel);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("sideband markers and csv") {
  EitParams p = fig5();
  p.delta_p = p.delta_sigma_minus() - mhz(0.07);
  const auto m = sideband_markers(p, mhz(2.38));
  CHECK(m.carrier == p.delta_sigma_minus());
  CHECK(m.red == doctest::Approx(m.carrier + mhz(2.38)));
  CHECK(m.blue == doctest::Approx(m.carrier - mhz(2.38)));

  const auto grid = linear_grid(mhz(50), mhz(60), 3);
  const auto a = absorption_analytic(p, grid);
  auto n = absorption_numeric(p, grid);
  n.values[1] = std::nan("");
  std::ostringstream out;
  write_csv(out, a, n);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "delta_pi_MHz,W_analytic,rho_ee_numeric");
  std::getline(in, line);
  CHECK(line.rfind("50,", 0) == 0);
  std::getline(in, line);
  CHECK(line.substr(line.size() - 4) == ",nan");
}
