#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"
#include "eitcool/cooling.hpp"
#include "eitcool/crystal.hpp"
#include "eitcool/spectrum.hpp"
#include "eitcool/stark.hpp"
#include "eitcool/thermometry.hpp"
#include "eitcool/units.hpp"

namespace eitcool::cli {

namespace fs = std::filesystem;
using units::mhz;
using units::to_mhz;
using units::us;
using units::to_us;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<std::vector<double>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open data file");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError(path.string() + ": non-numeric row '" + line + "'");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

double num(const Json& j, const char* key) { return j.at(key).get<double>(); }
int integer(const Json& j, const char* key) { return j.at(key).get<int>(); }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

std::vector<double> range_from(const Json& r, const std::string& key) {
  const int n = integer(r, "points");
  require(n >= 1, key + ".points", "must be >= 1");
  return linspace(num(r, "start"), num(r, "stop"), n);
}

std::vector<double> scaled(std::vector<double> v, double s) {
  for (double& x : v) x *= s;
  return v;
}

atom4::EitParams atom_from(const Json& a) {
  atom4::EitParams p;
  p.omega_sigma_plus = mhz(num(a, "omega_sigma_plus"));
  p.omega_sigma_minus = mhz(num(a, "omega_sigma_minus"));
  p.omega_pi = mhz(num(a, "omega_pi"));
  p.delta_d = mhz(num(a, "delta_d"));
  p.delta_p = mhz(num(a, "delta_p"));
  p.delta_B = mhz(num(a, "delta_B"));
  p.gamma = mhz(num(a, "gamma"));
  const std::string branch = a.at("stark_branch");
  require(branch == "sigma_minus" || branch == "sigma_plus", "params.atom.stark_branch",
          "expected sigma_minus or sigma_plus");
  const double target = num(a, "stark_target");
  if (target != 0.0) {
    atom4::calibrate_stark_shift(p, mhz(target),
                                 branch == "sigma_plus" ? atom4::DressedBranch::kSigmaPlus
                                                        : atom4::DressedBranch::kSigmaMinus);
  }
  p.validate();
  return p;
}

Json atom_echo(const atom4::EitParams& p) {
  return {{"omega_sigma_plus_MHz", to_mhz(p.omega_sigma_plus)},
          {"omega_sigma_minus_MHz", to_mhz(p.omega_sigma_minus)},
          {"omega_pi_MHz", to_mhz(p.omega_pi)},
          {"delta_d_MHz", to_mhz(p.delta_d)},
          {"delta_p_MHz", to_mhz(p.delta_p)}};
}

cooling::MotionalMode mode_from(const Json& m) {
  require(integer(m, "n_max") >= 1, "params.mode.n_max", "must be >= 1");
  return cooling::MotionalMode::from_physical(mhz(num(m, "nu")), num(m, "mass") * units::kAmu,
                                              num(m, "wavelength") * 1e-9, integer(m, "n_max"));
}

crystal::CrystalConfig crystal_from(const Json& c, std::uint64_t seed) {
  crystal::CrystalConfig cc;
  cc.n_ions = integer(c, "n_ions");
  cc.mass = num(c, "mass") * units::kAmu;
  cc.omega_x = mhz(num(c, "omega_x"));
  cc.omega_y = mhz(num(c, "omega_y"));
  cc.omega_z = mhz(num(c, "omega_z"));
  cc.restarts = integer(c, "restarts");
  cc.seed = seed;
  require(cc.n_ions >= 1, "params.crystal.n_ions", "must be >= 1");
  require(cc.restarts >= 0, "params.crystal.restarts", "must be >= 0");
  return cc;
}

crystal::ModeDecomposition modes_of(const crystal::CrystalConfig& cc) {
  return crystal::transverse_modes(cc, crystal::equilibrium_positions(cc).positions);
}

// -1 selects the COM mode, the highest transverse frequency.
int mode_index(const Json& params, const crystal::ModeDecomposition& md) {
  const int n = static_cast<int>(md.frequencies.size());
  int m = integer(params, "mode");
  if (m < 0) m = n - 1;
  require(m < n, "params.mode", "index beyond the " + std::to_string(n) + " transverse modes");
  return m;
}

// |Delta k| of two Raman beams crossing at the given full angle.
double raman_k(const Json& params) {
  const double lambda = num(params, "raman_wavelength") * 1e-9;
  require(lambda > 0, "params.raman_wavelength", "must be > 0");
  const double angle = num(params, "raman_angle") * units::kPi / 180.0;
  return 2.0 * (units::kTwoPi / lambda) * std::sin(0.5 * angle);
}

lindblad::EvolveOptions evolve_from(const Json& params) {
  lindblad::EvolveOptions e;
  e.rel_tol = num(params, "rel_tol");
  e.abs_tol = num(params, "abs_tol");
  require(e.rel_tol > 0, "params.rel_tol", "must be > 0");
  require(e.abs_tol > 0, "params.abs_tol", "must be > 0");
  return e;
}

double heating_from(const Json& params) {
  const double h = num(params, "heating_per_ms") * 1e3;
  require(h >= 0, "params.heating_per_ms", "must be >= 0");
  return h;
}

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  void write(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    names_.push_back(name);
  }
  void json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }
  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

std::string csv_row(std::initializer_list<double> values) {
  std::string s;
  for (double v : values) {
    if (!s.empty()) s += ',';
    s += format_number(v);
  }
  return s + "\n";
}

void run_spectrum(const Json& params, Output& out) {
  const auto p = atom_from(params["atom"]);
  const auto grid = scaled(range_from(params["grid"], "params.grid"), mhz(1.0));
  const auto analytic = spectrum::absorption_analytic(p, grid);
  spectrum::SpectrumResult numeric = analytic;
  Json summary;
  if (params["numeric"].get<bool>()) {
    numeric = spectrum::absorption_numeric(p, grid);
    summary["scale"] = spectrum::fit_scale(analytic, numeric);
    summary["relative_deviation"] = spectrum::relative_deviation(analytic, numeric);
    summary["correlation"] = spectrum::correlation(analytic, numeric);
    summary["failed_points"] = numeric.failed_count();
  } else {
    std::fill(numeric.values.begin(), numeric.values.end(), std::nan(""));
    numeric.failed.assign(grid.size(), true);
  }
  std::ostringstream csv;
  spectrum::write_csv(csv, analytic, numeric);
  out.write("spectrum.csv", csv.str());

  summary["nulls_MHz"] = {to_mhz(analytic.nulls[0]), to_mhz(analytic.nulls[1])};
  const auto bright = spectrum::bright_resonances(p);
  Json roots = Json::array();
  for (double r : bright.roots) roots.push_back(to_mhz(r));
  summary["bright_MHz"] = roots;
  summary["bright_complete"] = bright.complete;
  const double nu = num(params, "nu");
  if (nu > 0) {
    const auto mk = spectrum::sideband_markers(p, mhz(nu));
    summary["markers_MHz"] = {{"carrier", to_mhz(mk.carrier)},
                              {"red", to_mhz(mk.red)},
                              {"blue", to_mhz(mk.blue)}};
  }
  out.json("spectrum_summary.json", summary);
}

void run_cool(const Json& params, Output& out) {
  const auto p = atom_from(params["atom"]);
  const auto m = mode_from(params["mode"]);
  const int points = integer(params, "points");
  require(points >= 4, "params.points", "must be >= 4");
  const double t_max = num(params, "t_max");
  require(t_max > 0, "params.t_max", "must be > 0");
  const int ions = integer(params, "ions");
  require(ions >= 1, "params.ions", "must be >= 1");
  const auto t_list = linspace(0.0, us(t_max), points);
  cooling::CoolingOptions opt;
  opt.evolve = evolve_from(params);
  const double nbar0 = num(params, "nbar0");
  const double heating = heating_from(params);
  const auto r = ions == 1 ? cooling::simulate_cooling(p, m, nbar0, t_list, heating, opt)
                           : cooling::simulate_cooling_com(p, m, ions, nbar0, t_list, heating, opt);
  std::string csv = "t_us,nbar\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) csv += csv_row({to_us(r.times[i]), r.nbar[i]});
  out.write("cooling.csv", csv);
  Json s = {{"eta", m.eta},
            {"fit_ok", r.fit_ok},
            {"gamma_cool_per_s", r.gamma_cool},
            {"tau_cool_us", to_us(r.tau_cool)},
            {"n_ss", r.n_ss},
            {"max_top_population", r.max_top_population},
            {"truncation_flag", r.truncation_flag},
            {"atom", atom_echo(p)}};
  out.json("cooling_summary.json", s);
}

void run_scan_detuning(const Json& params, Output& out) {
  const auto p = atom_from(params["atom"]);
  const auto m = mode_from(params["mode"]);
  const auto rel = scaled(range_from(params["detunings"], "params.detunings"), mhz(1.0));
  const double t_fix = num(params, "t_fix");
  require(t_fix > 0, "params.t_fix", "must be > 0");
  cooling::ScanOptions opt;
  opt.nbar0 = num(params, "nbar0");
  opt.heating = heating_from(params);
  opt.evolve = evolve_from(params);
  const auto scan = cooling::detuning_scan(p, m, rel, us(t_fix), opt);
  if (scan.argmin < 0) throw NonConvergenceError("scan-detuning: every scan point failed");
  std::string csv = "detuning_MHz,nbar_final,argmin\n";
  int failed = 0;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& pt = scan.points[i];
    failed += pt.failed;
    csv += format_number(to_mhz(pt.relative_detuning)) + "," +
           format_number(pt.failed ? std::nan("") : pt.nbar_final) + "," +
           (static_cast<int>(i) == scan.argmin ? "1" : "0") + "\n";
  }
  out.write("detuning_scan.csv", csv);
  out.json("detuning_scan_summary.json",
           {{"best_detuning_MHz", to_mhz(scan.best_detuning())},
            {"predicted_optimum_MHz", to_mhz(cooling::predicted_optimum(p, m.nu))},
            {"failed_points", failed},
            {"atom", atom_echo(p)}});
}

void run_scan_power(const Json& params, Output& out) {
  const auto p = atom_from(params["atom"]);
  const auto m = mode_from(params["mode"]);
  const std::string beam = params["beam"];
  require(beam == "drive" || beam == "probe", "params.beam", "expected drive or probe");
  const auto powers = params["powers"].get<std::vector<double>>();
  require(!powers.empty(), "params.powers", "must not be empty");
  cooling::PowerScanOptions opt;
  opt.scan.nbar0 = num(params, "nbar0");
  opt.scan.heating = heating_from(params);
  opt.scan.evolve = evolve_from(params);
  opt.coarse_detunings = scaled(range_from(params["coarse"], "params.coarse"), mhz(1.0));
  opt.t_fix = us(num(params, "t_fix"));
  require(opt.t_fix > 0, "params.t_fix", "must be > 0");
  const int points = integer(params, "points");
  require(points >= 4, "params.points", "must be >= 4");
  opt.t_list = linspace(0.0, us(num(params, "t_max")), points);
  const auto scan = cooling::power_scan(
      p, m, beam == "drive" ? cooling::Beam::kDrive : cooling::Beam::kProbe, powers, opt);
  std::string csv = "power_scale,gamma_cool_per_s,n_ss\n";
  Json best = Json::array();
  for (const auto& pt : scan) {
    const double nan = std::nan("");
    csv += csv_row({pt.power_scale, pt.failed ? nan : pt.gamma_cool, pt.failed ? nan : pt.n_ss});
    best.push_back({{"power_scale", pt.power_scale},
                    {"failed", pt.failed},
                    {"best_detuning_MHz", to_mhz(pt.best_detuning)}});
  }
  out.write("power_scan.csv", csv);
  out.json("power_scan_summary.json", {{"beam", beam}, {"points", best}, {"atom", atom_echo(p)}});
}

void run_modes(const Json& params, std::uint64_t seed, Output& out) {
  const auto cc = crystal_from(params["crystal"], seed);
  const auto eq = crystal::equilibrium_positions(cc);
  const auto md = crystal::transverse_modes(cc, eq.positions);
  out.write("modes.json", crystal::to_json(cc, eq, md) + "\n");
}

std::vector<numerics::DataPoint> read_trace(const std::string& path, int shots,
                                            const std::string& key) {
  std::vector<numerics::DataPoint> data;
  for (const auto& row : read_csv(path)) {
    require(row.size() == 2 || row.size() == 3, key, "rows need t_us,P_up[,sigma]");
    const double sigma = row.size() == 3 ? row[2] : thermometry::projection_sigma(row[1], shots);
    data.push_back({us(row[0]), row[1], sigma});
  }
  require(data.size() >= 3, key, "needs at least 3 rows");
  return data;
}

std::string trace_csv(const std::vector<numerics::DataPoint>& data) {
  std::string csv = "t_us,P_up,sigma\n";
  for (const auto& d : data) csv += csv_row({to_us(d.x), d.y, d.sigma});
  return csv;
}

// Data point nearest t.
double at_time(const std::vector<numerics::DataPoint>& data, double t) {
  const auto it = std::min_element(data.begin(), data.end(), [t](const auto& a, const auto& b) {
    return std::abs(a.x - t) < std::abs(b.x - t);
  });
  return it->y;
}

void run_sideband(const Json& params, std::uint64_t seed, Output& out) {
  const auto cc = crystal_from(params["crystal"], seed);
  const auto md = modes_of(cc);
  const int m = mode_index(params, md);
  const int n_max = integer(params, "n_max");
  require(n_max >= 1, "params.n_max", "must be >= 1");
  thermometry::SidebandParams sp;
  sp.mode = thermometry::crystal_mode(md, m, cc.mass, raman_k(params), n_max);
  sp.rabi.assign(static_cast<std::size_t>(cc.n_ions), mhz(num(params, "rabi")));
  sp.validate();
  const int shots = integer(params, "shots");
  require(shots >= 0, "params.shots", "must be >= 0");
  const int sigma_shots = shots > 0 ? shots : thermometry::kDefaultShots;
  const double t_pi = thermometry::pi_time(sp);

  std::vector<numerics::DataPoint> blue, red;
  const std::string blue_path = params["data_blue"], red_path = params["data_red"];
  if (!blue_path.empty()) {
    blue = read_trace(blue_path, sigma_shots, "params.data_blue");
    if (!red_path.empty()) red = read_trace(red_path, sigma_shots, "params.data_red");
  } else {
    require(red_path.empty(), "params.data_red", "given without data_blue");
    const double nbar = num(params, "nbar");
    require(nbar >= 0, "params.nbar", "must be >= 0");
    const int points = integer(params, "points");
    require(points >= 3, "params.points", "must be >= 3");
    double t_max = us(num(params, "t_max"));
    if (t_max <= 0) t_max = 3 * t_pi;
    std::vector<double> times;
    for (int i = 1; i <= points; ++i) times.push_back(t_max * i / points);
    std::mt19937_64 rng(seed);
    for (auto side : {thermometry::Side::kBlue, thermometry::Side::kRed}) {
      const auto trace = thermometry::thermal_average(thermometry::SidebandModel(sp, side).table(times), nbar);
      auto& dst = side == thermometry::Side::kBlue ? blue : red;
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double y = shots > 0 ? thermometry::projection_sample(trace.p_up[i], shots, rng) : trace.p_up[i];
        dst.push_back({times[i], y, thermometry::projection_sigma(y, sigma_shots)});
      }
    }
    out.write("sideband_blue.csv", trace_csv(blue));
    out.write("sideband_red.csv", trace_csv(red));
  }

  const auto fit = thermometry::fit_nbar_trace(blue, sp, num(params, "nbar_guess"));
  Json report = {{"mode", m},
                 {"frequency_MHz", to_mhz(md.frequencies[m])},
                 {"eta", sp.mode.eta},
                 {"pi_time_us", to_us(t_pi)},
                 {"trace", {{"nbar", fit.nbar},
                            {"sigma_nbar", fit.sigma_nbar},
                            {"rabi_scale", fit.rabi_scale},
                            {"sigma_rabi_scale", fit.sigma_rabi_scale}}}};
  double ratio_nbar = std::nan(""), ratio_sigma = std::nan("");
  if (!red.empty()) {
    // red/blue at the pi time; a ratio with no thermal solution is reported, not fatal
    try {
      const auto est = thermometry::fit_nbar_ratio(at_time(red, t_pi), at_time(blue, t_pi), sp, sigma_shots);
      ratio_nbar = est.nbar;
      ratio_sigma = est.sigma;
      report["ratio"] = {{"nbar", est.nbar}, {"sigma", est.sigma}, {"ratio", est.ratio}};
    } catch (const Error& e) {
      report["ratio"] = {{"error", e.what()}};
    }
  }
  out.write("nbar_modes.csv", "mode,frequency_MHz,nbar_trace,sigma_trace,nbar_ratio,sigma_ratio\n" +
                                  std::to_string(m) + "," +
                                  format_number(to_mhz(md.frequencies[m])) + "," +
                                  csv_row({fit.nbar, fit.sigma_nbar, ratio_nbar, ratio_sigma}));
  out.json("sideband_fit.json", report);
}

void run_odf(const Json& params, std::uint64_t seed, Output& out) {
  const auto cc = crystal_from(params["crystal"], seed);
  const auto md = modes_of(cc);
  const int m = mode_index(params, md);
  const int n = cc.n_ions;

  thermometry::OdfParams o;
  o.tau = us(num(params, "tau"));
  o.tau_pi = us(num(params, "tau_pi"));
  o.gamma_D = num(params, "gamma_D_per_s");
  o.k_mag = raman_k(params);
  o.mass = cc.mass;
  o.rabi.assign(static_cast<std::size_t>(n), mhz(num(params, "rabi")));
  require(o.tau > 0, "params.tau", "must be > 0");
  const double w = md.frequencies[m];
  auto at_offset = [&](double cycles) { return w + units::kTwoPi * cycles / o.tau; };
  o.mu_R = at_offset(num(params, "offset"));
  o.validate();

  auto nbars = params["nbars"].get<std::vector<double>>();
  if (nbars.empty()) nbars.assign(static_cast<std::size_t>(n), 0.0);
  require(static_cast<int>(nbars.size()) == n, "params.nbars", "needs one entry per mode");

  std::string spec = "offset_cycles,mu_R_MHz,P_up\n";
  for (double c : range_from(params["spectrum"], "params.spectrum")) {
    thermometry::OdfParams q = o;
    q.mu_R = at_offset(c);
    spec += csv_row({c, to_mhz(q.mu_R), thermometry::odf_height(q, md, nbars)});
  }
  out.write("odf_spectrum.csv", spec);

  const auto& curve = params["curve"];
  const int points = integer(curve, "points");
  require(points >= 2, "params.curve.points", "must be >= 2");
  std::string hc = "nbar,height\n";
  std::vector<double> probe = nbars;
  for (double nb : linspace(0.0, num(curve, "nbar_max"), points)) {
    probe[m] = nb;
    hc += csv_row({nb, thermometry::odf_height(o, md, probe)});
  }
  out.write("odf_height.csv", hc);

  Json report = {{"mode", m},
                 {"frequency_MHz", to_mhz(w)},
                 {"mu_R_MHz", to_mhz(o.mu_R)}};
  const auto heights = params["heights"].get<std::vector<double>>();
  const auto delays = params["delays_ms"].get<std::vector<double>>();
  if (!heights.empty()) {
    thermometry::OdfCalibration cal;
    cal.rabi = mhz(num(params, "rabi"));
    cal.nbars = nbars;
    cal.target = m;
    std::vector<double> inverted;
    for (double h : heights) inverted.push_back(thermometry::odf_height_to_nbar(h, o, md, cal));
    report["nbar"] = inverted;
    if (!delays.empty()) {
      require(delays.size() == heights.size(), "params.delays_ms", "needs one delay per height");
      const auto fit = thermometry::heating_rate_fit(scaled(delays, 1e-3), inverted);
      report["heating"] = {{"rate_per_ms", fit.slope * 1e-3},
                           {"sigma_rate_per_ms", fit.sigma_slope * 1e-3},
                           {"intercept", fit.intercept},
                           {"sigma_intercept", fit.sigma_intercept}};
    }
  } else {
    require(delays.empty(), "params.delays_ms", "given without heights");
  }
  out.json("odf_fit.json", report);
}

void run_stark(const Json& params, std::uint64_t seed, Output& out) {
  stark::StarkParams p0 = stark::yb171_defaults();
  p0.delta_P = mhz(num(params, "delta_P"));
  p0.delta_S = mhz(num(params, "delta_S"));
  p0.delta_B = mhz(num(params, "delta_B"));
  const auto& b = params["beam"];
  p0.delta = mhz(num(b, "delta"));
  const auto& g = params["guess"];
  p0.omega_plus = mhz(num(g, "omega_plus"));
  p0.omega_minus = mhz(num(g, "omega_minus"));
  p0.omega_pi = mhz(num(g, "omega_pi"));
  p0.gamma_clock = num(g, "gamma_clock_per_s");
  p0.gamma_zeeman = num(g, "gamma_zeeman_per_s");
  p0.validate();

  const stark::Qubit qubits[3] = {stark::Qubit::kClock, stark::Qubit::kZeemanPlus,
                                  stark::Qubit::kZeemanMinus};
  const char* names[3] = {"clock", "zeeman_plus", "zeeman_minus"};
  const double sigma = num(params, "sigma");
  require(sigma > 0, "params.sigma", "must be > 0");
  const int shots = integer(params, "shots");
  require(shots >= 0, "params.shots", "must be >= 0");

  std::vector<stark::RamseyTrace> traces(3);
  const auto& data = params["data"];
  int given = 0;
  for (const char* name : names) given += !data[name].get<std::string>().empty();
  if (given > 0) {
    require(given == 3, "params.data", "needs all three traces or none");
    for (int q = 0; q < 3; ++q) {
      traces[q].qubit = qubits[q];
      const std::string key = std::string("params.data.") + names[q];
      for (const auto& row : read_csv(data[names[q]].get<std::string>())) {
        require(row.size() == 2 || row.size() == 3, key, "rows need t_us,P[,sigma]");
        traces[q].data.push_back({us(row[0]), row[1], row.size() == 3 ? row[2] : sigma});
      }
    }
  } else {
    stark::StarkParams truth = p0;
    truth.omega_plus = mhz(num(b, "omega_plus"));
    truth.omega_minus = mhz(num(b, "omega_minus"));
    truth.omega_pi = mhz(num(b, "omega_pi"));
    truth.gamma_clock = num(params, "gamma_clock_per_s");
    truth.gamma_zeeman = num(params, "gamma_zeeman_per_s");
    truth.validate();
    const int points = integer(params, "points");
    require(points >= 3, "params.points", "must be >= 3");
    const double periods = num(params, "periods");
    require(periods > 0, "params.periods", "must be > 0");
    std::mt19937_64 rng(seed);
    for (int q = 0; q < 3; ++q) {
      traces[q].qubit = qubits[q];
      const double t_end = periods * units::kPi / std::abs(stark::shift(truth, qubits[q]));
      std::string csv = "t_us,P\n";
      for (int i = 1; i <= points; ++i) {
        const double t = t_end * i / points;
        const double exact = stark::ramsey_signal(truth, qubits[q], t);
        const double y = shots > 0 ? thermometry::projection_sample(exact, shots, rng) : exact;
        const double s = shots > 0 ? thermometry::projection_sigma(y, shots) : sigma;
        traces[q].data.push_back({t, y, s});
        csv += csv_row({to_us(t), y});
      }
      out.write(std::string("ramsey_") + names[q] + ".csv", csv);
    }
  }

  const auto f = stark::fit_rabi_components(traces, p0);
  Json components = Json::object();
  const std::pair<const char*, std::pair<double, double>> rows[3] = {
      {"omega_minus", {f.omega_minus, f.sigma_minus}},
      {"omega_pi", {f.omega_pi, f.sigma_pi}},
      {"omega_plus", {f.omega_plus, f.sigma_plus}}};
  const bool wide[3] = {f.wide_sigma[1], f.wide_sigma[2], f.wide_sigma[0]};
  for (int c = 0; c < 3; ++c) {
    components[rows[c].first] = {{"MHz", to_mhz(rows[c].second.first)},
                                 {"sigma_MHz", to_mhz(rows[c].second.second)},
                                 {"wide_sigma", wide[c]}};
  }
  out.json("rabi_fit.json", {{"components", components},
                             {"pi_fraction", f.pi_fraction},
                             {"ambiguous", f.ambiguous},
                             {"gamma_clock_per_s", f.gamma_clock},
                             {"gamma_zeeman_per_s", f.gamma_zeeman},
                             {"residual_norm", f.fit.residual_norm},
                             {"delta_MHz", to_mhz(p0.delta)},
                             {"delta_P_MHz", to_mhz(p0.delta_P)},
                             {"delta_S_MHz", to_mhz(p0.delta_S)},
                             {"delta_B_MHz", to_mhz(p0.delta_B)}});
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunReport run(const Json& resolved) {
  const auto start = std::chrono::steady_clock::now();
  const std::string kind = resolved["kind"];
  const Json& params = resolved["params"];
  const auto seed = resolved["seed"].get<std::uint64_t>();
  Output out(resolved["output_dir"].get<std::string>());

  if (kind == "spectrum") run_spectrum(params, out);
  else if (kind == "cool") run_cool(params, out);
  else if (kind == "scan-detuning") run_scan_detuning(params, out);
  else if (kind == "scan-power") run_scan_power(params, out);
  else if (kind == "modes") run_modes(params, seed, out);
  else if (kind == "sideband") run_sideband(params, seed, out);
  else if (kind == "odf") run_odf(params, seed, out);
  else if (kind == "stark") run_stark(params, seed, out);
  else throw ConfigError("kind: unknown kind '" + kind + "'");

  RunReport report;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.artifacts = out.names();
  Json manifest = {{"tool", "eitcool"},
                   {"version", EITCOOL_VERSION},
                   {"config_hash", config_hash(resolved)},
                   {"timestamp", utc_timestamp()},
                   {"wall_time_s", report.wall_time},
                   {"threads", omp_get_max_threads()},
                   {"artifacts", report.artifacts},
                   {"config", resolved}};
  out.json("manifest.json", manifest);
  report.artifacts.push_back("manifest.json");
  return report;
}

}  // namespace eitcool::cli
