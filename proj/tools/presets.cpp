#include "cli.hpp"

namespace eitcool::cli {

namespace {

Json preset(const std::string& name, const std::string& kind, Json params) {
  return {{"kind", kind}, {"output_dir", "out/" + name}, {"seed", 1}, {"params", std::move(params)}};
}

// Single ion at the operating point: probe fixed at 55.6 MHz, drive at the
// predicted optimum, Rabi frequencies scaled to a 2.31 MHz dressed shift.
Json operating_atom() {
  return {{"omega_sigma_plus", 18.03}, {"omega_sigma_minus", 16.74}, {"omega_pi", 6.67},
          {"delta_d", 51.07},          {"delta_p", 55.6},            {"delta_B", 4.6},
          {"gamma", 21.0},             {"stark_target", 2.31},       {"stark_branch", "sigma_minus"}};
}

Json crystal12() {
  return {{"n_ions", 12},    {"mass", 170.936323}, {"omega_x", 0.34},
          {"omega_y", 1.22}, {"omega_z", 0.42},    {"restarts", 20}};
}

Json stark_beam(double plus, double pi, double minus, double delta) {
  return {{"beam", {{"omega_plus", plus}, {"omega_minus", minus}, {"omega_pi", pi}, {"delta", delta}}},
          {"gamma_clock_per_s", 2e6},
          {"gamma_zeeman_per_s", 2e6}};
}

std::map<std::string, Json> build() {
  std::map<std::string, Json> out;
  auto add = [&](const std::string& name, const std::string& kind, Json params) {
    out[name] = preset(name, kind, std::move(params));
  };

  add("fig1b", "spectrum",
      {{"atom",
        {{"omega_sigma_plus", 17.0}, {"omega_sigma_minus", 17.0}, {"omega_pi", 4.0},
         {"delta_d", 55.6}, {"delta_p", 55.6}, {"delta_B", 4.6}, {"gamma", 21.0}}},
       {"grid", {{"start", -40.0}, {"stop", 80.0}, {"points", 1201}}},
       {"nu", 1.5}});

  add("fig5", "spectrum",
      {{"atom",
        {{"omega_sigma_plus", 17.0}, {"omega_sigma_minus", 17.0}, {"omega_pi", 0.5},
         {"delta_d", 55.0}, {"delta_p", 55.0}, {"delta_B", 4.6}, {"gamma", 21.0}}},
       {"grid", {{"start", 30.0}, {"stop", 80.0}, {"points", 400}}}});

  add("fig2b", "cool",
      {{"atom", operating_atom()},
       {"mode", {{"nu", 2.38}, {"n_max", 40}}},
       {"nbar0", 7.0},
       {"t_max", 150.0},
       {"points", 31}});

  add("fig2e", "scan-detuning",
      {{"atom", operating_atom()},
       {"mode", {{"nu", 2.38}, {"n_max", 25}}},
       {"t_fix", 65.0},
       {"detunings", {{"start", 3.0}, {"stop", 6.0}, {"points", 25}}}});

  add("fig3a", "scan-power",
      {{"atom", operating_atom()},
       {"mode", {{"nu", 2.38}, {"n_max", 25}}},
       {"beam", "drive"},
       {"powers", {0.25, 0.5, 0.75, 1.0}}});

  add("fig3b", "scan-power",
      {{"atom", operating_atom()},
       {"mode", {{"nu", 2.38}, {"n_max", 25}}},
       {"beam", "probe"},
       {"powers", {0.25, 0.5, 1.0, 1.5, 2.0}}});

  add("fig4", "sideband",
      {{"crystal", crystal12()}, {"nbar", 1.04}, {"n_max", 40}, {"shots", 200}});

  add("fig4-modes", "modes", {{"crystal", crystal12()}});

  add("fig4-odf", "odf",
      {{"crystal", crystal12()},
       {"offset", 0.37},
       {"heights", Json::array()},
       {"delays_ms", Json::array()}});

  add("appendixE-drive", "stark", stark_beam(18.03, 1.72, 16.74, 51.07));
  add("appendixE-probe", "stark", stark_beam(3.17, 6.67, 1.49, 55.6));
  return out;
}

}  // namespace

const std::map<std::string, Json>& presets() {
  static const std::map<std::string, Json> all = build();
  return all;
}

}  // namespace eitcool::cli
