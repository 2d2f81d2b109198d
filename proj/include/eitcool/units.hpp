#pragma once

#include <numbers>

// Physical constants (CODATA 2018, 9 significant digits) and the unit
// conversions used at the config boundary. Internally every frequency is
// an angular frequency in rad/s and every time is in seconds.
namespace eitcool::units {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kHbar = 1.05457182e-34;             // J s
inline constexpr double kElementaryCharge = 1.60217663e-19;  // C
inline constexpr double kEpsilon0 = 8.85418781e-12;          // F/m
inline constexpr double kAmu = 1.66053907e-27;               // kg

inline constexpr double kYb171MassAmu = 170.936323;
inline constexpr double kYbCoolingWavelengthNm = 369.5;

// MHz meaning omega / 2pi  ->  rad/s
constexpr double mhz(double f_mhz) { return kTwoPi * f_mhz * 1e6; }
constexpr double to_mhz(double omega) { return omega / (kTwoPi * 1e6); }
constexpr double us(double t_us) { return t_us * 1e-6; }
constexpr double to_us(double t_s) { return t_s * 1e6; }

}  // namespace eitcool::units
