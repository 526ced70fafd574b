#pragma once

#include <numbers>

// Everything inside the library is SI (m, s, rad/s, W). Lab units only
// appear at the config boundary, through these literals.
namespace nli {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;

namespace units {

constexpr double operator""_nm(long double v) { return static_cast<double>(v) * 1e-9; }
constexpr double operator""_nm(unsigned long long v) { return static_cast<double>(v) * 1e-9; }
constexpr double operator""_m(long double v) { return static_cast<double>(v); }
constexpr double operator""_m(unsigned long long v) { return static_cast<double>(v); }
constexpr double operator""_W(long double v) { return static_cast<double>(v); }
constexpr double operator""_W(unsigned long long v) { return static_cast<double>(v); }
constexpr double operator""_uW(long double v) { return static_cast<double>(v) * 1e-6; }
constexpr double operator""_uW(unsigned long long v) { return static_cast<double>(v) * 1e-6; }
constexpr double operator""_MHz(long double v) { return static_cast<double>(v) * 1e6; }
constexpr double operator""_MHz(unsigned long long v) { return static_cast<double>(v) * 1e6; }
constexpr double operator""_ps(long double v) { return static_cast<double>(v) * 1e-12; }
constexpr double operator""_ps(unsigned long long v) { return static_cast<double>(v) * 1e-12; }
constexpr double operator""_us(long double v) { return static_cast<double>(v) * 1e-6; }
constexpr double operator""_us(unsigned long long v) { return static_cast<double>(v) * 1e-6; }

}  // namespace units

// ps/(nm km) -> s/m^2
constexpr double dispersion_from_lab(double ps_per_nm_km) { return ps_per_nm_km * 1e-6; }
// ps/(km nm^2) -> s/m^3
constexpr double dispersion_slope_from_lab(double ps_per_km_nm2) { return ps_per_km_nm2 * 1e3; }
// 1/(W km) -> 1/(W m)
constexpr double gamma_from_lab(double per_w_km) { return per_w_km * 1e-3; }

constexpr double to_nm(double metres) { return metres * 1e9; }

inline double wavelength_to_omega(double wavelength) {
  return 2.0 * kPi * kSpeedOfLight / wavelength;
}
inline double omega_to_wavelength(double omega) {
  return 2.0 * kPi * kSpeedOfLight / omega;
}

}  // namespace nli
