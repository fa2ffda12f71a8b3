#pragma once

/// @file gas.hpp
/// @brief Generalized polytropic gas: pressure, sound speed, enthalpy and
/// Mach-number classification.
///
/// Standard law:    p(rho) = (a^2 / gamma) (rho^gamma - rho_floor^gamma)
/// DarkEnergy law:  p(rho) = -a^2 (rho^gamma - rho_floor^gamma), gamma in [-1, 0)
///
/// Enthalpy is measured relative to rho_floor, H(rho) = int_{rho_floor}^{rho} p'(z)/z dz.

#include <cmath>
#include <sstream>
#include <string>
#include <string_view>

#include "selfsim/errors.hpp"

namespace selfsim {

enum class LawVariant { Standard, DarkEnergy };

inline std::string_view to_string(LawVariant v) {
  return v == LawVariant::Standard ? "standard" : "dark-energy";
}

inline LawVariant parse_law_variant(std::string_view name) {
  if (name == "standard" || name == "Standard") return LawVariant::Standard;
  if (name == "dark-energy" || name == "DarkEnergy" || name == "dark_energy") {
    return LawVariant::DarkEnergy;
  }
  fail(ErrorKind::Config, "unknown gas variant '" + std::string(name) +
                              "' (expected standard or dark-energy)");
}

/// Immutable constitutive parameters. Construction validates the admissible set.
class GasLaw {
 public:
  GasLaw(double a, double gamma, double rho_floor, LawVariant variant = LawVariant::Standard)
      : a_(a), gamma_(gamma), rho_floor_(rho_floor), variant_(variant) {
    if (!(std::isfinite(a) && a > 0.0)) {
      fail(ErrorKind::Domain, "gas.a must be finite and > 0");
    }
    if (!std::isfinite(gamma) || gamma < -1.0 || gamma == 0.0) {
      std::ostringstream os;
      os << "gas.gamma = " << gamma << " is outside the admissible set [-1, inf) \\ {0}";
      fail(ErrorKind::Domain, os.str());
    }
    if (!std::isfinite(rho_floor) || rho_floor < 0.0) {
      fail(ErrorKind::Domain, "gas.rho_floor must be finite and >= 0");
    }
    if (gamma < 1.0 && rho_floor <= 0.0) {
      fail(ErrorKind::Domain, "gas.rho_floor must be > 0 when gamma < 1");
    }
    if (variant == LawVariant::DarkEnergy && !(gamma < 0.0)) {
      fail(ErrorKind::Domain, "dark-energy variant requires gamma in [-1, 0)");
    }
  }

  double a() const noexcept { return a_; }
  double gamma() const noexcept { return gamma_; }
  double rho_floor() const noexcept { return rho_floor_; }
  LawVariant variant() const noexcept { return variant_; }
  bool isothermal() const noexcept { return gamma_ == 1.0; }

  /// rho > rho_floor (strict for gamma < 1), rho > 0 and finite.
  bool admissible(double rho) const noexcept {
    if (!std::isfinite(rho) || rho <= 0.0) return false;
    return gamma_ < 1.0 ? rho > rho_floor_ : rho >= rho_floor_;
  }

  void require_admissible(double rho) const {
    if (!admissible(rho)) {
      std::ostringstream os;
      os << "density " << rho << " is inadmissible for rho_floor = " << rho_floor_
         << " and gamma = " << gamma_;
      fail(ErrorKind::Domain, os.str());
    }
  }

 private:
  double a_;
  double gamma_;
  double rho_floor_;
  LawVariant variant_;
};

inline double pressure(const GasLaw& law, double rho) {
  law.require_admissible(rho);
  const double a2 = law.a() * law.a();
  const double g = law.gamma();
  const double diff = std::pow(rho, g) - std::pow(law.rho_floor(), g);
  if (law.variant() == LawVariant::DarkEnergy) return -a2 * diff;
  return a2 / g * diff;
}

/// c^2 = p'(rho).
inline double sound_speed_sq(const GasLaw& law, double rho) {
  law.require_admissible(rho);
  const double a2 = law.a() * law.a();
  const double g = law.gamma();
  double c2 = 0.0;
  if (g == 1.0) {
    c2 = a2;
  } else if (law.variant() == LawVariant::DarkEnergy) {
    c2 = -a2 * g * std::pow(rho, g - 1.0);
  } else {
    c2 = a2 * std::pow(rho, g - 1.0);
  }
  if (!(c2 > 0.0) || !std::isfinite(c2)) {
    fail(ErrorKind::Internal, "non-positive sound speed for an admissible density");
  }
  return c2;
}

namespace detail {
// Coefficient k with c^2 = k rho^(gamma-1).
inline double sound_coefficient(const GasLaw& law) {
  const double a2 = law.a() * law.a();
  return law.variant() == LawVariant::DarkEnergy ? -a2 * law.gamma() : a2;
}
}  // namespace detail

inline double enthalpy(const GasLaw& law, double rho) {
  law.require_admissible(rho);
  const double g = law.gamma();
  if (g == 1.0) {
    if (law.rho_floor() <= 0.0) {
      fail(ErrorKind::Domain, "isothermal enthalpy needs rho_floor > 0 as anchor");
    }
    return law.a() * law.a() * std::log(rho / law.rho_floor());
  }
  const double k = detail::sound_coefficient(law);
  const double rf = law.rho_floor();
  const double floor_term = rf > 0.0 ? std::pow(rf, g - 1.0) : 0.0;
  return k * (std::pow(rho, g - 1.0) - floor_term) / (g - 1.0);
}

/// Closed-form inverse of enthalpy().
inline double enthalpy_inverse(const GasLaw& law, double h) {
  if (!std::isfinite(h)) fail(ErrorKind::Range, "enthalpy must be finite");
  const double g = law.gamma();
  const double rf = law.rho_floor();
  auto out_of_range = [&]() {
    std::ostringstream os;
    os << "enthalpy " << h << " is outside the attainable range for gamma = " << g;
    fail(ErrorKind::Range, os.str());
  };
  // gamma < 1 excludes rho == rho_floor, hence h == 0.
  if (g < 1.0 ? h <= 0.0 : h < 0.0) out_of_range();
  if (g == 1.0) {
    if (rf <= 0.0) fail(ErrorKind::Domain, "isothermal enthalpy needs rho_floor > 0 as anchor");
    return rf * std::exp(h / (law.a() * law.a()));
  }
  const double k = detail::sound_coefficient(law);
  const double floor_term = rf > 0.0 ? std::pow(rf, g - 1.0) : 0.0;
  const double base = floor_term + h * (g - 1.0) / k;
  if (!(base > 0.0)) out_of_range();
  const double rho = h == 0.0 ? rf : std::pow(base, 1.0 / (g - 1.0));
  if (!law.admissible(rho)) out_of_range();
  return rho;
}

enum class FlowRegime { Subsonic, Sonic, Supersonic };

inline std::string_view to_string(FlowRegime r) {
  switch (r) {
    case FlowRegime::Subsonic: return "subsonic";
    case FlowRegime::Sonic: return "sonic";
    case FlowRegime::Supersonic: return "supersonic";
  }
  return "?";
}

inline constexpr double kDefaultSonicTolerance = 1e-12;

/// Classify a ratio (Mach or pseudo-Mach) against 1 with a relative band.
inline FlowRegime classify_ratio(double ratio, double tol_sonic = kDefaultSonicTolerance) {
  if (std::abs(ratio - 1.0) <= tol_sonic) return FlowRegime::Sonic;
  return ratio < 1.0 ? FlowRegime::Subsonic : FlowRegime::Supersonic;
}

struct MachNumber {
  double value;
  FlowRegime regime;
};

inline MachNumber mach(double speed, double c, double tol_sonic = kDefaultSonicTolerance) {
  if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::Domain, "sound speed must be > 0");
  if (!(speed >= 0.0)) fail(ErrorKind::Domain, "speed must be >= 0");
  const double m = speed / c;
  return {m, classify_ratio(m, tol_sonic)};
}

}  // namespace selfsim
