#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "selfsim/gas.hpp"

using namespace selfsim;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::Internal;
}

}  // namespace

TEST(GasLaw, RejectsInadmissibleParameters) {
  EXPECT_EQ(kind_of([] { GasLaw(0.0, 2.0, 0.0); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([] { GasLaw(1.0, 0.0, 1.0); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([] { GasLaw(1.0, -1.5, 1.0); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([] { GasLaw(1.0, 0.5, 0.0); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([] { GasLaw(1.0, 2.0, 0.0, LawVariant::DarkEnergy); }), ErrorKind::Domain);
  EXPECT_NO_THROW(GasLaw(1.0, -1.0, 1.0, LawVariant::DarkEnergy));
  EXPECT_NO_THROW(GasLaw(1.0, 2.0, 0.0));
}

TEST(GasLaw, GammaZeroMessageNamesAdmissibleSet) {
  try {
    GasLaw(1.0, 0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("[-1, inf) \\ {0}"), std::string::npos);
  }
}

TEST(Pressure, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(pressure(GasLaw(1.0, 2.0, 0.0), 2.0), 2.0);
  EXPECT_DOUBLE_EQ(pressure(GasLaw(1.0, -1.0, 1.0), 2.0), 0.5);
  EXPECT_EQ(pressure(GasLaw(1.0, 2.0, 0.5), 0.5), 0.0);
  // dark energy: -a^2 (rho^gamma - floor^gamma) with gamma = -1, rho = 2, floor = 1
  EXPECT_DOUBLE_EQ(pressure(GasLaw(1.0, -1.0, 1.0, LawVariant::DarkEnergy), 2.0), 0.5);
}

TEST(Pressure, RejectsInadmissibleDensity) {
  GasLaw sub(1.0, 0.5, 1.0);
  EXPECT_EQ(kind_of([&] { pressure(sub, 1.0); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([&] { pressure(sub, 0.5); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([&] { pressure(sub, NAN); }), ErrorKind::Domain);
  EXPECT_NO_THROW(pressure(GasLaw(1.0, 2.0, 1.0), 1.0));
}

TEST(SoundSpeed, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(sound_speed_sq(GasLaw(3.0, 1.0, 1.0), 7.0), 9.0);
  EXPECT_DOUBLE_EQ(sound_speed_sq(GasLaw(1.0, 2.0, 0.0), 2.0), 2.0);
  EXPECT_DOUBLE_EQ(sound_speed_sq(GasLaw(2.0, -1.0, 1.0), 2.0), 1.0);
  EXPECT_DOUBLE_EQ(sound_speed_sq(GasLaw(2.0, -1.0, 1.0, LawVariant::DarkEnergy), 2.0), 1.0);
}

TEST(Enthalpy, ClosedFormValuesAndInverse) {
  GasLaw g2(1.0, 2.0, 0.0);
  EXPECT_DOUBLE_EQ(enthalpy(g2, 3.0), 3.0);
  EXPECT_DOUBLE_EQ(enthalpy_inverse(g2, 3.0), 3.0);
  GasLaw iso(1.0, 1.0, 1.0);
  EXPECT_NEAR(enthalpy(iso, std::exp(1.0)), 1.0, 1e-15);
  EXPECT_NEAR(enthalpy_inverse(iso, 1.0), std::exp(1.0), 1e-15);
  GasLaw g3(1.0, 3.0, 0.7);
  EXPECT_EQ(enthalpy(g3, 0.7), 0.0);
  EXPECT_EQ(enthalpy_inverse(g3, 0.0), 0.7);
}

TEST(Enthalpy, InverseRangeErrors) {
  EXPECT_EQ(kind_of([] { enthalpy_inverse(GasLaw(1.0, 2.0, 0.0), -1.0); }), ErrorKind::Range);
  EXPECT_EQ(kind_of([] { enthalpy_inverse(GasLaw(1.0, 0.5, 1.0), 0.0); }), ErrorKind::Range);
  // gamma = -1: h = a^2 (floor^-2 - rho^-2) / 2 is bounded by a^2 floor^-2 / 2
  EXPECT_EQ(kind_of([] { enthalpy_inverse(GasLaw(1.0, -1.0, 1.0), 0.6); }), ErrorKind::Range);
  EXPECT_EQ(kind_of([] { enthalpy_inverse(GasLaw(1.0, 2.0, 0.0), INFINITY); }), ErrorKind::Range);
}

TEST(Enthalpy, CfunctionhHoldsWithZeroFloor) {
  for (double g : {1.4, 2.0, 3.0}) {
    GasLaw law(1.3, g, 0.0);
    for (double rho : {0.1, 1.0, 4.5}) {
      EXPECT_NEAR((g - 1.0) * enthalpy(law, rho), sound_speed_sq(law, rho),
                  1e-14 * sound_speed_sq(law, rho));
    }
  }
}

TEST(GasProperties, MonotoneConsistentAndInvertible) {
  for (double g : {-1.0, -0.5, 0.5, 1.0, 1.4, 2.0, 3.0}) {
    for (auto variant : {LawVariant::Standard, LawVariant::DarkEnergy}) {
      if (variant == LawVariant::DarkEnergy && g >= 0.0) continue;
      GasLaw law(1.7, g, 0.3, variant);
      double prev = pressure(law, 0.31);
      for (int k = 1; k <= 40; ++k) {
        const double rho = 0.31 + 0.1 * k;
        const double p = pressure(law, rho);
        EXPECT_GT(p, prev) << "gamma=" << g << " rho=" << rho;
        prev = p;
        const double dr = 1e-5 * rho;
        const double fd = (pressure(law, rho + dr) - pressure(law, rho - dr)) / (2.0 * dr);
        const double c2 = sound_speed_sq(law, rho);
        EXPECT_LE(std::abs(fd - c2), 1e-6 * c2);
        const double back = enthalpy_inverse(law, enthalpy(law, rho));
        EXPECT_LE(std::abs(back - rho), 1e-10 * rho);
      }
    }
  }
}

TEST(Mach, Classification) {
  auto m0 = mach(0.0, 1.0);
  EXPECT_EQ(m0.value, 0.0);
  EXPECT_EQ(m0.regime, FlowRegime::Subsonic);
  auto m2 = mach(2.0, 1.0);
  EXPECT_EQ(m2.value, 2.0);
  EXPECT_EQ(m2.regime, FlowRegime::Supersonic);
  EXPECT_EQ(mach(1.0, 1.0).regime, FlowRegime::Sonic);
  EXPECT_EQ(mach(1.0 + 1e-13, 1.0).regime, FlowRegime::Sonic);
  EXPECT_EQ(mach(1.0 + 1e-9, 1.0).regime, FlowRegime::Supersonic);
  EXPECT_EQ(kind_of([] { mach(1.0, 0.0); }), ErrorKind::Domain);
}

TEST(LawVariant, Parse) {
  EXPECT_EQ(parse_law_variant("standard"), LawVariant::Standard);
  EXPECT_EQ(parse_law_variant("dark-energy"), LawVariant::DarkEnergy);
  EXPECT_EQ(kind_of([] { parse_law_variant("ideal"); }), ErrorKind::Config);
}
