#pragma once
// Generated by gen_mms.py; do not edit.

#include <cmath>

namespace oracle {

inline double mms_phi(double x, double y) {
  return -1.0/2.0*pow(x, 2) - 1.0/2.0*pow(y, 2) + (1.0/20.0)*sin(M_PI*x)*sin(M_PI*y) - 1;
}

/// Q(phi*) for gamma != 1.
inline double mms_forcing(double x, double y, double gamma) {
  const double x0 = M_PI*y;
  const double x1 = sin(x0);
  const double x2 = M_PI*x;
  const double x3 = cos(x2);
  const double x4 = -x + (1.0/20.0)*M_PI*x1*x3;
  const double x5 = pow(x4, 2);
  const double x6 = sin(x2);
  const double x7 = cos(x0);
  const double x8 = (1.0/20.0)*M_PI*x6*x7 - y;
  const double x9 = pow(x8, 2);
  const double x10 = pow(M_PI, 2);
  const double x11 = (1.0/20.0)*x1*x10*x6 + 1;
  const double x12 = 1 - gamma;
  const double x13 = -1.0/2.0*pow(x, 2) + (1.0/20.0)*x1*x6 + (1.0/2.0)*x5 + (1.0/2.0)*x9 - 1.0/2.0*pow(y, 2) - 1;
  return -1.0/10.0*x10*x3*x4*x7*x8 - 2*x11*x12*x13 + x11*x5 + x11*x9 + 2*x12*x13 - x5 - x9;
}

}  // namespace oracle
