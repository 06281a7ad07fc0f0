#pragma once

#include "types.hpp"

namespace rblab {

// Normalizing constant C_H^Z = sqrt(2H(2H-1)) / (2 B(1-H, H/2)).  With this
// constant the process has E Z(t)Z(s) = (t^2H + s^2H - |t-s|^2H)/2, so in
// particular E Z(1)^2 = 1.
double c_h_z(Hurst h);

// Kernel of the order-2 Wiener-Ito representation,
//   L_t(x1, x2) = C_H^Z x1^{-H/2} x2^{-H/2}
//                 int_{x1 v x2}^t u^H (u-x1)^{H/2-1} (u-x2)^{H/2-1} du
// on (0,t)^2 and zero elsewhere.  The inner integral has an algebraic
// singularity at u = x1 v x2; it is removed by the substitution
// u = (x1 v x2) + tau^(2/H) and the remainder is integrated adaptively to the
// requested relative tolerance.  Throws diagonal_evaluation for x1 == x2
// inside the support.
double kernel_L(double t, double x1, double x2, Hurst h, double rel_tol = 1e-8);

// Closed-form covariance shared by all Hermite orders:
// (t^2H + s^2H - |t-s|^2H) / 2.
double covariance_oracle(Hurst h, double s, double t);

} // namespace rblab
