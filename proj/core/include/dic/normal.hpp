#pragma once

namespace dic {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x);
double normal_cdf(double x);
//! Inverse of the standard normal CDF; p must lie in (0,1).
double normal_inverse_cdf(double p);

/*! Bivariate standard normal CDF P(X <= a, Y <= b) with correlation rho.
    Infinite limits are accepted. Accuracy is close to double precision
    (Genz's tabulated Gauss-Legendre scheme).
*/
double bivariate_normal_cdf(double a, double b, double rho);

} // namespace dic
