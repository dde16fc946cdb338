#pragma once

// Numerical-quadrature reference for the Gaussian CRPS:
//   integral over x of (F(x) - 1{x >= y})^2, F the N(mu, sigma^2) CDF,
// split at y and evaluated with adaptive Gauss-Kronrod on each half line.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace stoic::testing {

inline double crps_quadrature(double mu, double sigma, double y) {
  using boost::math::quadrature::gauss_kronrod;
  const boost::math::normal_distribution<double> dist(mu, sigma);
  const double inf = std::numeric_limits<double>::infinity();
  auto below = [&](double x) {
    const double f = boost::math::cdf(dist, x);
    return f * f;
  };
  auto above = [&](double x) {
    const double s = boost::math::cdf(boost::math::complement(dist, x));
    return s * s;
  };
  const double lo = gauss_kronrod<double, 61>::integrate(below, -inf, y, 15, 1e-13);
  const double hi = gauss_kronrod<double, 61>::integrate(above, y, inf, 15, 1e-13);
  return lo + hi;
}

}  // namespace stoic::testing
