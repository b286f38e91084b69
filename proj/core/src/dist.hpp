#pragma once

// Internal wrappers around Boost.Math special functions. Not installed;
// library headers stay standard-library-only.

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace parfilter::dist {

inline double normal_cdf(double z) {
  static const boost::math::normal_distribution<double> unit_normal(0.0, 1.0);
  return boost::math::cdf(unit_normal, z);
}

inline double normal_quantile(double u) {
  static const boost::math::normal_distribution<double> unit_normal(0.0, 1.0);
  return boost::math::quantile(unit_normal, u);
}

// Survival function of the chi-squared distribution with dof degrees of
// freedom: regularized upper incomplete gamma at shape dof/2.
inline double chisq_survival(double x, double dof) {
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

inline double beta_pdf(double p, double a, double b) {
  const boost::math::beta_distribution<double> d(a, b);
  return boost::math::pdf(d, p);
}

// Inverse CDF of Beta(a, b); Boost solves the regularized incomplete beta
// to machine precision, well inside the 1e-12 accuracy this project needs.
inline double beta_quantile(double u, double a, double b) {
  return boost::math::ibeta_inv(a, b, u);
}

}  // namespace parfilter::dist
