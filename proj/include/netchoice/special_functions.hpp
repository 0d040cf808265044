#pragma once

// Regularized incomplete gamma and beta functions and the tail
// probabilities built on them. Continued fractions use modified Lentz.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "netchoice/common.hpp"

namespace netchoice::special {

namespace detail {

inline constexpr int kMaxIterations = 10000;
inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;

// P(a, x) by its power series; converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by Legendre's continued fraction; for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for I_x(a, b); accurate for x < (a + 1) / (a + b + 2).
inline double beta_fraction(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

inline double log_beta_prefix(double a, double b, double x) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
}

}  // namespace detail

// Lower regularized incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (!(a > 0) || x < 0 || std::isnan(x)) throw std::domain_error("gamma_p: requires a > 0, x >= 0");
  if (x == 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_fraction(a, x);
}

// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
  if (!(a > 0) || x < 0 || std::isnan(x)) throw std::domain_error("gamma_q: requires a > 0, x >= 0");
  if (x == 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_fraction(a, x);
}

// Regularized incomplete beta I_x(a, b).
inline double beta_inc(double a, double b, double x) {
  if (!(a > 0) || !(b > 0) || !(x >= 0 && x <= 1)) throw std::domain_error("beta_inc: requires a, b > 0, 0 <= x <= 1");
  if (x == 0) return 0.0;
  if (x == 1) return 1.0;
  const double prefix = std::exp(detail::log_beta_prefix(a, b, x));
  if (x < (a + 1.0) / (a + b + 2.0)) return prefix * detail::beta_fraction(a, b, x) / a;
  return 1.0 - prefix * detail::beta_fraction(b, a, 1.0 - x) / b;
}

// Upper tail of chi-square with k degrees of freedom.
inline double chi_square_sf(double statistic, double df) {
  if (statistic <= 0) return 1.0;
  return gamma_q(df / 2.0, statistic / 2.0);
}

// Upper tail of F(d1, d2).
inline double f_sf(double statistic, double d1, double d2) {
  if (statistic <= 0) return 1.0;
  if (std::isinf(statistic)) return 0.0;
  // P(F > f) = I_{d2 / (d2 + d1 f)}(d2/2, d1/2)
  return beta_inc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * statistic));
}

// Two-sided p-value of Student's t with df degrees of freedom.
inline double t_two_sided(double statistic, double df) {
  if (std::isnan(statistic)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(statistic)) return 0.0;
  return beta_inc(df / 2.0, 0.5, df / (df + statistic * statistic));
}

// Two-sided p-value of a standard normal z statistic.
inline double normal_two_sided(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

}  // namespace netchoice::special
