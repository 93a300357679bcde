#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fracfpe/errors.hpp"

namespace fracfpe::specfun {

struct EvalOptions {
  double rel_tol = 1e-10;
  int max_terms = 10'000;
  int max_quad_depth = 40;

  void validate() const {
    if (!(rel_tol > 0.0)) throw DomainError("EvalOptions: rel_tol must be positive");
    if (max_terms < 1) throw DomainError("EvalOptions: max_terms must be >= 1");
    if (max_quad_depth < 1) throw DomainError("EvalOptions: max_quad_depth must be >= 1");
  }
};

namespace detail {

// signgam-free log-gamma, safe for concurrent callers.
inline double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

inline long double log_gamma_ld(long double x) {
  int sign = 0;
  return ::lgammal_r(x, &sign);
}

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && std::floor(x) == x; }

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite argument");
}

}  // namespace detail

/// Dawson's integral F(x) = e^{-x^2} * integral_0^x e^{y^2} dy.
///
/// This is the function the solution formulas call "erfi". It is related to
/// the standard imaginary error function by F(x) = sqrt(pi)/2 e^{-x^2} erfi(x).
/// Evaluated with Rybicki's sampling sum (step 0.2, truncation error below
/// 1e-26) for |x| <= 50 and with the asymptotic series beyond.
inline double dawson_erfi(double x) {
  detail::require_finite(x, "dawson_erfi");
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  const double sgn = x < 0.0 ? -1.0 : 1.0;
  if (ax > 50.0) {
    // F(x) ~ 1/(2x) * sum_k (2k-1)!! / (2x^2)^k
    const double w = 1.0 / (2.0 * ax * ax);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
      term *= (2.0 * k - 1.0) * w;
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return sgn * sum / (2.0 * ax);
  }
  constexpr double h = 0.2;
  const int n_max = static_cast<int>((ax + 7.0) / h) + 2;
  double sum = 0.0;
  for (int n = 1; n <= n_max; n += 2) {
    const double nh = n * h;
    const double a = (ax + nh) * (ax + nh);
    const double spread = 4.0 * nh * ax;
    double diff;
    if (spread < 700.0) {
      diff = std::exp(-a) * std::expm1(spread);
    } else {
      diff = std::exp(-(ax - nh) * (ax - nh));
    }
    sum += diff / n;
  }
  return sgn * sum / std::sqrt(std::numbers::pi);
}

/// Physicists' Hermite polynomial H_n(x).
inline double hermite(int n, double x) {
  if (n < 0) throw DomainError("hermite: negative degree");
  if (n == 0) return 1.0;
  double h_prev = 1.0, h = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * x * h - 2.0 * k * h_prev;
    h_prev = h;
    h = next;
  }
  return h;
}

/// Confluent hypergeometric function 1F1(a; b; x).
///
/// Terminating (polynomial) cases are summed directly for any x. Otherwise
/// negative x goes through Kummer's transformation e^x 1F1(b-a; b; -x) so the
/// series has no alternating cancellation.
inline double kummer_1f1(double a, double b, double x, const EvalOptions& opt = {}) {
  detail::require_finite(a, "kummer_1f1");
  detail::require_finite(b, "kummer_1f1");
  detail::require_finite(x, "kummer_1f1");
  const bool terminates = detail::is_nonpositive_integer(a);
  if (detail::is_nonpositive_integer(b) && !(terminates && -a <= -b)) {
    throw DomainError("kummer_1f1: b = " + std::to_string(b) + " is a pole of the series");
  }
  if (x == 0.0 || a == 0.0) return 1.0;
  if (terminates) {
    const int n = static_cast<int>(-a);
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < n; ++k) {
      term *= (a + k) / (b + k) * x / (k + 1);
      sum += term;
    }
    return sum;
  }
  if (x < 0.0) return std::exp(x) * kummer_1f1(b - a, b, -x, opt);
  double term = 1.0, sum = 1.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int k = 0; k < opt.max_terms; ++k) {
    term *= (a + k) / (b + k) * x / (k + 1);
    sum += term;
    if (std::abs(term) <= eps * std::abs(sum) && k > x) return sum;
    if (!std::isfinite(sum)) throw RangeError("kummer_1f1: overflow");
  }
  if (std::abs(term) <= opt.rel_tol * std::abs(sum)) return sum;
  throw AccuracyError("kummer_1f1: series did not converge within max_terms");
}

/// The single generalized-hypergeometric instance used by the solution
/// formulas: pFq({-n/2}, {1/2}, x), i.e. 1F1(-n/2; 1/2; x).
inline double hypergeom_pfq_special(int n, double x, const EvalOptions& opt = {}) {
  if (n < 0) throw DomainError("hypergeom_pfq_special: negative n");
  return kummer_1f1(-0.5 * n, 0.5, x, opt);
}

namespace detail {

// gamma(a,x) by its power series; valid and fast for x < a + 1.
inline double lower_gamma_series(double a, double x, const EvalOptions& opt) {
  double ap = a, del = 1.0 / a, sum = del;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int n = 0; n < opt.max_terms; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < eps * std::abs(sum)) {
      return sum * std::exp(-x + a * std::log(x));
    }
  }
  throw AccuracyError("lower_gamma: series did not converge");
}

// Gamma(a,x) by the Legendre continued fraction (modified Lentz); x >= a + 1.
inline double upper_gamma_cf(double a, double x, const EvalOptions& opt) {
  constexpr double tiny = 1e-300;
  const double eps = std::numeric_limits<double>::epsilon();
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < opt.max_terms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return std::exp(-x + a * std::log(x)) * h;
  }
  throw AccuracyError("upper_gamma: continued fraction did not converge");
}

inline void check_gamma_args(double a, double x) {
  require_finite(a, "incomplete gamma");
  if (!(a > 0.0)) throw DomainError("incomplete gamma: a must be positive");
  if (!(x >= 0.0) || std::isnan(x)) throw DomainError("incomplete gamma: x must be nonnegative");
}

}  // namespace detail

/// Lower incomplete gamma function gamma(a, x) = int_0^x e^{-y} y^{a-1} dy.
inline double lower_gamma(double a, double x, const EvalOptions& opt = {}) {
  detail::check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return std::tgamma(a);
  if (x < a + 1.0) return detail::lower_gamma_series(a, x, opt);
  return std::tgamma(a) - detail::upper_gamma_cf(a, x, opt);
}

/// Upper incomplete gamma function Gamma(a, x) = int_x^inf e^{-y} y^{a-1} dy.
inline double upper_gamma(double a, double x, const EvalOptions& opt = {}) {
  detail::check_gamma_args(a, x);
  if (x == 0.0) return std::tgamma(a);
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return std::tgamma(a) - detail::lower_gamma_series(a, x, opt);
  return detail::upper_gamma_cf(a, x, opt);
}

/// Sum_{n>=0} z^n / Gamma(alpha n + beta), accumulated in extended precision.
///
/// This single series backs both Mittag-Leffler entry points below. For
/// negative z the terms alternate, and extended precision absorbs the
/// cancellation for |z| up to roughly 25.
inline double ml_series(double alpha, double beta, double z, const EvalOptions& opt = {}) {
  detail::require_finite(z, "ml_series");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("mittag_leffler: alpha must lie in (0,1]");
  if (!(beta > 0.0)) throw DomainError("mittag_leffler: beta must be positive");
  if (z == 0.0) return 1.0 / std::tgamma(beta);
  const long double log_abs_z = std::log(std::abs(static_cast<long double>(z)));
  const bool negative = z < 0.0;
  long double sum = 0.0L;
  long double prev_abs = 0.0L;
  constexpr long double eps = std::numeric_limits<long double>::epsilon();
  for (int n = 0; n < opt.max_terms; ++n) {
    const long double log_term =
        n * log_abs_z - detail::log_gamma_ld(static_cast<long double>(alpha) * n + beta);
    const long double mag = std::exp(log_term);
    sum += (negative && (n % 2 == 1)) ? -mag : mag;
    if (!std::isfinite(static_cast<double>(sum))) throw RangeError("mittag_leffler: overflow");
    const bool decreasing = n > 0 && mag < prev_abs;
    if (decreasing && mag <= eps * std::abs(sum)) return static_cast<double>(sum);
    prev_abs = mag;
  }
  throw AccuracyError("mittag_leffler: series did not converge within max_terms");
}

/// Mittag-Leffler function E_alpha(t) = sum t^n / Gamma(alpha n + 1).
inline double mittag_leffler(double alpha, double t, const EvalOptions& opt = {}) {
  return ml_series(alpha, 1.0, t, opt);
}

/// Two-parameter fractional exponential
/// e_{alpha,beta}(lambda, t) = sum lambda^n t^{alpha n} / Gamma(alpha n + beta), t >= 0.
inline double ml_general(double alpha, double beta, double lambda, double t,
                         const EvalOptions& opt = {}) {
  detail::require_finite(t, "ml_general");
  if (t < 0.0) throw DomainError("ml_general: t must be nonnegative");
  return ml_series(alpha, beta, lambda * std::pow(t, alpha), opt);
}

/// Fractional exponential e_alpha(t) = e_{alpha,1}(1, t).
inline double fractional_exp(double alpha, double t, const EvalOptions& opt = {}) {
  return ml_general(alpha, 1.0, 1.0, t, opt);
}

}  // namespace fracfpe::specfun
