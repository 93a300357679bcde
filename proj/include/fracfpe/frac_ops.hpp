#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fracfpe/errors.hpp"
#include "fracfpe/quadrature.hpp"
#include "fracfpe/specfun.hpp"

namespace fracfpe {

using ScalarFn = std::function<double(double)>;

enum class DerivativeKind {
  Caputo,
  CaputoFabrizio,
  AtanganaBaleanu,
  Gawad,
  // tau = t^beta, an ad hoc time map used by the fig1 and fig2 presets.
  // Not backed by any fractional derivative.
  PowerLaw,
};

inline std::string_view to_string(DerivativeKind k) {
  switch (k) {
    case DerivativeKind::Caputo: return "caputo";
    case DerivativeKind::CaputoFabrizio: return "caputo_fabrizio";
    case DerivativeKind::AtanganaBaleanu: return "atangana_baleanu";
    case DerivativeKind::Gawad: return "gawad";
    case DerivativeKind::PowerLaw: return "power_law";
  }
  return "?";
}

inline std::optional<DerivativeKind> parse_derivative_kind(std::string_view s) {
  for (auto k : {DerivativeKind::Caputo, DerivativeKind::CaputoFabrizio,
                 DerivativeKind::AtanganaBaleanu, DerivativeKind::Gawad, DerivativeKind::PowerLaw}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct FracParams {
  DerivativeKind kind = DerivativeKind::Caputo;
  double alpha = 0.5;      // order, Caputo / Caputo-Fabrizio / Atangana-Baleanu
  double beta = 0.5;       // order, Gawad and PowerLaw
  double lambda = 1.0;     // rate, Gawad
  double t_horizon = 1.0;  // T0
  double ab_norm = 1.0;    // B(alpha), Atangana-Baleanu

  static FracParams caputo(double alpha, double t0) {
    FracParams p;
    p.kind = DerivativeKind::Caputo;
    p.alpha = alpha;
    p.t_horizon = t0;
    p.validate();
    return p;
  }
  static FracParams caputo_fabrizio(double alpha, double t0) {
    FracParams p;
    p.kind = DerivativeKind::CaputoFabrizio;
    p.alpha = alpha;
    p.t_horizon = t0;
    p.validate();
    return p;
  }
  static FracParams atangana_baleanu(double alpha, double t0, double norm = 1.0) {
    FracParams p;
    p.kind = DerivativeKind::AtanganaBaleanu;
    p.alpha = alpha;
    p.t_horizon = t0;
    p.ab_norm = norm;
    p.validate();
    return p;
  }
  static FracParams gawad(double beta, double lambda, double t0) {
    FracParams p;
    p.kind = DerivativeKind::Gawad;
    p.beta = beta;
    p.lambda = lambda;
    p.t_horizon = t0;
    p.validate();
    return p;
  }
  static FracParams power_law(double beta) {
    FracParams p;
    p.kind = DerivativeKind::PowerLaw;
    p.beta = beta;
    p.t_horizon = std::numeric_limits<double>::infinity();
    p.validate();
    return p;
  }

  bool has_horizon() const { return kind != DerivativeKind::PowerLaw; }

  // Caputo admits alpha = 1 exactly (the classical limit p = 1, tau = t).
  void validate() const {
    switch (kind) {
      case DerivativeKind::Caputo:
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("caputo: alpha must lie in (0,1]");
        break;
      case DerivativeKind::CaputoFabrizio:
      case DerivativeKind::AtanganaBaleanu:
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
        if (kind == DerivativeKind::AtanganaBaleanu && !(ab_norm > 0.0)) {
          throw DomainError("atangana_baleanu: B(alpha) must be positive");
        }
        break;
      case DerivativeKind::Gawad:
        if (!(beta > 0.0)) throw DomainError("gawad: beta must be positive");
        if (!(lambda > 0.0)) throw DomainError("gawad: lambda must be positive");
        break;
      case DerivativeKind::PowerLaw:
        if (!(beta > 0.0)) throw DomainError("power_law: beta must be positive");
        return;
    }
    if (!(t_horizon > 0.0) || !std::isfinite(t_horizon)) {
      throw DomainError("t_horizon must be positive and finite");
    }
  }
};

namespace detail {

inline quad::Options quad_options(const specfun::EvalOptions& opt) {
  quad::Options q;
  q.rel_tol = opt.rel_tol;
  q.abs_tol = 1e-300;
  q.max_depth = opt.max_quad_depth;
  return q;
}

inline void require_positive_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("fractional derivative: t must be > 0");
}

inline void require_unit_interval(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("fractional derivative: alpha must lie in (0,1)");
}

// log(e^x - 1) for x > 0 without overflow.
inline double log_expm1(double x) {
  return x > 30.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x));
}

}  // namespace detail

/// Wraps f into a callable returning f' by Richardson-extrapolated central
/// differences (fourth order).
inline ScalarFn numeric_derivative(ScalarFn f, double step = 1e-3) {
  return [f = std::move(f), step](double t) {
    const double h = step * std::max(1.0, std::abs(t));
    const double d1 = (f(t + h) - f(t - h)) / (2.0 * h);
    const double d2 = (f(t + 0.5 * h) - f(t - 0.5 * h)) / h;
    return (4.0 * d2 - d1) / 3.0;
  };
}

// ---------------------------------------------------------------------------
// Integral (convolution) forms. Each takes the derivative f' of the function
// being differentiated.

/// Caputo derivative of order alpha in (0,1) at t > 0.
/// Uses u = (t-s)^{1-alpha}, which removes the endpoint singularity:
///   D f(t) = 1/Gamma(2-alpha) * int_0^{t^{1-alpha}} f'(t - u^{1/(1-alpha)}) du.
inline double caputo_deriv(const ScalarFn& df, double alpha, double t,
                           const specfun::EvalOptions& opt = {}) {
  detail::require_unit_interval(alpha);
  detail::require_positive_time(t);
  const double expo = 1.0 / (1.0 - alpha);
  auto integrand = [&](double u) { return df(t - std::pow(u, expo)); };
  const double upper = std::pow(t, 1.0 - alpha);
  return quad::integral(integrand, 0.0, upper, detail::quad_options(opt)) /
         std::tgamma(2.0 - alpha);
}

inline double cf_deriv(const ScalarFn& df, double alpha, double t,
                       const specfun::EvalOptions& opt = {}) {
  detail::require_unit_interval(alpha);
  detail::require_positive_time(t);
  const double rate = alpha / (1.0 - alpha);
  const double pref = 2.0 * alpha / ((1.0 - alpha) * (2.0 - alpha));
  auto integrand = [&](double s) { return std::exp(-rate * (t - s)) * df(s); };
  return pref * quad::integral(integrand, 0.0, t, detail::quad_options(opt));
}

inline double ab_deriv(const ScalarFn& df, double alpha, double t, double norm = 1.0,
                       const specfun::EvalOptions& opt = {}) {
  detail::require_unit_interval(alpha);
  detail::require_positive_time(t);
  if (!(norm > 0.0)) throw DomainError("ab_deriv: B(alpha) must be positive");
  const double rate = alpha / (1.0 - alpha);
  auto integrand = [&](double s) {
    const double lag = t - s;
    const double kernel = lag > 0.0 ? specfun::ml_series(alpha, 1.0, -rate * std::pow(lag, alpha), opt) : 1.0;
    return kernel * df(s);
  };
  return norm / (1.0 - alpha) * quad::integral(integrand, 0.0, t, detail::quad_options(opt));
}

/// Stretched-exponential kernel derivative with prefactor 2 lambda^{1/beta} / (lambda + 2).
inline double gawad_deriv(const ScalarFn& df, double beta, double lambda, double t,
                          const specfun::EvalOptions& opt = {}) {
  if (!(beta > 0.0)) throw DomainError("gawad_deriv: beta must be positive");
  if (!(lambda > 0.0)) throw DomainError("gawad_deriv: lambda must be positive");
  detail::require_positive_time(t);
  const double pref = 2.0 * std::pow(lambda, 1.0 / beta) / (lambda + 2.0);
  auto integrand = [&](double s) { return std::exp(-lambda * std::pow(t - s, beta)) * df(s); };
  return pref * quad::integral(integrand, 0.0, t, detail::quad_options(opt));
}

/// Dispatches to the integral form matching params.kind.
inline double integral_form_deriv(const FracParams& params, const ScalarFn& df, double t,
                                  const specfun::EvalOptions& opt = {}) {
  switch (params.kind) {
    case DerivativeKind::Caputo: return caputo_deriv(df, params.alpha, t, opt);
    case DerivativeKind::CaputoFabrizio: return cf_deriv(df, params.alpha, t, opt);
    case DerivativeKind::AtanganaBaleanu: return ab_deriv(df, params.alpha, t, params.ab_norm, opt);
    case DerivativeKind::Gawad: return gawad_deriv(df, params.beta, params.lambda, t, opt);
    case DerivativeKind::PowerLaw: break;
  }
  throw DomainError("power_law time map has no integral-form derivative");
}

// ---------------------------------------------------------------------------
// Reduction to non-autonomous form: D f(t) ~ p(t) f'(t), tau' = 1/p.

inline void check_reduction_time(const FracParams& params, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("reduction: t must be >= 0");
  if (params.has_horizon() && !(t < params.t_horizon)) {
    throw DomainError("reduction: t = " + std::to_string(t) + " must be below T0 = " +
                      std::to_string(params.t_horizon));
  }
}

/// Multiplier p(t) of the reduced operator.
inline double reduction_p(const FracParams& params, double t, const specfun::EvalOptions& opt = {}) {
  check_reduction_time(params, t);
  const double rem = params.t_horizon - t;
  const double a = params.alpha;
  switch (params.kind) {
    case DerivativeKind::Caputo:
      return std::pow(rem, 1.0 - a) / std::tgamma(2.0 - a);
    case DerivativeKind::CaputoFabrizio:
      return 2.0 / (2.0 - a) * -std::expm1(-a / (1.0 - a) * rem);
    case DerivativeKind::AtanganaBaleanu:
      return params.ab_norm / (1.0 - a) * rem *
             specfun::ml_general(a, 2.0, -a / (1.0 - a), rem, opt);
    case DerivativeKind::Gawad:
      return 2.0 / (params.lambda + 2.0) *
             specfun::lower_gamma(1.0 / params.beta, params.lambda * std::pow(rem, params.beta), opt);
    case DerivativeKind::PowerLaw:
      return std::pow(t, 1.0 - params.beta) / params.beta;
  }
  return 0.0;
}

/// True when tau has a closed form (Caputo, Caputo-Fabrizio, PowerLaw).
inline bool tau_has_closed_form(DerivativeKind k) {
  return k == DerivativeKind::Caputo || k == DerivativeKind::CaputoFabrizio ||
         k == DerivativeKind::PowerLaw;
}

namespace detail {

// Closed forms, sign-normalized so tau(0) = 0 and tau' = 1/p > 0.
inline double tau_closed(const FracParams& params, double t) {
  const double a = params.alpha, t0 = params.t_horizon;
  switch (params.kind) {
    case DerivativeKind::Caputo:
      if (a == 1.0) return t;
      return std::tgamma(2.0 - a) / a * (std::pow(t0, a) - std::pow(t0 - t, a));
    case DerivativeKind::CaputoFabrizio: {
      const double rate = a / (1.0 - a);
      const double logratio = log_expm1(rate * (t0 - t)) - log_expm1(rate * t0);
      return -(2.0 - a) * (1.0 - a) / (2.0 * a) * logratio;
    }
    case DerivativeKind::PowerLaw:
      return std::pow(t, params.beta);
    default:
      break;
  }
  throw DomainError("tau has no closed form for this kind");
}

inline double tau_quadrature(const FracParams& params, double from, double to,
                             const specfun::EvalOptions& opt) {
  auto inv_p = [&](double s) { return 1.0 / reduction_p(params, s, opt); };
  return quad::integral(inv_p, from, to, quad_options(opt));
}

}  // namespace detail

/// Rescaled time tau(t), with tau(0) = 0 and tau' = 1/p. Quadrature-backed
/// kinds integrate 1/p directly; TimeMap caches the same integral on knots.
inline double reduction_tau(const FracParams& params, double t, const specfun::EvalOptions& opt = {}) {
  check_reduction_time(params, t);
  if (t == 0.0) return 0.0;
  if (tau_has_closed_form(params.kind)) return detail::tau_closed(params, t);
  return detail::tau_quadrature(params, 0.0, t, opt);
}

class TimeMap {
 public:
  enum class Strategy { ClosedForm, Quadrature };
  static constexpr int kKnots = 512;

  explicit TimeMap(FracParams params, specfun::EvalOptions opt = {})
      : params_(params), opt_(opt) {
    params_.validate();
    opt_.validate();
    strategy_ = tau_has_closed_form(params_.kind) ? Strategy::ClosedForm : Strategy::Quadrature;
    if (strategy_ == Strategy::Quadrature) {
      knot_t_.resize(kKnots);
      knot_tau_.resize(kKnots);
      const double dt = params_.t_horizon / kKnots;
      knot_t_[0] = 0.0;
      knot_tau_[0] = 0.0;
      for (int k = 1; k < kKnots; ++k) {
        knot_t_[k] = dt * k;
        knot_tau_[k] = knot_tau_[k - 1] + detail::tau_quadrature(params_, knot_t_[k - 1], knot_t_[k], opt_);
      }
    }
  }

  const FracParams& params() const { return params_; }
  Strategy strategy() const { return strategy_; }
  const std::vector<double>& knot_times() const { return knot_t_; }
  const std::vector<double>& knot_taus() const { return knot_tau_; }
  double horizon() const { return params_.t_horizon; }

  double p(double t) const { return reduction_p(params_, t, opt_); }

  double tau(double t) const {
    check_reduction_time(params_, t);
    if (strategy_ == Strategy::ClosedForm) return t == 0.0 ? 0.0 : detail::tau_closed(params_, t);
    const double dt = params_.t_horizon / kKnots;
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(t / dt), kKnots - 1);
    if (knot_t_[k] > t) --k;
    if (knot_t_[k] == t) return knot_tau_[k];
    return knot_tau_[k] + detail::tau_quadrature(params_, knot_t_[k], t, opt_);
  }

  double dtau_dt(double t) const { return 1.0 / p(t); }

 private:
  FracParams params_;
  specfun::EvalOptions opt_;
  Strategy strategy_;
  std::vector<double> knot_t_, knot_tau_;
};

/// Function invariant under the reduced stretched-exponential derivative:
/// exp((lambda+2)/2 * int_0^t ds / gamma(1/beta, lambda (T0-s)^beta)).
inline double gfd_invariant(double beta, double lambda, double t_horizon, double t,
                            const specfun::EvalOptions& opt = {}) {
  return std::exp(reduction_tau(FracParams::gawad(beta, lambda, t_horizon), t, opt));
}

/// Reduced operator p(t) f'(t).
inline double reduced_form_deriv(const FracParams& params, const ScalarFn& df, double t,
                                 const specfun::EvalOptions& opt = {}) {
  return reduction_p(params, t, opt) * df(t);
}

/// Pointwise gap between the integral definition and the reduced operator.
/// The two are different operators; this only reports how far apart they are.
inline double reduction_discrepancy(const FracParams& params, const ScalarFn& df, double t,
                                    const specfun::EvalOptions& opt = {}) {
  return integral_form_deriv(params, df, t, opt) - reduced_form_deriv(params, df, t, opt);
}

struct AlgebraReport {
  double linearity = 0.0;
  double product = 0.0;
  double quotient = 0.0;
  // Product rule evaluated with the integral form; non-zero in general.
  std::optional<double> integral_product;
};

/// Residuals of linearity, product and quotient rules for the reduced form.
inline AlgebraReport reduced_algebra_check(const ScalarFn& f, const ScalarFn& g,
                                           const FracParams& params, double t,
                                           bool with_integral_form = false,
                                           const specfun::EvalOptions& opt = {}) {
  const double gt = g(t);
  if (gt == 0.0) throw DomainError("reduced_algebra_check: g(t) = 0, quotient rule undefined");
  const double p = reduction_p(params, t, opt);
  auto D = [&](ScalarFn u) { return p * numeric_derivative(std::move(u))(t); };
  const double ft = f(t);
  const double df = D(f), dg = D(g);
  AlgebraReport r;
  r.linearity = D([&](double s) { return f(s) + g(s); }) - (df + dg);
  r.product = D([&](double s) { return f(s) * g(s); }) - (ft * dg + gt * df);
  r.quotient = D([&](double s) { return f(s) / g(s); }) - (gt * df - ft * dg) / (gt * gt);
  if (with_integral_form && params.kind != DerivativeKind::PowerLaw && t > 0.0) {
    auto I = [&](ScalarFn u) {
      return integral_form_deriv(params, numeric_derivative(std::move(u)), t, opt);
    };
    r.integral_product = I([&](double s) { return f(s) * g(s); }) - (ft * I(g) + gt * I(f));
  }
  return r;
}

}  // namespace fracfpe
