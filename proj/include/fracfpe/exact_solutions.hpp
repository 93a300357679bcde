#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fracfpe/errors.hpp"
#include "fracfpe/frac_ops.hpp"
#include "fracfpe/ode.hpp"
#include "fracfpe/specfun.hpp"

namespace fracfpe {

struct PhysParams {
  double eta = 0.5;    // friction
  double big_b = 5.0;  // diffusion
  double mass = 1.0;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive");
    if (!(big_b > 0.0) || !std::isfinite(big_b)) throw DomainError("B must be positive");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError("mass must be positive");
  }
  // Natural Hermite variable x = v sqrt(eta / 2B).
  double x_of(double v) const { return v * std::sqrt(eta / (2.0 * big_b)); }
  // Width of the stationary density.
  double v_scale() const { return std::sqrt(big_b / eta); }
};

enum class Family { LinearAux, QuadAux, SelfSimilar };

// Printed: every ingredient evaluated exactly as the closed forms are written.
// Reconciled: ingredients that fail their own defining equation are replaced
// by numerical solutions of that equation, matched to the printed form at the
// origin.
enum class Variant { Printed, Reconciled };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::LinearAux: return "linear";
    case Family::QuadAux: return "quadratic";
    case Family::SelfSimilar: return "selfsimilar";
  }
  return "?";
}

inline std::optional<Family> parse_family(std::string_view s) {
  for (auto f : {Family::LinearAux, Family::QuadAux, Family::SelfSimilar}) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

inline std::string_view to_string(Variant v) { return v == Variant::Printed ? "printed" : "reconciled"; }

inline std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "printed") return Variant::Printed;
  if (s == "reconciled") return Variant::Reconciled;
  return std::nullopt;
}

struct LinearAuxConfig {
  int n = 10;
  double mu = -0.5;
  double c0 = 2.0;
  double c1 = 0.0;  // n eta / mu, filled by finalize()
  // Printed: the constant s0. Reconciled: amplitude of the e^{-x^2} part of
  // s0(v) = (c0/c1) s1(v) + s0 e^{-x^2}.
  double s0 = 1.0;
  double f0 = 0.0;
  double amp_a1 = 2.3;
  double amp_a2 = 3.0;
  double b0 = 1.5;  // Hermite weight in P1, Q1
  double b1 = 1.9;  // only enter the fully expanded printed formula, kept for metadata
  double b2 = 0.7;
  double a0_const = 1.3;  // amplitude of the exponential mode of g
  double v_span = 20.0;
  double table_spacing = 0.01;

  void finalize(const PhysParams& phys) {
    if (n < 1) throw DomainError("linear: n must be a positive integer");
    if (mu == 0.0 || !std::isfinite(mu)) throw DomainError("linear: mu must be nonzero");
    if (c0 == 0.0 || !std::isfinite(c0)) throw DomainError("linear: c0 must be nonzero");
    if (a0_const == 0.0) throw DomainError("linear: A0 = 0 makes g constant and f a pole");
    if (!(v_span > 0.0) || !(table_spacing > 0.0)) throw DomainError("linear: bad table range");
    c1 = n * phys.eta / mu;
  }
};

struct QuadAuxConfig {
  int n = 10;
  double mu = -0.5;
  double c1 = 1.0;
  double c2 = 1.0;
  double k0 = 0.0;  // n eta / mu, derived
  double c0 = 0.0;  // (c1^2 - k0^2) / (4 c2), derived
  double s0 = 1.0;
  double s1 = 1.0;
  double b1_const = 1.9;
  double b0_hermite = 1.5;
  double v_span = 20.0;
  double table_spacing = 0.01;

  void finalize(const PhysParams& phys) {
    if (n < 1) throw DomainError("quadratic: n must be a positive integer");
    if (mu == 0.0 || !std::isfinite(mu)) throw DomainError("quadratic: mu must be nonzero");
    if (c2 == 0.0 || !std::isfinite(c2)) throw DomainError("quadratic: c2 must be nonzero");
    if (b1_const == 0.0) throw DomainError("quadratic: B1 must be nonzero");
    if (!(v_span > 0.0) || !(table_spacing > 0.0)) throw DomainError("quadratic: bad table range");
    k0 = n * phys.eta / mu;
    if (c1 == k0) throw DomainError("quadratic: c1 = k0 leaves a1 undefined");
    c0 = (c1 * c1 - k0 * k0) / (4.0 * c2);
  }
};

struct SelfSimConfig {
  double p1 = 0.5;
  double p2 = 0.0;  // -c1, derived
  double p3 = 0.0;  // c1, derived (so that c0 = 0)
  double a0_const = 1.3;
  double a1_const = 2.3;
  double b0_const = 1.5;  // omega(0) = 1/B0
  double b1 = 1.9;
  double b2 = 0.7;
  double b3 = 1.0;
  double c1 = 1.0;
  double s0 = 1.0;
  double s1 = 1.0;
  double r = 0.0;  // sqrt(B p1^2 + 4 A0 c1), derived
  double t_span = 40.0;
  double table_spacing = 0.01;

  void finalize(const PhysParams& phys) {
    if (c1 == 0.0 || !std::isfinite(c1)) throw DomainError("selfsimilar: c1 must be nonzero");
    if (!(b0_const > 0.0)) throw DomainError("selfsimilar: B0 must be positive");
    if (b1 + b2 * b3 == 0.0) throw DomainError("selfsimilar: B1 + B2 B3 = 0 is a pole");
    if (!(t_span > 0.0) || !(table_spacing > 0.0)) throw DomainError("selfsimilar: bad table range");
    const double r2 = phys.big_b * p1 * p1 + 4.0 * a0_const * c1;
    if (!(r2 > 0.0)) throw DomainError("selfsimilar: B p1^2 + 4 A0 c1 must be positive");
    r = std::sqrt(r2);
    p2 = -c1;
    p3 = c1;
  }
};

// Named scale-free residuals of the defining equations at one point: each is
// |lhs - rhs| divided by the largest individual term.
struct ConstraintReport {
  std::vector<std::pair<std::string, double>> entries;
  double max() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.second);
    return m;
  }
};

namespace detail {

inline double fd1(const std::function<double(double)>& f, double x, double h) {
  const double a = (f(x + h) - f(x - h)) / (2.0 * h);
  const double b = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
  return (4.0 * b - a) / 3.0;
}

inline double fd2(const std::function<double(double)>& f, double x, double h) {
  const double fx = f(x);
  const double a = (f(x + h) - 2.0 * fx + f(x - h)) / (h * h);
  const double b = (f(x + 0.5 * h) - 2.0 * fx + f(x - 0.5 * h)) / (0.25 * h * h);
  return (4.0 * b - a) / 3.0;
}

// Shrinks a difference step near poles so the stencil stays well inside
// the region where h is smooth.
inline double pole_aware_step(double base, double v, const std::vector<double>& poles) {
  double h = base;
  for (double p : poles) h = std::min(h, 0.02 * std::abs(v - p));
  return std::max(h, 1e-4 * base);
}

inline double scale_free(double residual, std::initializer_list<double> terms) {
  double s = 0.0;
  for (double t : terms) s = std::max(s, std::abs(t));
  if (s == 0.0) return std::abs(residual) == 0.0 ? 0.0 : INFINITY;
  return std::abs(residual) / s;
}

// f = (s1 g + s0) / (a1 g + a0). For |g| > 1 the quotient is formed after
// dividing through by g, so f stays finite where g overflows or crosses a
// pole of h.
inline double assemble(double s1, double s0, double a1, double a0, double g, double where) {
  double num, den, ref;
  if (std::abs(g) > 1.0) {
    num = s1 + s0 / g;
    den = a1 + a0 / g;
    ref = std::abs(a1) + std::abs(a0 / g);
  } else {
    num = s1 * g + s0;
    den = a1 * g + a0;
    ref = std::abs(a1 * g) + std::abs(a0);
  }
  if (!(std::abs(den) > 1e-12 * ref)) throw PoleError("solution denominator vanishes", where);
  return num / den;
}

// Same quotient when the denominator is known in closed form as `den`.
inline double assemble_offset(double s1, double s0, double g, double den, double where) {
  if (den == 0.0 || !std::isfinite(den)) throw PoleError("solution denominator vanishes", where);
  if (std::abs(g) > 1.0) return (s1 + s0 / g) / (den / g);
  return (s1 * g + s0) / den;
}

inline double checked_exp(double x, const char* what) {
  if (x > 709.0) throw RangeError(std::string(what) + ": exponent overflow");
  return std::exp(x);
}

// Scratch table of y with B y'' - eta v y' + lambda y = 0 on [-span, span],
// anchored at v = 0. Used for both auxiliary families (lambda = n eta).
inline ode::HermiteTable<2> hermite_ode_table(const PhysParams& ph, double lambda, double y0,
                                              double dy0, double span, double spacing) {
  const double B = ph.big_b, eta = ph.eta;
  auto rhs = [=](double v, const ode::State<2>& y) {
    return ode::State<2>{y[1], (eta * v * y[1] - lambda * y[0]) / B};
  };
  auto second = [=](double v, const ode::State<2>& y) {
    const double ypp = (eta * v * y[1] - lambda * y[0]) / B;
    return ode::State<2>{ypp, (eta * y[1] + eta * v * ypp - lambda * y[1]) / B};
  };
  return ode::HermiteTable<2>(rhs, second, 0.0, {y0, dy0}, -span, span, spacing);
}

}  // namespace detail

/// Sign changes of fn on [lo, hi], located by bisection. Non-finite samples
/// (poles of fn itself) are skipped.
inline std::vector<double> scan_sign_changes(const std::function<double(double)>& fn, double lo,
                                             double hi, int samples = 4000) {
  std::vector<double> roots;
  double x_prev = lo, f_prev = fn(lo);
  for (int i = 1; i <= samples; ++i) {
    const double x = lo + (hi - lo) * i / samples;
    const double fx = fn(x);
    if (std::isfinite(f_prev) && std::isfinite(fx) && (f_prev < 0.0) != (fx < 0.0)) {
      double a = x_prev, b = x, fa = f_prev;
      for (int k = 0; k < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++k) {
        const double m = 0.5 * (a + b);
        const double fm = fn(m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x_prev = x;
    f_prev = fx;
  }
  return roots;
}

// ---------------------------------------------------------------------------
// Linear auxiliary equation: g_t = mu (c1 g + c0), g_v = h (c1 g + c0).

class LinearFamily {
 public:
  LinearFamily(PhysParams phys, LinearAuxConfig cfg, Variant variant)
      : ph_(phys), cfg_(cfg), variant_(variant) {
    ph_.validate();
    cfg_.finalize(ph_);
    if (variant_ == Variant::Reconciled) {
      const double B = ph_.big_b, eta = ph_.eta;
      // s1 solves B s'' + eta v s' + eta s = 0 with the printed value and slope at 0.
      const double slope = cfg_.amp_a1 * std::sqrt(std::numbers::pi) / 2.0 * attenuation();
      auto rhs = [=](double v, const ode::State<2>& s) {
        return ode::State<2>{s[1], -(eta * s[0] + eta * v * s[1]) / B};
      };
      auto second = [=](double v, const ode::State<2>& s) {
        const double spp = -(eta * s[0] + eta * v * s[1]) / B;
        return ode::State<2>{spp, -(2.0 * eta * s[1] + eta * v * spp) / B};
      };
      s1_table_ = ode::HermiteTable<2>(rhs, second, 0.0, {cfg_.amp_a2, slope}, -cfg_.v_span,
                                       cfg_.v_span, cfg_.table_spacing);
      // h = -y'/(c1 y) with y the Riccati linearization, y(0) = 1.
      const double q0 = printed_q1(0.0);
      if (q0 == 0.0) throw DomainError("linear: Q1(0) = 0, cannot match the printed h at the origin");
      const double dy0 = -cfg_.c1 * printed_p1(0.0) / q0;
      y_table_ = detail::hermite_ode_table(ph_, cfg_.n * eta, 1.0, dy0, cfg_.v_span, cfg_.table_spacing);
    }
    pole_cache_ = poles(-cfg_.v_span, cfg_.v_span);
  }

  const PhysParams& phys() const { return ph_; }
  const LinearAuxConfig& config() const { return cfg_; }
  Variant variant() const { return variant_; }

  // Closed forms exactly as printed.
  double printed_s1(double v) const {
    const double x = ph_.x_of(v);
    const double grow = detail::checked_exp(x * x, "s1");
    return cfg_.amp_a2 * std::exp(-x * x) +
           cfg_.amp_a1 * std::sqrt(std::numbers::pi * ph_.big_b / (2.0 * ph_.eta)) * grow *
               attenuation() * specfun::dawson_erfi(x);
  }
  double printed_p1(double v) const {
    const double x = ph_.x_of(v);
    return -std::sqrt(2.0 * ph_.big_b / ph_.eta) * cfg_.mu * cfg_.b0 * specfun::hermite(cfg_.n - 1, x) +
           v * cfg_.mu * specfun::kummer_1f1(1.0 - 0.5 * cfg_.n, 1.5, x * x);
  }
  double printed_q1(double v) const {
    const double x = ph_.x_of(v);
    return ph_.big_b * cfg_.b0 * specfun::hermite(cfg_.n, x) + specfun::hypergeom_pfq_special(cfg_.n, x * x);
  }
  double printed_s(double v) const {
    const double x = ph_.x_of(v);
    const double neta = cfg_.n * ph_.eta;
    return (neta + cfg_.mu) / neta *
           (-ph_.big_b * cfg_.b0 * specfun::hermite(cfg_.n, x) +
            ph_.big_b * (1.0 - specfun::hypergeom_pfq_special(cfg_.n, x * x)));
  }

  double s1(double v) const {
    if (variant_ == Variant::Printed) return printed_s1(v);
    return s1_table_.eval(0, v)[0];
  }

  double s0(double v) const {
    if (variant_ == Variant::Printed) return cfg_.s0;
    const double x = ph_.x_of(v);
    return cfg_.c0 / cfg_.c1 * s1(v) + cfg_.s0 * std::exp(-x * x);
  }

  double a1() const { return cfg_.c1 / cfg_.c0; }
  double a0() const { return 1.0; }

  double h(double v) const {
    if (variant_ == Variant::Printed) {
      const double q = printed_q1(v);
      if (q == 0.0) throw PoleError("h: Q1 vanishes", v);
      return printed_p1(v) / q;
    }
    const auto y = y_table_.eval(0, v);
    if (std::abs(y[0]) < 1e-12) throw PoleError("h: pole", v);
    return -y[1] / (cfg_.c1 * y[0]);
  }

  // An antiderivative of h.
  double int_h(double v) const {
    if (variant_ == Variant::Printed) {
      const double arg = std::abs(printed_p1(v) + printed_s(v));
      if (arg == 0.0) throw PoleError("int h: log of zero", v);
      return std::log(arg);
    }
    const double y = y_table_.eval(0, v)[0];
    if (std::abs(y) < 1e-12) throw PoleError("int h: log of zero", v);
    return -std::log(std::abs(y)) / cfg_.c1;
  }

  // Hermite-type linearization y of the Riccati equation (reconciled only).
  std::array<double, 3> riccati_y(double v) const {
    if (variant_ == Variant::Printed) throw DomainError("riccati_y: reconciled variant only");
    return y_table_.eval(0, v);
  }

  double g(double t, double v) const { return -cfg_.c0 / cfg_.c1 + g_offset(t, v); }

  // g minus its fixed point -c0/c1, computed without cancellation.
  double g_offset(double t, double v) const {
    if (variant_ == Variant::Printed) {
      return cfg_.a0_const * detail::checked_exp(cfg_.c1 * int_h(v) + cfg_.mu * t, "g");
    }
    // e^{c1 int h} = 1/y on the signed branch.
    const double y = y_table_.eval(0, v)[0];
    if (std::abs(y) < 1e-12) throw PoleError("g: pole of h", v);
    return cfg_.a0_const * detail::checked_exp(cfg_.n * ph_.eta * t, "g") / y;
  }

  // a1 g + a0 = a1 (g + c0/c1) because a1 c0/c1 = 1 = a0.
  double f(double t, double v) const {
    const double off = g_offset(t, v);
    return detail::assemble_offset(s1(v), s0(v), -cfg_.c0 / cfg_.c1 + off, a1() * off, v);
  }

  // Coefficients of the factorization f_v = F f, f_t = G f with
  // F = (b1 g + b0)/(s1 g + s0), G = (d1 g + d0)/(s1 g + s0).
  double b1(double v) const { return detail::fd1([this](double u) { return s1(u); }, v, fd_step_v()); }
  double b0(double v) const {
    const double ds0 = detail::fd1([this](double u) { return s0(u); }, v, fd_step_v());
    return ds0 + h(v) * (cfg_.c0 * s1(v) - cfg_.c1 * s0(v));
  }
  double d1() const { return 0.0; }
  double d0(double v) const { return cfg_.c1 * cfg_.mu / a1() * (s1(v) - a1() * s0(v)); }
  double hopf_f(double t, double v) const {
    const double gg = g(t, v);
    return (b1(v) * gg + b0(v)) / (s1(v) * gg + s0(v));
  }
  double hopf_g(double t, double v) const {
    const double gg = g(t, v);
    return (d1() * gg + d0(v)) / (s1(v) * gg + s0(v));
  }

  // Zeros of the denominator of h in [lo, hi].
  std::vector<double> poles(double lo, double hi) const {
    if (variant_ == Variant::Printed) return scan_sign_changes([this](double v) { return printed_q1(v); }, lo, hi);
    return scan_sign_changes([this](double v) { return y_table_.eval(0, v)[0]; }, lo, hi);
  }

  double fd_step_v() const { return 1e-3 * ph_.v_scale(); }
  double fd_step_t() const { return 1e-3 / (ph_.eta * cfg_.n); }

  ConstraintReport constraints(double t, double v) const {
    const double B = ph_.big_b, eta = ph_.eta, mu = cfg_.mu, c0 = cfg_.c0, c1 = cfg_.c1;
    const double hv = detail::pole_aware_step(fd_step_v(), v, pole_cache_), ht = fd_step_t();
    ConstraintReport r;
    auto S = [this](double u) { return s1(u); };
    // s1 is smooth across the poles of h
    const double hs = fd_step_v();
    const double s = S(v), ds = detail::fd1(S, v, hs), dds = detail::fd2(S, v, hs);
    r.entries.emplace_back("s1_ode", detail::scale_free(eta * s + v * eta * ds + B * dds,
                                                        {eta * s, v * eta * ds, B * dds}));
    auto H = [this](double u) { return h(u); };
    const double hh = H(v), dh = detail::fd1(H, v, hv);
    r.entries.emplace_back("riccati", detail::scale_free(B * dh - mu - eta * v * hh - B * c1 * hh * hh,
                                                         {B * dh, mu, eta * v * hh, B * c1 * hh * hh}));
    const double gg = g(t, v);
    const double gt = detail::fd1([&](double u) { return g(u, v); }, t, ht);
    const double gv = detail::fd1([&](double u) { return g(t, u); }, v, hv);
    r.entries.emplace_back("aux_t", detail::scale_free(gt - mu * (c1 * gg + c0), {gt, mu * (c1 * gg + c0)}));
    // (c1 g + c0)/sqrt(B/eta) is the natural size of g_v; it keeps the ratio
    // meaningful where h vanishes.
    r.entries.emplace_back("aux_v", detail::scale_free(gv - hh * (c1 * gg + c0),
                                                       {gv, hh * (c1 * gg + c0), (c1 * gg + c0) / ph_.v_scale()}));
    return r;
  }

 private:
  double attenuation() const {
    return std::exp(-cfg_.f0 * cfg_.f0 / (2.0 * ph_.big_b * ph_.mass * ph_.mass * ph_.eta));
  }

  PhysParams ph_;
  LinearAuxConfig cfg_;
  Variant variant_;
  ode::HermiteTable<2> s1_table_, y_table_;
  std::vector<double> pole_cache_;
};

// ---------------------------------------------------------------------------
// Quadratic (Riccati) auxiliary equation:
// g_t = mu (c2 g^2 + c1 g + c0), g_v = h (c2 g^2 + c1 g + c0).

class QuadraticFamily {
 public:
  QuadraticFamily(PhysParams phys, QuadAuxConfig cfg, Variant variant)
      : ph_(phys), cfg_(cfg), variant_(variant) {
    ph_.validate();
    cfg_.finalize(ph_);
    if (variant_ == Variant::Reconciled) {
      const double q0 = printed_q(0.0);
      if (q0 == 0.0) throw DomainError("quadratic: Q(0) = 0, cannot match the printed h at the origin");
      const double h0 = -printed_p(0.0) / q0;
      y_table_ = detail::hermite_ode_table(ph_, cfg_.n * ph_.eta, 1.0, -cfg_.k0 * h0, cfg_.v_span,
                                           cfg_.table_spacing);
    }
    pole_cache_ = poles(-cfg_.v_span, cfg_.v_span);
  }

  const PhysParams& phys() const { return ph_; }
  const QuadAuxConfig& config() const { return cfg_; }
  Variant variant() const { return variant_; }

  double printed_p(double v) const {
    const double x = ph_.x_of(v), B = ph_.big_b, eta = ph_.eta;
    const int n = cfg_.n;
    return cfg_.mu * (std::sqrt(2.0 * B * eta) * n * cfg_.b0_hermite * specfun::hermite(n - 1, x) -
                      n * v * eta * specfun::kummer_1f1(1.0 - 0.5 * n, 1.5, x * x));
  }
  double printed_q(double v) const {
    const double x = ph_.x_of(v), B = ph_.big_b, eta = ph_.eta;
    const int n = cfg_.n;
    return n * eta * B *
           (cfg_.b0_hermite * specfun::hermite(n, x) - n * v * eta * specfun::hypergeom_pfq_special(n, x * x));
  }
  double printed_s(double v) const {
    const double x = ph_.x_of(v);
    return (cfg_.n * ph_.eta + cfg_.mu) * ph_.big_b *
           (-cfg_.b0_hermite * specfun::hermite(cfg_.n, x) + 1.0 - specfun::hypergeom_pfq_special(cfg_.n, x * x));
  }

  // Roots of c2 g^2 + c1 g + c0; g tends to g_minus as t grows.
  double g_plus() const { return (-cfg_.c1 + cfg_.k0) / (2.0 * cfg_.c2); }
  double g_minus() const { return (-cfg_.c1 - cfg_.k0) / (2.0 * cfg_.c2); }

  double h(double v) const {
    if (variant_ == Variant::Printed) {
      const double q = printed_q(v);
      if (q == 0.0) throw PoleError("h: Q vanishes", v);
      return -printed_p(v) / q;
    }
    const auto y = y_table_.eval(0, v);
    if (std::abs(y[0]) < 1e-12) throw PoleError("h: pole", v);
    return -y[1] / (cfg_.k0 * y[0]);
  }

  double int_h(double v) const {
    if (variant_ == Variant::Printed) {
      const double arg = std::abs(printed_q(v) + printed_s(v));
      if (arg == 0.0) throw PoleError("int h: log of zero", v);
      return -std::log(arg);
    }
    const double y = y_table_.eval(0, v)[0];
    if (std::abs(y) < 1e-12) throw PoleError("int h: log of zero", v);
    return -std::log(std::abs(y)) / cfg_.k0;
  }

  std::array<double, 3> riccati_y(double v) const {
    if (variant_ == Variant::Printed) throw DomainError("riccati_y: reconciled variant only");
    return y_table_.eval(0, v);
  }

  double g(double t, double v) const {
    const double neta = cfg_.n * ph_.eta;
    if (variant_ == Variant::Printed) {
      const double X = detail::checked_exp(neta * (t + int_h(v)), "g");
      const double den = 2.0 * cfg_.c2 * cfg_.mu * (1.0 + X);
      if (den == 0.0) throw PoleError("g: denominator vanishes", v);
      return (neta * (1.0 - X) - cfg_.c1 * cfg_.mu * (1.0 + X)) / den;
    }
    // (g - g+)/(g - g-) = -e^{n eta t}/y
    const double y = y_table_.eval(0, v)[0];
    const double E = detail::checked_exp(neta * t, "g");
    const double den = y + E;
    if (std::abs(den) <= 1e-12 * (std::abs(y) + E)) throw PoleError("g: pole", v);
    return (g_plus() * y + g_minus() * E) / den;
  }

  // g - g_plus, computed without cancellation.
  double g_offset(double t, double v) const {
    const double neta = cfg_.n * ph_.eta;
    if (variant_ == Variant::Printed) {
      const double X = detail::checked_exp(neta * (t + int_h(v)), "g");
      return -neta * X / (cfg_.c2 * cfg_.mu * (1.0 + X));
    }
    const double y = y_table_.eval(0, v)[0];
    const double E = detail::checked_exp(neta * t, "g");
    const double den = y + E;
    if (std::abs(den) <= 1e-12 * (std::abs(y) + E)) throw PoleError("g: pole", v);
    return (g_minus() - g_plus()) * E / den;
  }

  double a0(double v) const {
    const double x = ph_.x_of(v);
    return cfg_.b1_const * detail::checked_exp(x * x, "a0");
  }
  double a1(double v) const { return 2.0 * cfg_.c2 * a0(v) / (cfg_.c1 - cfg_.k0); }

  // a1 g + a0 = 2 c2 a0 (g - g_plus) / (c1 - k0).
  double f(double t, double v) const {
    const double off = g_offset(t, v);
    const double gg = g_plus() + off;
    return detail::assemble_offset(cfg_.s1, cfg_.s0, gg, 2.0 * cfg_.c2 * a0(v) * off / (cfg_.c1 - cfg_.k0), v);
  }

  std::vector<double> poles(double lo, double hi) const {
    if (variant_ == Variant::Printed) return scan_sign_changes([this](double v) { return printed_q(v); }, lo, hi);
    return scan_sign_changes([this](double v) { return y_table_.eval(0, v)[0]; }, lo, hi);
  }

  double fd_step_v() const { return 1e-3 * ph_.v_scale(); }
  double fd_step_t() const { return 1e-3 / (ph_.eta * cfg_.n); }

  ConstraintReport constraints(double t, double v) const {
    const double B = ph_.big_b, eta = ph_.eta, mu = cfg_.mu, k0 = cfg_.k0;
    const double hv = detail::pole_aware_step(fd_step_v(), v, pole_cache_), ht = fd_step_t();
    ConstraintReport r;
    auto H = [this](double u) { return h(u); };
    const double hh = H(v), dh = detail::fd1(H, v, hv), ddh = detail::fd2(H, v, hv);
    r.entries.emplace_back("first_integral",
                           detail::scale_free(B * dh - mu - v * eta * hh - B * k0 * hh * hh,
                                              {B * dh, mu, v * eta * hh, B * k0 * hh * hh}));
    const double h2 = hh * hh;
    const double terms[] = {mu * mu,
                            -v * v * eta * eta * h2,
                            2.0 * B * (eta + k0 * mu) * h2,
                            B * B * k0 * k0 * h2 * h2,
                            -4.0 * B * mu * dh,
                            3.0 * B * B * dh * dh,
                            -2.0 * B * B * hh * ddh};
    double sum = 0.0;
    for (double x : terms) sum += x;
    r.entries.emplace_back("second_order", detail::scale_free(sum, {terms[0], terms[1], terms[2], terms[3],
                                                                    terms[4], terms[5], terms[6]}));
    const double gg = g(t, v);
    const double quad = cfg_.c2 * gg * gg + cfg_.c1 * gg + cfg_.c0;
    // reconciled g has a moving pole at e^{n eta t} = -y
    double ht_local = ht;
    if (variant_ == Variant::Reconciled) {
      const double y = y_table_.eval(0, v)[0];
      if (y < 0) ht_local = detail::pole_aware_step(ht, t, {std::log(-y) / (cfg_.n * ph_.eta)});
    }
    const double gt = detail::fd1([&](double u) { return g(u, v); }, t, ht_local);
    const double gv = detail::fd1([&](double u) { return g(t, u); }, v, hv);
    r.entries.emplace_back("aux_t", detail::scale_free(gt - mu * quad, {gt, mu * cfg_.c2 * gg * gg,
                                                                        mu * cfg_.c1 * gg, mu * cfg_.c0}));
    r.entries.emplace_back("aux_v", detail::scale_free(gv - hh * quad, {gv, hh * cfg_.c2 * gg * gg, hh * cfg_.c1 * gg,
                                                                        hh * cfg_.c0, quad / ph_.v_scale()}));
    return r;
  }

 private:
  PhysParams ph_;
  QuadAuxConfig cfg_;
  Variant variant_;
  ode::HermiteTable<2> y_table_;
  std::vector<double> pole_cache_;
};

// ---------------------------------------------------------------------------
// Self-similar family in z = v omega(t), with g_t = mu(t) c1 g, g_z = h c1 g.

class SelfSimilarFamily {
 public:
  SelfSimilarFamily(PhysParams phys, SelfSimConfig cfg, Variant variant)
      : ph_(phys), cfg_(cfg), variant_(variant) {
    ph_.validate();
    cfg_.finalize(ph_);
    const double B = ph_.big_b, eta = ph_.eta;
    if (variant_ == Variant::Printed) return;
    // State (omega, P, int omega^2, int 2BP) with P = omega^2 q, q the
    // Gaussian curvature in z.
    auto rhs = [=](double, const ode::State<4>& s) {
      return ode::State<4>{s[0] * (eta - 4.0 * B * s[1]), 2.0 * eta * s[1] - 4.0 * B * s[1] * s[1],
                           s[0] * s[0], 2.0 * B * s[1]};
    };
    auto second = [=](double, const ode::State<4>& s) {
      const double dw = s[0] * (eta - 4.0 * B * s[1]);
      const double dp = 2.0 * eta * s[1] - 4.0 * B * s[1] * s[1];
      return ode::State<4>{dw * (eta - 4.0 * B * s[1]) - 4.0 * B * s[0] * dp, 2.0 * eta * dp - 8.0 * B * s[1] * dp,
                           2.0 * s[0] * dw, 2.0 * B * dp};
    };
    const double w0 = 1.0 / cfg_.b0_const;
    const double p0 = eta / (4.0 * B * cfg_.b0_const);
    // A short stretch of negative time lets centered differences reach t = 0.
    double lo = -std::min(1.0, 0.1 * cfg_.t_span);
    const double K = 2.0 * cfg_.b0_const - 1.0;
    if (K < 0.0) lo = std::max(lo, 0.25 * std::log(-K) / eta);
    t_lo_ = lo;
    table_ = ode::HermiteTable<4>(rhs, second, 0.0, {w0, p0, 0.0, 0.0}, lo, cfg_.t_span, cfg_.table_spacing);
  }

  const PhysParams& phys() const { return ph_; }
  const SelfSimConfig& config() const { return cfg_; }
  Variant variant() const { return variant_; }
  double t_min() const { return variant_ == Variant::Printed ? -cfg_.b0_const / ph_.eta : t_lo_; }

  double omega(double t) const {
    if (variant_ == Variant::Printed) return 1.0 / printed_denominator(t);
    return table_.eval(0, t)[0];
  }
  // omega^2 times the Gaussian curvature in z (reconciled only).
  double curvature_p(double t) const {
    if (variant_ == Variant::Printed) throw DomainError("curvature_p: reconciled variant only");
    return table_.eval(1, t)[0];
  }

  double mu_of_t(double t) const {
    const double w = omega(t);
    return cfg_.a0_const * w * w;
  }
  // int_0^t mu.
  double big_m(double t) const {
    if (variant_ == Variant::Printed) {
      return cfg_.a0_const * t / (cfg_.b0_const * printed_denominator(t));
    }
    return cfg_.a0_const * table_.eval(2, t)[0];
  }

  double h(double z) const {
    const double sb = std::sqrt(ph_.big_b);
    return (cfg_.p1 * sb + cfg_.r * std::tanh(theta(z))) / (2.0 * cfg_.c1 * sb);
  }
  // int_0^z h.
  double int_h(double z) const {
    return (0.5 * cfg_.p1 * z + log_cosh(theta(z)) - log_cosh(theta(0.0))) / cfg_.c1;
  }

  double g(double t, double z) const {
    return cfg_.b2 * detail::checked_exp(cfg_.c1 * (big_m(t) + int_h(z)), "g");
  }

  double a0(double t, double z) const {
    const double B = ph_.big_b, eta = ph_.eta, b0 = cfg_.b0_const, p1 = cfg_.p1;
    if (variant_ == Variant::Printed) {
      const double d = printed_denominator(t);
      const double expo = -eta * t + eta * eta * z * z * t / (4.0 * B) + 0.5 * std::log(d / b0) -
                          B * p1 * p1 * t / (4.0 * b0 * d) + 0.5 * p1 * z + b0 * z * z * eta / (4.0 * B);
      return cfg_.b1 * detail::checked_exp(expo, "a0");
    }
    return cfg_.b1 * detail::checked_exp(-log_psi(t, z), "a0");
  }
  double a1(double t, double z) const {
    return a0(t, z) * cfg_.b3 / cfg_.b1 * std::exp(-cfg_.c1 * (big_m(t) + int_h(z)));
  }

  double fbar(double t, double z) const {
    return detail::assemble(cfg_.s1, cfg_.s0, a1(t, z), a0(t, z), g(t, z), z);
  }
  double f(double t, double v) const { return fbar(t, v * omega(t)); }

  double fd_step_t() const { return 1e-3 * std::min(1.0, 1.0 / ph_.eta); }
  double fd_step_z() const { return 1e-3; }

  ConstraintReport constraints(double t, double z) const {
    const double B = ph_.big_b, eta = ph_.eta, c1 = cfg_.c1;
    const double ht = fd_step_t(), hz = fd_step_z();
    ConstraintReport r;
    const double w = omega(t);
    const double dw = detail::fd1([this](double u) { return omega(u); }, t, ht);
    if (variant_ == Variant::Printed) {
      r.entries.emplace_back("omega_law", detail::scale_free(dw + eta * w * w, {dw, eta * w * w}));
    } else {
      const double P = curvature_p(t);
      r.entries.emplace_back("omega_law",
                             detail::scale_free(dw - w * (eta - 4.0 * B * P), {dw, eta * w, 4.0 * B * P * w}));
    }
    const double hh = h(z);
    const double dh = detail::fd1([this](double u) { return h(u); }, z, hz);
    const double rhs_terms[] = {cfg_.a0_const / B, cfg_.p1 * hh, cfg_.p2 * hh * hh};
    r.entries.emplace_back("riccati",
                           detail::scale_free(dh - rhs_terms[0] - rhs_terms[1] - rhs_terms[2],
                                              {dh, rhs_terms[0], rhs_terms[1], rhs_terms[2]}));
    const double gg = g(t, z);
    const double gt = detail::fd1([&](double u) { return g(u, z); }, t, ht);
    const double gz = detail::fd1([&](double u) { return g(t, u); }, z, hz);
    const double mu = mu_of_t(t);
    r.entries.emplace_back("aux_t", detail::scale_free(gt - mu * c1 * gg, {gt, mu * c1 * gg}));
    r.entries.emplace_back("aux_z", detail::scale_free(gz - hh * c1 * gg, {gz, hh * c1 * gg, c1 * gg}));
    return r;
  }

 private:
  double theta(double z) const { return cfg_.r * (z + cfg_.a1_const) / (2.0 * std::sqrt(ph_.big_b)); }
  static double log_cosh(double x) {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
  }
  double printed_denominator(double t) const {
    const double d = cfg_.b0_const + ph_.eta * t;
    if (!(d > 0.0)) throw DomainError("selfsimilar: B0 + eta t must be positive");
    return d;
  }
  // log psi = -q z^2 - p1 z / 2 + k for the reconciled Gaussian factor.
  double log_psi(double t, double z) const {
    const double B = ph_.big_b, eta = ph_.eta;
    const double w = table_.eval(0, t)[0], P = table_.eval(1, t)[0];
    const double i_w2 = table_.eval(2, t)[0], i_2bp = table_.eval(3, t)[0];
    const double q = P / (w * w);
    const double k = eta * t + 0.25 * B * cfg_.p1 * cfg_.p1 * i_w2 - i_2bp;
    return -q * z * z - 0.5 * cfg_.p1 * z + k;
  }

  PhysParams ph_;
  SelfSimConfig cfg_;
  Variant variant_;
  double t_lo_ = 0.0;
  ode::HermiteTable<4> table_;
};

// ---------------------------------------------------------------------------

using FamilyConfig = std::variant<LinearAuxConfig, QuadAuxConfig, SelfSimConfig>;

/// An immutable, shareable solution: one family, one variant, and an optional
/// fractional time map f(t, v) = f~(tau(t), v).
class SolutionHandle {
 public:
  SolutionHandle(PhysParams phys, FamilyConfig config, Variant variant,
                 std::optional<FracParams> time_map = std::nullopt) {
    if (std::holds_alternative<LinearAuxConfig>(config)) {
      family_ = Family::LinearAux;
      impl_ = std::make_shared<const LinearFamily>(phys, std::get<LinearAuxConfig>(config), variant);
    } else if (std::holds_alternative<QuadAuxConfig>(config)) {
      family_ = Family::QuadAux;
      impl_ = std::make_shared<const QuadraticFamily>(phys, std::get<QuadAuxConfig>(config), variant);
    } else {
      family_ = Family::SelfSimilar;
      impl_ = std::make_shared<const SelfSimilarFamily>(phys, std::get<SelfSimConfig>(config), variant);
    }
    phys_ = phys;
    variant_ = variant;
    if (time_map) time_map_ = std::make_shared<const TimeMap>(*time_map);
  }

  Family family() const { return family_; }
  Variant variant() const { return variant_; }
  const PhysParams& phys() const { return phys_; }
  const TimeMap* time_map() const { return time_map_.get(); }

  template <class T>
  const T& as() const {
    return *std::get<std::shared_ptr<const T>>(impl_);
  }

  // Classical evaluation, no time map.
  double classical(double t, double v) const {
    return std::visit([&](const auto& p) { return p->f(t, v); }, impl_);
  }

  double operator()(double t, double v) const {
    if (!time_map_) return classical(t, v);
    return classical(time_map_->tau(t), v);
  }

  // Multiplier p(t) of the non-autonomous equation this handle solves.
  double p(double t) const { return time_map_ ? time_map_->p(t) : 1.0; }

 private:
  Family family_ = Family::LinearAux;
  Variant variant_ = Variant::Reconciled;
  PhysParams phys_;
  std::variant<std::shared_ptr<const LinearFamily>, std::shared_ptr<const QuadraticFamily>,
               std::shared_ptr<const SelfSimilarFamily>>
      impl_;
  std::shared_ptr<const TimeMap> time_map_;
};

/// f(t, v) = f~(tau(t), v), with f~ the classical family of the handle.
inline double fractional_lift(const SolutionHandle& handle, double t, double v) {
  if (!handle.time_map()) throw DomainError("fractional_lift: handle has no time map");
  return handle(t, v);
}

}  // namespace fracfpe
