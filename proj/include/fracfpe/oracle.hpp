#pragma once

// Reference solutions for the velocity Fokker-Planck equation
//   p(t) f_t = d/dv (eta v f + B f_v)
// a conservative Crank-Nicolson solver, the Ornstein-Uhlenbeck densities
// and the closed moment equations.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fracfpe/errors.hpp"
#include "fracfpe/exact_solutions.hpp"
#include "fracfpe/ode.hpp"

namespace fracfpe::oracle {

using TimeFactor = std::function<double(double)>;

inline TimeFactor unit_factor() {
  return [](double) { return 1.0; };
}

struct Grid1D {
  double v_min = -1.0;
  double v_max = 1.0;
  int nv = 3;

  Grid1D() = default;
  Grid1D(double lo, double hi, int n) : v_min(lo), v_max(hi), nv(n) { validate(); }

  void validate() const {
    if (!(v_min < v_max) || !std::isfinite(v_min) || !std::isfinite(v_max))
      throw DomainError("grid: need finite v_min < v_max");
    if (nv < 3) throw DomainError("grid: need at least 3 nodes");
  }
  double spacing() const { return (v_max - v_min) / (nv - 1); }
  double node(int i) const { return i == nv - 1 ? v_max : v_min + spacing() * i; }
  std::vector<double> nodes() const {
    std::vector<double> out(nv);
    for (int i = 0; i < nv; ++i) out[i] = node(i);
    return out;
  }
  // Symmetric grid of +-width * sqrt(B/eta).
  static Grid1D symmetric(const PhysParams& ph, double width, int n) {
    const double s = width * ph.v_scale();
    return {-s, s, n};
  }
  bool operator==(const Grid1D&) const = default;
};

struct Field {
  Grid1D grid;
  double t = 0.0;
  std::vector<double> values;

  Field() = default;
  Field(Grid1D g, double time, std::vector<double> vals) : grid(g), t(time), values(std::move(vals)) {
    if (static_cast<int>(values.size()) != grid.nv) throw DomainError("field: size does not match grid");
    for (double x : values)
      if (!std::isfinite(x)) throw NumericError("field: non-finite value");
  }

  template <class F>
  static Field sample(const Grid1D& g, double time, F&& f) {
    std::vector<double> vals(g.nv);
    for (int i = 0; i < g.nv; ++i) vals[i] = f(g.node(i));
    return {g, time, std::move(vals)};
  }
};

// Trapezoid mass.
inline double mass(const Field& f) {
  const int n = f.grid.nv;
  double s = 0.5 * (f.values[0] + f.values[n - 1]);
  for (int i = 1; i < n - 1; ++i) s += f.values[i];
  return s * f.grid.spacing();
}

inline double stationary_density(const PhysParams& ph, double v) {
  const double var = ph.big_b / ph.eta;
  return std::exp(-v * v / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
}

inline double ou_mean(const PhysParams& ph, double v0, double t) { return v0 * std::exp(-ph.eta * t); }
inline double ou_variance(const PhysParams& ph, double t) {
  return ph.big_b / ph.eta * -std::expm1(-2 * ph.eta * t);
}

inline double ou_transition_density(const PhysParams& ph, double v0, double t, double v) {
  if (!(t > 0)) throw DomainError("ou_transition_density: t must be positive");
  const double var = ou_variance(ph, t);
  const double d = v - ou_mean(ph, v0, t);
  return std::exp(-d * d / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
}

struct SolveOptions {
  // Keep every `save_every`-th step; the final state is always kept.
  int save_every = 1;
};

namespace detail {

// Tridiagonal solve a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i.
inline void thomas(const std::vector<double>& a, std::vector<double> b, const std::vector<double>& c,
                   std::vector<double>& d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (b[i - 1] == 0.0) throw NumericError("tridiagonal solve: zero pivot");
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    d[i] -= m * d[i - 1];
  }
  if (b[n - 1] == 0.0) throw NumericError("tridiagonal solve: zero pivot");
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
  for (double x : d)
    if (!std::isfinite(x)) throw NumericError("tridiagonal solve: non-finite result");
}

// Finite-volume operator: cell i (half cells at the ends) receives
// F_{i+1/2} - F_{i-1/2}, F = eta v f + B f_v, F = 0 on the boundary.
// Rows are stored as (lower, diag, upper) before division by the cell width.
struct FluxOperator {
  std::vector<double> lo, di, up, width;

  FluxOperator(const PhysParams& ph, const Grid1D& g) : lo(g.nv, 0.0), di(g.nv, 0.0), up(g.nv, 0.0), width(g.nv) {
    const double h = g.spacing();
    for (int i = 0; i < g.nv; ++i) width[i] = (i == 0 || i == g.nv - 1) ? h / 2 : h;
    for (int i = 0; i + 1 < g.nv; ++i) {
      // F at the face between i and i+1: cf_l f_i + cf_r f_{i+1}
      const double vf = 0.5 * (g.node(i) + g.node(i + 1));
      const double cf_l = 0.5 * ph.eta * vf - ph.big_b / h;
      const double cf_r = 0.5 * ph.eta * vf + ph.big_b / h;
      di[i] += cf_l;
      up[i] += cf_r;
      lo[i + 1] -= cf_l;
      di[i + 1] -= cf_r;
    }
  }
};

}  // namespace detail

// Crank-Nicolson integration from init.t to t_end. A time-dependent factor
// p(t) rescales each step to dt / p(t_mid).
inline std::vector<Field> solve_fd(const PhysParams& ph, const TimeFactor& p_of_t, const Field& init,
                                   double t_end, double dt, const SolveOptions& opt = {}) {
  ph.validate();
  init.grid.validate();
  if (!(dt > 0) || !std::isfinite(dt)) throw DomainError("solve_fd: dt must be positive");
  if (!(t_end >= init.t)) throw DomainError("solve_fd: t_end before initial time");
  if (opt.save_every < 1) throw DomainError("solve_fd: save_every must be >= 1");
  const double m0 = mass(init);
  if (!(std::abs(m0 - 1.0) < 1e-6)) throw DomainError("solve_fd: initial field must have unit mass");

  const Grid1D& g = init.grid;
  const detail::FluxOperator op(ph, g);
  const int n = g.nv;
  std::vector<double> a(n), b(n), c(n), rhs(n);
  std::vector<Field> out{init};
  std::vector<double> f = init.values;
  double t = init.t;
  const long steps = static_cast<long>(std::ceil((t_end - init.t) / dt - 1e-9));
  for (long k = 0; k < steps; ++k) {
    const double t_next = (k == steps - 1) ? t_end : init.t + dt * static_cast<double>(k + 1);
    const double p = p_of_t(0.5 * (t + t_next));
    if (!(p > 0) || !std::isfinite(p)) throw DomainError("solve_fd: p(t) must be positive");
    const double half = 0.5 * (t_next - t) / p;
    for (int i = 0; i < n; ++i) {
      const double s = half / op.width[i];
      a[i] = -s * op.lo[i];
      b[i] = 1.0 - s * op.di[i];
      c[i] = -s * op.up[i];
      double lf = op.di[i] * f[i];
      if (i > 0) lf += op.lo[i] * f[i - 1];
      if (i + 1 < n) lf += op.up[i] * f[i + 1];
      rhs[i] = f[i] + s * lf;
    }
    detail::thomas(a, b, c, rhs);
    f.swap(rhs);
    t = t_next;
    if ((k + 1) % opt.save_every == 0 || k == steps - 1) out.emplace_back(g, t, f);
  }
  return out;
}

struct Moments {
  double mean;
  double mean_square;
};

// d<v>/dt = -eta <v> / p, d<v^2>/dt = (2B - 2 eta <v^2>) / p.
inline Moments moment_ode(const PhysParams& ph, const TimeFactor& p_of_t, double v0_mean, double v0_sq,
                          double t, const ode::Options& opt = {}) {
  ph.validate();
  if (!(t >= 0)) throw DomainError("moment_ode: t must be >= 0");
  auto rhs = [&](double s, const ode::State<2>& y) {
    const double p = p_of_t(s);
    if (!(p > 0) || !std::isfinite(p)) throw DomainError("moment_ode: p(t) must be positive");
    return ode::State<2>{-ph.eta * y[0] / p, (2 * ph.big_b - 2 * ph.eta * y[1]) / p};
  };
  const auto y = ode::solve<2>(rhs, 0.0, {v0_mean, v0_sq}, t, opt);
  return {y[0], y[1]};
}

}  // namespace fracfpe::oracle
