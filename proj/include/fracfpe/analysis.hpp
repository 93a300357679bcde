#pragma once

// Residuals of candidate solutions, moments and field norms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "fracfpe/errors.hpp"
#include "fracfpe/exact_solutions.hpp"
#include "fracfpe/oracle.hpp"

namespace fracfpe::analysis {

using oracle::Field;
using oracle::Grid1D;
using oracle::TimeFactor;
using Candidate = std::function<double(double, double)>;

// Raised when no point survives exclusion.
class EmptyReportError : public DomainError {
 public:
  using DomainError::DomainError;
};

struct Point {
  double t;
  double v;
  bool operator==(const Point&) const = default;
};

struct ResidualOptions {
  // Base steps; zero means the natural scales 1e-3 sqrt(B/eta) and
  // 1e-3 min(1/eta, t_scale).
  double h_v = 0.0;
  double h_t = 0.0;
  double t_scale = std::numeric_limits<double>::infinity();
  // Time stencils switch to one-sided when they would reach below t_lower.
  double t_lower = -std::numeric_limits<double>::infinity();
  // Points within pole_gap of a listed pole are excluded up front.
  std::vector<double> poles;
  double pole_gap = 0.0;
  int threads = 1;
};

struct ResidualReport {
  std::vector<Point> points;
  std::vector<double> residual;
  std::vector<double> term_scale;  // max |term| at each point
  std::vector<Point> excluded;
  double h_v = 0.0, h_t = 0.0;
  double l_inf = 0.0;
  double l2 = 0.0;  // root mean square over the evaluated points
  double rel_l_inf = 0.0;
  double max_pointwise_rel = 0.0;
};

namespace detail {

// One Richardson step on central differences: (4 D(h/2) - D(h)) / 3.
template <class F>
double rich_d1(F& f, double x, double h) {
  const double a = (f(x + h) - f(x - h)) / (2 * h);
  const double b = (f(x + h / 2) - f(x - h / 2)) / h;
  return (4 * b - a) / 3;
}

template <class F>
double rich_d2(F& f, double x, double fx, double h) {
  const double a = (f(x + h) - 2 * fx + f(x - h)) / (h * h);
  const double b = (f(x + h / 2) - 2 * fx + f(x - h / 2)) / (h * h / 4);
  return (4 * b - a) / 3;
}

// Fourth-order forward difference.
template <class F>
double forward_d1(F& f, double x, double fx, double h) {
  return (-25 * fx + 48 * f(x + h) - 36 * f(x + 2 * h) + 16 * f(x + 3 * h) - 3 * f(x + 4 * h)) / (12 * h);
}

struct Terms {
  double residual, scale;
};

inline Terms residual_at(const Candidate& f, const PhysParams& ph, const TimeFactor& p, double t, double v,
                         double hv, double ht, double t_lower) {
  auto fv = [&](double u) { return f(t, u); };
  auto ft = [&](double s) { return f(s, v); };
  const double x = f(t, v);
  const double dt = (t - ht < t_lower) ? forward_d1(ft, t, x, ht / 2) : rich_d1(ft, t, ht);
  const double dv = rich_d1(fv, v, hv);
  const double dvv = rich_d2(fv, v, x, hv);
  const double terms[] = {p(t) * dt, ph.eta * x, ph.eta * v * dv, ph.big_b * dvv};
  double scale = 0;
  for (double a : terms) scale = std::max(scale, std::abs(a));
  return {terms[0] - terms[1] - terms[2] - terms[3], scale};
}

}  // namespace detail

// Residual p f_t - eta f - eta v f_v - B f_vv at each point. Points where f
// or its stencil hits a pole, or produces non-finite values, are excluded.
inline ResidualReport residual_fpe(const Candidate& f, const PhysParams& ph, const TimeFactor& p_of_t,
                                   const std::vector<Point>& pts, const ResidualOptions& opt = {}) {
  ph.validate();
  ResidualReport rep;
  rep.h_v = opt.h_v > 0 ? opt.h_v : 1e-3 * ph.v_scale();
  rep.h_t = opt.h_t > 0 ? opt.h_t : 1e-3 * std::min(1.0 / ph.eta, opt.t_scale);

  struct Slot {
    bool ok = false;
    detail::Terms terms{};
  };
  std::vector<Slot> slots(pts.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Point& q = pts[i];
      bool near_pole = false;
      for (double pole : opt.poles)
        if (std::abs(q.v - pole) < opt.pole_gap) near_pole = true;
      if (near_pole) continue;
      try {
        const auto r = detail::residual_at(f, ph, p_of_t, q.t, q.v, rep.h_v, rep.h_t, opt.t_lower);
        if (std::isfinite(r.residual) && std::isfinite(r.scale)) slots[i] = {true, r};
      } catch (const PoleError&) {
      } catch (const RangeError&) {
      }
    }
  };
  const std::size_t nthreads = std::clamp<std::size_t>(opt.threads, 1, std::max<std::size_t>(pts.size(), 1));
  if (nthreads == 1) {
    work(0, pts.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (pts.size() + nthreads - 1) / nthreads;
    for (std::size_t k = 0; k < nthreads; ++k) {
      const std::size_t b = k * chunk, e = std::min(pts.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  double sq = 0, scale = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!slots[i].ok) {
      rep.excluded.push_back(pts[i]);
      continue;
    }
    const auto& r = slots[i].terms;
    rep.points.push_back(pts[i]);
    rep.residual.push_back(r.residual);
    rep.term_scale.push_back(r.scale);
    rep.l_inf = std::max(rep.l_inf, std::abs(r.residual));
    sq += r.residual * r.residual;
    scale = std::max(scale, r.scale);
    if (r.scale > 0) rep.max_pointwise_rel = std::max(rep.max_pointwise_rel, std::abs(r.residual) / r.scale);
  }
  if (rep.points.empty()) throw EmptyReportError("residual_fpe: every point was excluded");
  rep.l2 = std::sqrt(sq / static_cast<double>(rep.points.size()));
  rep.rel_l_inf = scale > 0 ? rep.l_inf / scale : 0.0;
  return rep;
}

// All nodes of a grid at times ts.
inline std::vector<Point> grid_points(const Grid1D& g, const std::vector<double>& ts) {
  std::vector<Point> out;
  out.reserve(ts.size() * g.nv);
  for (double t : ts)
    for (int i = 0; i < g.nv; ++i) out.push_back({t, g.node(i)});
  return out;
}

inline ResidualReport residual_fpe(const Candidate& f, const PhysParams& ph, const TimeFactor& p_of_t,
                                   const Grid1D& g, const std::vector<double>& ts,
                                   const ResidualOptions& opt = {}) {
  return residual_fpe(f, ph, p_of_t, grid_points(g, ts), opt);
}

namespace detail {

// Composite Simpson over the grid nodes; an even node count closes with
// the 3/8 rule on the last three panels.
inline double simpson_nodes(const std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  if (n == 3 || n % 2 == 1) {
    double s = y[0] + y[n - 1];
    for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 ? 4.0 : 2.0) * y[i];
    return s * h / 3;
  }
  if (n == 4) return 3 * h / 8 * (y[0] + 3 * y[1] + 3 * y[2] + y[3]);
  std::vector<double> head(y.begin(), y.end() - 3);
  const std::size_t m = n - 4;
  return simpson_nodes(head, h) + 3 * h / 8 * (y[m] + 3 * y[m + 1] + 3 * y[m + 2] + y[m + 3]);
}

// Mass beyond one end, extrapolating the last two nodes as an exponential tail.
inline double tail_estimate(double f_end, double f_inner, double h) {
  const double a = std::abs(f_end), b = std::abs(f_inner);
  if (a == 0.0) return 0.0;
  if (!(b > a)) return std::numeric_limits<double>::infinity();
  return a * h / std::log(b / a);
}

}  // namespace detail

inline constexpr double kTailTolerance = 1e-8;

// Normalized moment int v^k f / int f, by Simpson's rule on the grid.
inline double moments(const Field& f, int k) {
  if (k < 0) throw DomainError("moments: order must be >= 0");
  const auto& g = f.grid;
  const double h = g.spacing();
  const double m0 = detail::simpson_nodes(f.values, h);
  if (!(m0 > 0)) throw DomainError("moments: total mass must be positive");
  const int n = g.nv;
  const double tail = detail::tail_estimate(f.values[0], f.values[1], h) +
                      detail::tail_estimate(f.values[n - 1], f.values[n - 2], h);
  if (!(tail / m0 < kTailTolerance)) throw AccuracyError("moments: density does not decay within the grid");
  if (k == 0) return 1.0;
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) y[i] = std::pow(g.node(i), k) * f.values[i];
  return detail::simpson_nodes(y, h) / m0;
}

template <class F>
double moments(F&& fn, const Grid1D& g, int k) {
  return moments(Field::sample(g, 0.0, fn), k);
}

inline Field normalize(const Field& f) {
  const double m = oracle::mass(f);
  if (!(m > 0)) throw DomainError("normalize: mass must be positive");
  Field out = f;
  for (auto& x : out.values) x /= m;
  return out;
}

struct Comparison {
  double l_inf;
  double l2;   // trapezoid-weighted L2 norm of the difference
  double rel;  // l_inf / max |reference|
};

inline Comparison compare_fields(const Field& a, const Field& ref) {
  if (!(a.grid == ref.grid)) throw DomainError("compare_fields: grids differ");
  const int n = a.grid.nv;
  double linf = 0, sq = 0, peak = 0;
  for (int i = 0; i < n; ++i) {
    const double d = a.values[i] - ref.values[i];
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    linf = std::max(linf, std::abs(d));
    sq += w * d * d;
    peak = std::max(peak, std::abs(ref.values[i]));
  }
  const double rel = linf == 0.0 ? 0.0 : linf / peak;
  return {linf, std::sqrt(sq * a.grid.spacing()), rel};
}

}  // namespace fracfpe::analysis
