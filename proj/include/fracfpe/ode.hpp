#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fracfpe/errors.hpp"

namespace fracfpe::ode {

struct Options {
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  double initial_step = 1e-3;
  long max_steps = 2'000'000;
};

template <std::size_t N>
using State = std::array<double, N>;

// Adaptive Dormand-Prince 5(4) stepper. `rhs(x, y)` returns dy/dx.
template <std::size_t N>
class DormandPrince {
 public:
  explicit DormandPrince(Options opt = {}) : opt_(opt), h_(opt.initial_step) {}

  // Advances y from x0 to x1 (either direction). The last accepted step size
  // is kept so sequential calls over adjacent segments stay efficient.
  template <class Rhs>
  State<N> advance(Rhs&& rhs, double x0, State<N> y, double x1) {
    if (x0 == x1) return y;
    const double dir = x1 > x0 ? 1.0 : -1.0;
    double x = x0;
    double h = std::min(std::abs(h_), std::abs(x1 - x0));
    long steps = 0;
    while ((x1 - x) * dir > 0.0) {
      if (++steps > opt_.max_steps) throw AccuracyError("ode: step budget exhausted");
      if (std::abs(x1 - x) < h * 1.0000001) h = std::abs(x1 - x);
      State<N> y_new, y_err;
      step(rhs, x, y, dir * h, y_new, y_err);
      double err = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double sc = opt_.abs_tol + opt_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err = std::max(err, std::abs(y_err[i]) / sc);
      }
      if (!std::isfinite(err)) {
        h *= 0.25;
        if (h < 1e-300) throw AccuracyError("ode: non-finite state");
        continue;
      }
      if (err <= 1.0) {
        x = (std::abs(x1 - x) <= h) ? x1 : x + dir * h;
        y = y_new;
        h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(err + 1e-300, -0.2)));
        h_ = h;
      } else {
        h *= std::max(0.1, 0.9 * std::pow(err, -0.25));
        if (h < 1e-14 * std::max(1.0, std::abs(x))) {
          throw AccuracyError("ode: step size underflow at x = " + std::to_string(x));
        }
      }
    }
    return y;
  }

 private:
  template <class Rhs>
  static void step(Rhs& rhs, double x, const State<N>& y, double h, State<N>& out, State<N>& err) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    auto axpy = [&](std::initializer_list<std::pair<double, const State<N>*>> terms) {
      State<N> r = y;
      for (std::size_t i = 0; i < N; ++i)
        for (auto& [c, k] : terms) r[i] += h * c * (*k)[i];
      return r;
    };
    const State<N> k1 = rhs(x, y);
    const State<N> k2 = rhs(x + c2 * h, axpy({{a21, &k1}}));
    const State<N> k3 = rhs(x + c3 * h, axpy({{a31, &k1}, {a32, &k2}}));
    const State<N> k4 = rhs(x + c4 * h, axpy({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State<N> k5 = rhs(x + c5 * h, axpy({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State<N> k6 =
        rhs(x + h, axpy({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    out = axpy({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State<N> k7 = rhs(x + h, out);
    for (std::size_t i = 0; i < N; ++i) {
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
  }

  Options opt_;
  double h_;
};

template <std::size_t N, class Rhs>
State<N> solve(Rhs&& rhs, double x0, const State<N>& y0, double x1, const Options& opt = {}) {
  DormandPrince<N> stepper(opt);
  return stepper.advance(rhs, x0, y0, x1);
}

// Dense table of an ODE solution on uniform knots, evaluated by quintic
// Hermite interpolation from the value, first and second derivative at each
// knot. The interpolant is C2, so finite differences taken on it are smooth.
template <std::size_t N>
class HermiteTable {
 public:
  HermiteTable() = default;

  // `rhs(x,y)` gives y', `second(x,y)` gives y''. The table anchors
  // `y_anchor` at `x_anchor` and covers [lo, hi] with spacing <= `spacing`.
  template <class Rhs, class Second>
  HermiteTable(Rhs&& rhs, Second&& second, double x_anchor, const State<N>& y_anchor, double lo,
               double hi, double spacing, const Options& opt = {})
      : lo_(lo), hi_(hi) {
    if (!(lo < hi) || x_anchor < lo || x_anchor > hi) throw DomainError("ode table: bad range");
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / spacing));
    n_ = std::max<std::size_t>(n, 2);
    step_ = (hi - lo) / static_cast<double>(n_);
    y_.resize(n_ + 1);
    d1_.resize(n_ + 1);
    d2_.resize(n_ + 1);
    // anchor index: nearest knot at or below the anchor; integrate outward.
    auto knot = [&](std::size_t i) { return lo_ + step_ * static_cast<double>(i); };
    std::size_t k0 = static_cast<std::size_t>(std::floor((x_anchor - lo) / step_));
    k0 = std::min(k0, n_);
    DormandPrince<N> fw(opt), bw(opt);
    const State<N> y_k0 = fw.advance(rhs, x_anchor, y_anchor, knot(k0));
    State<N> y = y_k0;
    for (std::size_t i = k0;; ++i) {
      store(rhs, second, i, knot(i), y);
      if (i == n_) break;
      y = fw.advance(rhs, knot(i), y, knot(i + 1));
    }
    y = y_k0;
    for (std::size_t i = k0; i > 0; --i) {
      y = bw.advance(rhs, knot(i), y, knot(i - 1));
      store(rhs, second, i - 1, knot(i - 1), y);
    }
  }

  bool contains(double x) const { return x >= lo_ && x <= hi_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  // Component `c` and its first two derivatives at x.
  std::array<double, 3> eval(std::size_t c, double x) const {
    if (!contains(x)) {
      throw DomainError("ode table: x = " + std::to_string(x) + " outside [" +
                        std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
    }
    std::size_t i = static_cast<std::size_t>((x - lo_) / step_);
    if (i >= n_) i = n_ - 1;
    const double h = step_;
    const double s = (x - (lo_ + h * static_cast<double>(i))) / h;
    const double p0 = y_[i][c], p1 = y_[i + 1][c];
    const double m0 = d1_[i][c] * h, m1 = d1_[i + 1][c] * h;
    const double q0 = d2_[i][c] * h * h, q1 = d2_[i + 1][c] * h * h;
    // quintic Hermite basis in s, plus its derivatives
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
    const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
    const double h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    const double h3 = 0.5 * s3 - s4 + 0.5 * s5;
    const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
    const double h5 = 10 * s3 - 15 * s4 + 6 * s5;
    const double dh0 = -30 * s2 + 60 * s3 - 30 * s4;
    const double dh1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
    const double dh2 = s - 4.5 * s2 + 6 * s3 - 2.5 * s4;
    const double dh3 = 1.5 * s2 - 4 * s3 + 2.5 * s4;
    const double dh4 = -12 * s2 + 28 * s3 - 15 * s4;
    const double dh5 = 30 * s2 - 60 * s3 + 30 * s4;
    const double ddh0 = -60 * s + 180 * s2 - 120 * s3;
    const double ddh1 = -36 * s + 96 * s2 - 60 * s3;
    const double ddh2 = 1 - 9 * s + 18 * s2 - 10 * s3;
    const double ddh3 = 3 * s - 12 * s2 + 10 * s3;
    const double ddh4 = -24 * s + 84 * s2 - 60 * s3;
    const double ddh5 = 60 * s - 180 * s2 + 120 * s3;
    const double v = h0 * p0 + h1 * m0 + h2 * q0 + h3 * q1 + h4 * m1 + h5 * p1;
    const double dv = (dh0 * p0 + dh1 * m0 + dh2 * q0 + dh3 * q1 + dh4 * m1 + dh5 * p1) / h;
    const double ddv =
        (ddh0 * p0 + ddh1 * m0 + ddh2 * q0 + ddh3 * q1 + ddh4 * m1 + ddh5 * p1) / (h * h);
    return {v, dv, ddv};
  }

 private:
  template <class Rhs, class Second>
  void store(Rhs& rhs, Second& second, std::size_t i, double x, const State<N>& y) {
    y_[i] = y;
    d1_[i] = rhs(x, y);
    d2_[i] = second(x, y);
  }

  double lo_ = 0.0, hi_ = 0.0, step_ = 1.0;
  std::size_t n_ = 0;
  std::vector<State<N>> y_, d1_, d2_;
};

}  // namespace fracfpe::ode
