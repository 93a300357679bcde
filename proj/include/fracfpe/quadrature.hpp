#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "fracfpe/errors.hpp"

namespace fracfpe::quad {

struct Options {
  double rel_tol = 1e-11;
  double abs_tol = 0.0;
  int max_depth = 40;          // bisection levels allowed for a single panel
  int max_panels = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error, resabs;
  int depth;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel kronrod15(F& f, double a, double b, int depth) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double res_k = fc * kWgk[7];
  double res_g = fc * kWg[3];
  double res_abs = std::abs(res_k);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    res_k += kWgk[j] * (f1 + f2);
    res_abs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) res_g += kWg[j / 2] * (f1 + f2);
  }
  Panel p{a, b, res_k * half, std::abs((res_k - res_g) * half), res_abs * std::abs(half), depth};
  if (!std::isfinite(p.value)) {
    throw AccuracyError("quadrature: non-finite integrand on [" + std::to_string(a) + ", " +
                        std::to_string(b) + "]");
  }
  return p;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of f over [a, b].
// Throws AccuracyError when the tolerance cannot be met within the panel or
// depth budget.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  if (a == b) return {};
  if (!(std::isfinite(a) && std::isfinite(b))) throw DomainError("quadrature: infinite bounds");
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<detail::Panel> heap;
  auto first = detail::kronrod15(f, a, b, 0);
  double total = first.value, err = first.error, resabs = first.resabs;
  heap.push(first);
  int panels = 1;
  const double eps = std::numeric_limits<double>::epsilon();
  auto converged = [&] {
    const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    return err <= target || err <= 50.0 * eps * resabs;
  };
  while (!converged()) {
    auto worst = heap.top();
    if (worst.depth >= opt.max_depth || panels >= opt.max_panels) {
      throw AccuracyError("quadrature: tolerance not reached (error estimate " +
                          std::to_string(err) + ")");
    }
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::kronrod15(f, worst.a, mid, worst.depth + 1);
    auto right = detail::kronrod15(f, mid, worst.b, worst.depth + 1);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    resabs += left.resabs + right.resabs - worst.resabs;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum to shed the drift accumulated by incremental updates.
  double sum = 0.0, esum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    heap.pop();
  }
  return {sign * sum, esum, panels};
}

template <class F>
double integral(F&& f, double a, double b, const Options& opt = {}) {
  return integrate(std::forward<F>(f), a, b, opt).value;
}

}  // namespace fracfpe::quad
