#pragma once

// Test-only reference computations. Nothing here calls into the library's
// own quadrature, series or ODE code paths.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle_ref {

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Dawson's function by its Maclaurin series: sum (-1)^k 2^k x^{2k+1} / (2k+1)!!.
inline double dawson_maclaurin(double x, int terms = 60) {
  double term = x, sum = x;
  for (int k = 1; k < terms; ++k) {
    term *= -2.0 * x * x / (2.0 * k + 1.0);
    sum += term;
  }
  return sum;
}

// Dawson by Simpson quadrature of int_0^x e^{y^2 - x^2} dy.
inline double dawson_quadrature(double x) {
  return simpson([x](double y) { return std::exp((y - x) * (y + x)); }, 0.0, x, 200000);
}

// Central first derivative with Richardson extrapolation.
inline double d1(const std::function<double(double)>& f, double x, double h) {
  const double a = (f(x + h) - f(x - h)) / (2 * h);
  const double b = (f(x + h / 2) - f(x - h / 2)) / h;
  return (4 * b - a) / 3;
}

inline double d2(const std::function<double(double)>& f, double x, double h) {
  const double fx = f(x);
  const double a = (f(x + h) - 2 * fx + f(x - h)) / (h * h);
  const double b = (f(x + h / 2) - 2 * fx + f(x - h / 2)) / (h * h / 4);
  return (4 * b - a) / 3;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// Deterministic sample points in [lo, hi].
inline std::vector<double> samples(double lo, double hi, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

}  // namespace oracle_ref
