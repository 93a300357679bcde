#pragma once

// Command execution for the fracfpe tool. Each command produces one CSV
// table; run() maps failures onto exit codes.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "fracfpe/analysis.hpp"
#include "fracfpe/config.hpp"
#include "fracfpe/csv.hpp"
#include "fracfpe/exact_solutions.hpp"
#include "fracfpe/frac_ops.hpp"
#include "fracfpe/oracle.hpp"

namespace fracfpe::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericError = 3, kPoleDominated = 4 };

// Worker count: hardware concurrency, capped by FRACFPE_THREADS when set.
inline int thread_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FRACFPE_THREADS")) {
    if (auto cap = detail::to_int(env); cap && *cap >= 1) n = std::min(n, *cap);
  }
  return n;
}

struct Result {
  csv::Table table;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
};

namespace detail {

inline oracle::TimeFactor time_factor(const RunConfig& cfg) {
  if (!cfg.frac) return oracle::unit_factor();
  auto map = std::make_shared<const TimeMap>(*cfg.frac);
  return [map](double t) { return map->p(t); };
}

inline SolutionHandle make_handle(const RunConfig& cfg) {
  return SolutionHandle(cfg.phys, cfg.family_config, cfg.variant, cfg.frac);
}

inline std::vector<double> family_poles(const SolutionHandle& h, double lo, double hi) {
  switch (h.family()) {
    case Family::LinearAux: return h.as<LinearFamily>().poles(lo, hi);
    case Family::QuadAux: return h.as<QuadraticFamily>().poles(lo, hi);
    case Family::SelfSimilar: return {};
  }
  return {};
}

inline std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + csv::format(xs[i]);
  return s;
}

inline void add_header(csv::Table& t, const RunConfig& cfg) {
  t.add_meta("command", std::string(to_string(cfg.command)));
  if (cfg.preset) {
    t.add_meta("preset", *cfg.preset);
    if (const Preset* p = find_preset(*cfg.preset); p && !p->note.empty()) t.add_meta("preset_note", p->note);
  }
  for (const auto& [k, v] : cfg.resolved)
    if (k != "command" && k != "preset" && k != "output") t.add_meta("param." + k, v);
  t.add_meta("eta", csv::format(cfg.phys.eta));
  t.add_meta("B", csv::format(cfg.phys.big_b));
  t.add_meta("m", csv::format(cfg.phys.mass));
  if (cfg.frac) {
    const auto& f = *cfg.frac;
    t.add_meta("frac.kind", std::string(to_string(f.kind)));
    if (f.kind == DerivativeKind::PowerLaw) {
      t.add_meta("frac.beta", csv::format(f.beta));
      t.add_meta("frac.note", "tau = t^beta; not derived from a fractional derivative");
    } else if (f.kind == DerivativeKind::Gawad) {
      t.add_meta("frac.beta", csv::format(f.beta));
      t.add_meta("frac.lambda", csv::format(f.lambda));
    } else {
      t.add_meta("frac.alpha", csv::format(f.alpha));
    }
    if (f.kind == DerivativeKind::AtanganaBaleanu) t.add_meta("frac.ab_norm", csv::format(f.ab_norm));
    if (f.has_horizon()) t.add_meta("frac.t0", csv::format(f.t_horizon));
  } else {
    t.add_meta("frac.kind", "none");
  }
  if (cfg.family) {
    t.add_meta("family", std::string(to_string(*cfg.family)));
    t.add_meta("variant", std::string(to_string(cfg.variant)));
  }
  const auto& g = cfg.grid;
  t.add_meta("grid.t", csv::format(g.t_min) + ":" + csv::format(g.t_max) + ":" + std::to_string(g.nt));
  t.add_meta("grid.v", csv::format(g.v_min) + ":" + csv::format(g.v_max) + ":" + std::to_string(g.nv));
}

inline ScalarFn test_function(const RunConfig& cfg, bool derivative) {
  const double k = cfg.power;
  if (cfg.function == "exp") {
    if (derivative) return [](double t) { return -std::exp(-t); };
    return [](double t) { return std::exp(-t); };
  }
  if (cfg.function == "sin") {
    if (derivative) return [](double t) { return std::cos(t); };
    return [](double t) { return std::sin(t); };
  }
  if (derivative) return [k](double t) { return k * std::pow(t, k - 1); };
  return [k](double t) { return std::pow(t, k); };
}

inline Result run_tau(const RunConfig& cfg) {
  Result r;
  add_header(r.table, cfg);
  r.table.columns = {"t", "tau", "p"};
  TimeMap map(*cfg.frac);
  for (double t : cfg.grid.ts()) r.table.rows.push_back({t, map.tau(t), map.p(t)});
  r.evaluated = r.table.rows.size();
  return r;
}

inline Result run_deriv(const RunConfig& cfg) {
  Result r;
  add_header(r.table, cfg);
  r.table.add_meta("function", cfg.function == "power" ? "t^" + csv::format(cfg.power) : cfg.function);
  r.table.columns = {"t", "f", "deriv", "reduced"};
  const auto f = test_function(cfg, false), df = test_function(cfg, true);
  for (double t : cfg.grid.ts()) {
    // every integral form vanishes over the empty interval at t = 0
    const double d = t == 0.0 ? 0.0 : integral_form_deriv(*cfg.frac, df, t);
    const double red = reduction_p(*cfg.frac, t) * df(t);
    r.table.rows.push_back({t, f(t), d, red});
  }
  r.evaluated = r.table.rows.size();
  return r;
}

// Evaluates fn on the (t, v) grid in parallel over t rows. Poles become NaN.
template <class F>
std::vector<std::vector<double>> eval_grid(const RunConfig& cfg, F&& fn, std::vector<std::pair<double, double>>& poles_hit) {
  const auto ts = cfg.grid.ts(), vs = cfg.grid.vs();
  std::vector<std::vector<double>> vals(ts.size(), std::vector<double>(vs.size()));
  std::vector<std::vector<char>> bad(ts.size(), std::vector<char>(vs.size(), 0));
  const int nthreads = std::min<int>(thread_count(), static_cast<int>(ts.size()));
  std::vector<std::exception_ptr> errors(nthreads);
  auto work = [&](int k) {
    try {
      for (std::size_t i = k; i < ts.size(); i += nthreads) {
        for (std::size_t j = 0; j < vs.size(); ++j) {
          try {
            vals[i][j] = fn(ts[i], vs[j]);
            if (!std::isfinite(vals[i][j])) throw PoleError("non-finite value", vs[j]);
          } catch (const PoleError&) {
            vals[i][j] = NAN;
            bad[i][j] = 1;
          }
        }
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int k = 1; k < nthreads; ++k) pool.emplace_back(work, k);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = 0; j < vs.size(); ++j)
      if (bad[i][j]) poles_hit.emplace_back(ts[i], vs[j]);
  return vals;
}

inline std::string join_points(const std::vector<std::pair<double, double>>& pts, std::size_t cap = 200) {
  std::string s;
  for (std::size_t i = 0; i < pts.size() && i < cap; ++i)
    s += (i ? ";" : "") + csv::format(pts[i].first) + ":" + csv::format(pts[i].second);
  if (pts.size() > cap) s += ";...";
  return s;
}

inline Result run_exact(const RunConfig& cfg) {
  Result r;
  add_header(r.table, cfg);
  const auto h = make_handle(cfg);
  r.table.add_meta("lifted", cfg.frac ? "true" : "false");
  r.table.add_meta("poles_v", join(family_poles(h, cfg.grid.v_min, cfg.grid.v_max)));
  std::vector<std::pair<double, double>> hit;
  const auto vals = eval_grid(cfg, [&](double t, double v) { return h(t, v); }, hit);
  r.table.add_meta("excluded_count", std::to_string(hit.size()));
  r.table.add_meta("excluded", join_points(hit));
  r.table.columns = {"t", "v", "f"};
  const auto ts = cfg.grid.ts(), vs = cfg.grid.vs();
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = 0; j < vs.size(); ++j) r.table.rows.push_back({ts[i], vs[j], vals[i][j]});
  r.excluded = hit.size();
  r.evaluated = ts.size() * vs.size() - hit.size();
  return r;
}

inline oracle::Field initial_field(const RunConfig& cfg, double t_start) {
  const oracle::Grid1D g(cfg.grid.v_min, cfg.grid.v_max, cfg.grid.nv);
  oracle::Field f;
  switch (cfg.init) {
    case InitKind::Ou:
      f = oracle::Field::sample(g, t_start, [&](double v) { return oracle::ou_transition_density(cfg.phys, cfg.v0, cfg.init_t, v); });
      break;
    case InitKind::Stationary:
      f = oracle::Field::sample(g, t_start, [&](double v) { return oracle::stationary_density(cfg.phys, v); });
      break;
    case InitKind::Gaussian: {
      const double s = cfg.init_width;
      f = oracle::Field::sample(g, t_start, [&](double v) {
        const double d = v - cfg.v0;
        return std::exp(-d * d / (2 * s * s));
      });
      break;
    }
  }
  // unit discrete mass, as the solver requires
  return analysis::normalize(f);
}

// Runs the solver through each time of the grid (clipped to start).
inline std::vector<oracle::Field> solve_snapshots(const RunConfig& cfg, double& drift) {
  const double t_start = cfg.grid.t_min;
  const auto p = time_factor(cfg);
  std::vector<oracle::Field> snaps{initial_field(cfg, t_start)};
  const double m0 = oracle::mass(snaps[0]);
  drift = 0;
  for (double t : cfg.grid.ts()) {
    if (t <= snaps.back().t) continue;
    snaps.push_back(oracle::solve_fd(cfg.phys, p, snaps.back(), t, cfg.dt, {1 << 30}).back());
    drift = std::max(drift, std::abs(oracle::mass(snaps.back()) - m0));
  }
  return snaps;
}

inline Result run_solve(const RunConfig& cfg) {
  Result r;
  add_header(r.table, cfg);
  double drift = 0;
  const auto snaps = solve_snapshots(cfg, drift);
  r.table.add_meta("solver.dt", csv::format(cfg.dt));
  r.table.add_meta("solver.init", cfg.init == InitKind::Ou ? "ou" : cfg.init == InitKind::Stationary ? "stationary" : "gaussian");
  r.table.add_meta("solver.mass_drift", csv::format(drift));
  r.table.columns = {"t", "v", "f"};
  for (const auto& f : snaps)
    for (int i = 0; i < f.grid.nv; ++i) r.table.rows.push_back({f.t, f.grid.node(i), f.values[i]});
  r.evaluated = r.table.rows.size();
  return r;
}

// Construction-constraint residuals of the classical family at (t, v).
inline std::vector<std::pair<std::string, double>> constraints_at(const SolutionHandle& h, double t, double v) {
  switch (h.family()) {
    case Family::LinearAux: return h.as<LinearFamily>().constraints(t, v).entries;
    case Family::QuadAux: return h.as<QuadraticFamily>().constraints(t, v).entries;
    case Family::SelfSimilar: {
      const auto& s = h.as<SelfSimilarFamily>();
      return s.constraints(t, v * s.omega(t)).entries;
    }
  }
  return {};
}

inline Result run_residual(const RunConfig& cfg) {
  Result r;
  add_header(r.table, cfg);
  const auto h = make_handle(cfg);
  analysis::ResidualOptions opt;
  opt.threads = thread_count();
  if (cfg.frac) {
    opt.t_lower = 0.0;
    if (cfg.frac->has_horizon()) opt.t_scale = cfg.frac->t_horizon;
  }
  opt.poles = family_poles(h, cfg.grid.v_min - 1, cfg.grid.v_max + 1);
  opt.pole_gap = cfg.pole_gap > 0 ? cfg.pole_gap : 2e-3 * cfg.phys.v_scale();
  const oracle::Grid1D g(cfg.grid.v_min, cfg.grid.v_max, cfg.grid.nv);
  const auto pts = analysis::grid_points(g, cfg.grid.ts());
  analysis::Candidate f = [&h](double t, double v) { return h(t, v); };

  std::size_t excluded = pts.size();
  analysis::ResidualReport rep;
  try {
    rep = analysis::residual_fpe(f, cfg.phys, [&h](double t) { return h.p(t); }, pts, opt);
    excluded = rep.excluded.size();
  } catch (const analysis::EmptyReportError&) {
    r.table.add_meta("excluded_count", std::to_string(pts.size()));
    r.table.columns = {"t", "v", "residual", "scale"};
    r.excluded = pts.size();
    return r;
  }
  r.table.add_meta("residual.h_v", csv::format(rep.h_v));
  r.table.add_meta("residual.h_t", csv::format(rep.h_t));
  r.table.add_meta("residual.l_inf", csv::format(rep.l_inf));
  r.table.add_meta("residual.l2", csv::format(rep.l2));
  r.table.add_meta("residual.rel_l_inf", csv::format(rep.rel_l_inf));
  r.table.add_meta("residual.max_pointwise_rel", csv::format(rep.max_pointwise_rel));
  r.table.add_meta("poles_v", join(opt.poles));
  r.table.add_meta("pole_gap", csv::format(opt.pole_gap));
  r.table.add_meta("excluded_count", std::to_string(excluded));
  std::vector<std::pair<double, double>> ex;
  for (const auto& q : rep.excluded) ex.emplace_back(q.t, q.v);
  r.table.add_meta("excluded", join_points(ex));

  // construction constraints of the classical family on the same (t, v) grid
  std::vector<std::pair<std::string, double>> worst;
  for (const auto& q : rep.points) {
    try {
      for (const auto& [name, val] : constraints_at(h, q.t, q.v)) {
        auto it = std::find_if(worst.begin(), worst.end(), [&](const auto& w) { return w.first == name; });
        if (it == worst.end()) worst.emplace_back(name, val);
        else it->second = std::max(it->second, val);
      }
    } catch (const PoleError&) {
    } catch (const RangeError&) {
    }
  }
  for (const auto& [name, val] : worst) r.table.add_meta("constraint_max." + name, csv::format(val));

  r.table.columns = {"t", "v", "residual", "scale"};
  for (std::size_t i = 0; i < rep.points.size(); ++i)
    r.table.rows.push_back({rep.points[i].t, rep.points[i].v, rep.residual[i], rep.term_scale[i]});
  r.evaluated = rep.points.size();
  r.excluded = excluded;
  return r;
}

inline Result run_moments(const RunConfig& cfg) {
  Result r;
  add_header(r.table, cfg);
  r.table.columns = {"t", "mean", "mean_square"};
  const auto ts = cfg.grid.ts();
  switch (cfg.source) {
    case MomentSource::Ode: {
      r.table.add_meta("moments.source", "ode");
      const auto p = time_factor(cfg);
      for (double t : ts) {
        const auto m = oracle::moment_ode(cfg.phys, p, cfg.v0_mean, cfg.v0_sq, t - cfg.grid.t_min);
        r.table.rows.push_back({t, m.mean, m.mean_square});
      }
      break;
    }
    case MomentSource::Fd: {
      r.table.add_meta("moments.source", "fd");
      double drift = 0;
      for (const auto& f : solve_snapshots(cfg, drift))
        r.table.rows.push_back({f.t, analysis::moments(f, 1), analysis::moments(f, 2)});
      r.table.add_meta("solver.mass_drift", csv::format(drift));
      break;
    }
    case MomentSource::Exact: {
      r.table.add_meta("moments.source", "exact");
      const auto h = make_handle(cfg);
      const oracle::Grid1D g(cfg.grid.v_min, cfg.grid.v_max, cfg.grid.nv);
      for (double t : ts) {
        auto f = [&](double v) { return h(t, v); };
        r.table.rows.push_back({t, analysis::moments(f, g, 1), analysis::moments(f, g, 2)});
      }
      break;
    }
  }
  r.evaluated = r.table.rows.size();
  return r;
}

}  // namespace detail

inline Result execute(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::Tau: return detail::run_tau(cfg);
    case Command::Deriv: return detail::run_deriv(cfg);
    case Command::Exact: return detail::run_exact(cfg);
    case Command::Solve: return detail::run_solve(cfg);
    case Command::Residual: return detail::run_residual(cfg);
    case Command::Moments: return detail::run_moments(cfg);
  }
  throw ConfigError("command: unhandled");
}

// Resolves, executes and writes. Returns the process exit code.
inline int run(const KeyValues& pairs, std::ostream& err = std::cerr) {
  try {
    const RunConfig cfg = resolve_config(pairs);
    const Result res = execute(cfg);
    csv::write_file(cfg.output, res.table);
    const std::size_t total = res.evaluated + res.excluded;
    if (total > 0 && 2 * res.excluded > total) {
      err << "fracfpe: " << res.excluded << " of " << total << " points excluded near poles\n";
      return kPoleDominated;
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "fracfpe: " << e.what() << "\n";
    return kConfigError;
  } catch (const PoleError& e) {
    err << "fracfpe: pole at v = " << e.location() << ": " << e.what() << "\n";
    return kPoleDominated;
  } catch (const Error& e) {
    err << "fracfpe: " << e.what() << "\n";
    return kNumericError;
  }
}

}  // namespace fracfpe::cli
