#pragma once

// Run configuration: flat key=value text, named parameter presets, and
// resolution into typed parameters.

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracfpe/errors.hpp"
#include "fracfpe/exact_solutions.hpp"
#include "fracfpe/frac_ops.hpp"

namespace fracfpe::cli {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

enum class Command { Tau, Deriv, Exact, Solve, Residual, Moments };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::Tau: return "tau";
    case Command::Deriv: return "deriv";
    case Command::Exact: return "exact";
    case Command::Solve: return "solve";
    case Command::Residual: return "residual";
    case Command::Moments: return "moments";
  }
  return "?";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (auto c : {Command::Tau, Command::Deriv, Command::Exact, Command::Solve, Command::Residual,
                 Command::Moments})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

struct Preset {
  std::string name;
  std::string note;
  KeyValues values;
};

// Named parameter sets. fig1i uses eta = 0.5 so that it differs from fig1ii
// in eta, as fig3i does from fig3ii.
inline const std::vector<Preset>& presets() {
  static const KeyValues linear_base = {
      {"family", "linear"}, {"B0", "1.5"}, {"c0", "2"},   {"n", "10"},    {"A0", "1.3"},
      {"A1", "2.3"},        {"B", "5"},    {"m", "2.5"}, {"A2", "3"},    {"mu", "-0.5"},
      {"B1", "1.9"},        {"B2", "0.7"}};
  auto with = [](KeyValues base, const KeyValues& extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
  };
  const std::string inferred = "eta = 0.5 chosen to pair with fig1ii (eta = 1.7)";
  const std::string powerlaw = "tau = t^beta is an ad hoc time map, not backed by a fractional derivative";
  static const std::vector<Preset> table = {
      {"fig1i", inferred + "; " + powerlaw,
       with(linear_base, {{"eta", "0.5"}, {"frac", "power_law"}, {"beta", "0.39"}})},
      {"fig1ii", powerlaw, with(linear_base, {{"eta", "1.7"}, {"frac", "power_law"}, {"beta", "0.39"}})},
      {"fig1iii", powerlaw,
       with(linear_base, {{"eta", "0.5"}, {"frac", "power_law"}, {"beta", "0.99"}})},
      {"fig2", powerlaw, with(linear_base, {{"eta", "0.5"}, {"frac", "power_law"}, {"beta", "0.99"}})},
      {"fig3i", "", with(linear_base, {{"eta", "0.5"}, {"frac", "caputo"}, {"alpha", "0.39"}, {"t0", "20"}})},
      {"fig3ii", "", with(linear_base, {{"eta", "1.7"}, {"frac", "caputo"}, {"alpha", "0.39"}, {"t0", "20"}})},
      {"fig3iii", "", with(linear_base, {{"eta", "0.5"}, {"frac", "caputo"}, {"alpha", "0.99"}, {"t0", "20"}})},
      {"fig4", "moment curves; same constants as fig3i",
       with(linear_base, {{"eta", "0.5"}, {"frac", "caputo"}, {"alpha", "0.39"}, {"t0", "20"}})},
  };
  return table;
}

inline const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

enum class InitKind { Ou, Stationary, Gaussian };
enum class MomentSource { Ode, Fd, Exact };

struct Grid {
  double t_min = 0.0, t_max = 10.0;
  int nt = 101;
  double v_min = -10.0, v_max = 10.0;
  int nv = 101;

  std::vector<double> ts() const { return axis(t_min, t_max, nt); }
  std::vector<double> vs() const { return axis(v_min, v_max, nv); }
  static std::vector<double> axis(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = (i == n - 1) ? hi : lo + (hi - lo) * i / (n - 1);
    return out;
  }
};

struct RunConfig {
  Command command = Command::Tau;
  std::optional<std::string> preset;
  std::string output = "-";
  PhysParams phys;
  std::optional<FracParams> frac;
  std::optional<Family> family;
  Variant variant = Variant::Reconciled;
  FamilyConfig family_config = LinearAuxConfig{};
  Grid grid;
  // deriv
  std::string function = "power";
  double power = 1.0;
  // solve
  InitKind init = InitKind::Ou;
  double v0 = 2.0;
  double init_t = 0.1;
  double init_width = 1.0;
  double dt = 1e-3;
  // moments
  MomentSource source = MomentSource::Ode;
  double v0_mean = 2.0;
  double v0_sq = 4.0;
  // residual
  double pole_gap = 0.0;
  // every key and value after preset expansion and overrides
  std::map<std::string, std::string> resolved;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> to_double(const std::string& s) {
  double x{};
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || p != end) return std::nullopt;
  return x;
}

inline std::optional<int> to_int(const std::string& s) {
  int x{};
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || p != end) return std::nullopt;
  return x;
}

// Keys each family reads, with the preset spelling.
inline const std::set<std::string>& family_keys(Family f) {
  static const std::set<std::string> lin = {"n", "mu", "c0", "A0", "A1", "A2", "B0", "B1", "B2", "s0", "f0"};
  static const std::set<std::string> quad = {"n", "mu", "c1", "c2", "s0", "s1", "B0", "B1"};
  static const std::set<std::string> self = {"p1", "c1", "A0", "A1", "B0", "B1", "B2", "B3", "s0", "s1"};
  switch (f) {
    case Family::LinearAux: return lin;
    case Family::QuadAux: return quad;
    case Family::SelfSimilar: return self;
  }
  return lin;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = {"command", "preset",  "output", "family", "variant", "frac",     "alpha",
                               "beta",    "lambda",  "t0",     "ab_norm", "eta",    "B",        "m",
                               "t_min",   "t_max",   "nt",     "v_min",  "v_max",   "nv",       "function",
                               "power",   "init",    "v0",     "init_t", "init_width", "dt",    "source",
                               "v0_mean", "v0_sq",   "pole_gap"};
    for (auto f : {Family::LinearAux, Family::QuadAux, Family::SelfSimilar})
      for (const auto& s : family_keys(f)) k.insert(s);
    return k;
  }();
  return keys;
}

}  // namespace detail

// Parses flat key=value text; '#' starts a comment.
inline KeyValues parse_key_values(std::string_view text, const std::string& origin = "config") {
  KeyValues out;
  std::vector<std::string> problems;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string s = detail::trim(line);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      problems.push_back(origin + ":" + std::to_string(lineno) + ": expected key=value");
      continue;
    }
    std::string key = detail::trim(s.substr(0, eq));
    std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty()) {
      problems.push_back(origin + ":" + std::to_string(lineno) + ": empty key");
      continue;
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  if (!problems.empty()) {
    std::string msg = "config error:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return out;
}

// Resolves key/value pairs into a RunConfig. A preset (the last one named)
// expands first; every other pair then applies in order, last write wins.
// All problems are collected into one ConfigError.
inline RunConfig resolve_config(const KeyValues& pairs) {
  std::vector<std::string> problems;
  std::map<std::string, std::string> kv;
  std::set<std::string> user_keys;
  std::optional<std::string> preset_name;
  for (const auto& [k, v] : pairs)
    if (k == "preset") preset_name = v;
  if (preset_name) {
    if (const Preset* p = find_preset(*preset_name)) {
      for (const auto& [k, v] : p->values) kv[k] = v;
    } else {
      problems.push_back("preset: unknown preset '" + *preset_name + "'");
    }
  }
  for (const auto& [k, v] : pairs) {
    if (!detail::known_keys().count(k)) {
      problems.push_back("unknown key '" + k + "'");
      continue;
    }
    kv[k] = v;
    user_keys.insert(k);
  }

  RunConfig cfg;
  cfg.preset = preset_name;
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto num = [&](const std::string& k, double& dst) {
    if (const auto* s = get(k)) {
      if (auto x = detail::to_double(*s)) dst = *x;
      else problems.push_back(k + ": not a number: '" + *s + "'");
    }
  };
  auto integer = [&](const std::string& k, int& dst) {
    if (const auto* s = get(k)) {
      if (auto x = detail::to_int(*s)) dst = *x;
      else problems.push_back(k + ": not an integer: '" + *s + "'");
    }
  };

  if (const auto* s = get("command")) {
    if (auto c = parse_command(*s)) cfg.command = *c;
    else problems.push_back("command: unknown command '" + *s + "'");
  } else {
    problems.push_back("command: missing required key");
  }
  if (const auto* s = get("output")) cfg.output = *s;

  num("eta", cfg.phys.eta);
  num("B", cfg.phys.big_b);
  num("m", cfg.phys.mass);
  try {
    cfg.phys.validate();
  } catch (const DomainError& e) {
    problems.push_back(std::string("eta/B/m: ") + e.what());
  }

  if (const auto* s = get("frac"); s && *s != "none") {
    if (auto k = parse_derivative_kind(*s)) {
      FracParams fp;
      fp.kind = *k;
      num("alpha", fp.alpha);
      num("beta", fp.beta);
      num("lambda", fp.lambda);
      num("ab_norm", fp.ab_norm);
      if (fp.has_horizon()) {
        if (!get("t0")) problems.push_back("t0: required for frac=" + *s);
        num("t0", fp.t_horizon);
      } else {
        fp.t_horizon = std::numeric_limits<double>::infinity();
      }
      try {
        fp.validate();
        cfg.frac = fp;
      } catch (const DomainError& e) {
        problems.push_back(std::string("frac: ") + e.what());
      }
    } else {
      problems.push_back("frac: unknown derivative kind '" + *s + "'");
    }
  }

  if (const auto* s = get("family")) {
    if (auto f = parse_family(*s)) cfg.family = *f;
    else problems.push_back("family: unknown family '" + *s + "'");
  }
  if (const auto* s = get("variant")) {
    if (auto v = parse_variant(*s)) cfg.variant = *v;
    else problems.push_back("variant: unknown variant '" + *s + "'");
  }
  if (cfg.family) {
    const auto& mine = detail::family_keys(*cfg.family);
    std::set<std::string> other;
    for (auto f : {Family::LinearAux, Family::QuadAux, Family::SelfSimilar})
      for (const auto& k : detail::family_keys(f)) other.insert(k);
    for (const auto& k : user_keys)
      if (other.count(k) && !mine.count(k))
        problems.push_back(k + ": does not apply to family " + std::string(to_string(*cfg.family)));
    switch (*cfg.family) {
      case Family::LinearAux: {
        LinearAuxConfig c;
        integer("n", c.n);
        num("mu", c.mu);
        num("c0", c.c0);
        num("A0", c.a0_const);
        num("A1", c.amp_a1);
        num("A2", c.amp_a2);
        num("B0", c.b0);
        num("B1", c.b1);
        num("B2", c.b2);
        num("s0", c.s0);
        num("f0", c.f0);
        cfg.family_config = c;
        break;
      }
      case Family::QuadAux: {
        QuadAuxConfig c;
        integer("n", c.n);
        num("mu", c.mu);
        num("c1", c.c1);
        num("c2", c.c2);
        num("s0", c.s0);
        num("s1", c.s1);
        num("B0", c.b0_hermite);
        num("B1", c.b1_const);
        cfg.family_config = c;
        break;
      }
      case Family::SelfSimilar: {
        SelfSimConfig c;
        num("p1", c.p1);
        num("c1", c.c1);
        num("A0", c.a0_const);
        num("A1", c.a1_const);
        num("B0", c.b0_const);
        num("B1", c.b1);
        num("B2", c.b2);
        num("B3", c.b3);
        num("s0", c.s0);
        num("s1", c.s1);
        cfg.family_config = c;
        break;
      }
    }
  }

  num("t_min", cfg.grid.t_min);
  num("t_max", cfg.grid.t_max);
  integer("nt", cfg.grid.nt);
  num("v_min", cfg.grid.v_min);
  num("v_max", cfg.grid.v_max);
  integer("nv", cfg.grid.nv);
  if (cfg.grid.nt < 2) problems.push_back("nt: grid counts must be >= 2");
  if (cfg.grid.nv < 2) problems.push_back("nv: grid counts must be >= 2");
  if (!(cfg.grid.t_min < cfg.grid.t_max)) problems.push_back("t_min/t_max: need t_min < t_max");
  if (!(cfg.grid.v_min < cfg.grid.v_max)) problems.push_back("v_min/v_max: need v_min < v_max");

  if (const auto* s = get("function")) cfg.function = *s;
  num("power", cfg.power);
  if (const auto* s = get("init")) {
    if (*s == "ou") cfg.init = InitKind::Ou;
    else if (*s == "stationary") cfg.init = InitKind::Stationary;
    else if (*s == "gaussian") cfg.init = InitKind::Gaussian;
    else problems.push_back("init: expected ou, stationary or gaussian, got '" + *s + "'");
  }
  num("v0", cfg.v0);
  num("init_t", cfg.init_t);
  num("init_width", cfg.init_width);
  num("dt", cfg.dt);
  if (const auto* s = get("source")) {
    if (*s == "ode") cfg.source = MomentSource::Ode;
    else if (*s == "fd") cfg.source = MomentSource::Fd;
    else if (*s == "exact") cfg.source = MomentSource::Exact;
    else problems.push_back("source: expected ode, fd or exact, got '" + *s + "'");
  }
  num("v0_mean", cfg.v0_mean);
  num("v0_sq", cfg.v0_sq);
  num("pole_gap", cfg.pole_gap);

  // a default time range stays inside a short horizon
  if (cfg.frac && cfg.frac->has_horizon() && !get("t_max") && !(cfg.grid.t_max < cfg.frac->t_horizon))
    cfg.grid.t_max = 0.95 * cfg.frac->t_horizon;

  // command-specific requirements
  const bool needs_time = cfg.command != Command::Deriv || cfg.frac;
  if (cfg.frac && cfg.frac->has_horizon() && needs_time && !(cfg.grid.t_max < cfg.frac->t_horizon))
    problems.push_back("t_max: must lie below t0 = " + std::to_string(cfg.frac->t_horizon));
  if ((cfg.command == Command::Tau || cfg.command == Command::Deriv) && !cfg.frac)
    problems.push_back("frac: required for command " + std::string(to_string(cfg.command)));
  if (cfg.command == Command::Deriv && cfg.frac && cfg.frac->kind == DerivativeKind::PowerLaw)
    problems.push_back("frac: power_law has no integral-form derivative");
  if (cfg.command == Command::Deriv && cfg.function != "power" && cfg.function != "exp" && cfg.function != "sin")
    problems.push_back("function: expected power, exp or sin, got '" + cfg.function + "'");
  if ((cfg.command == Command::Exact || cfg.command == Command::Residual ||
       (cfg.command == Command::Moments && cfg.source == MomentSource::Exact)) &&
      !cfg.family)
    problems.push_back("family: required for command " + std::string(to_string(cfg.command)));
  if (!(cfg.dt > 0)) problems.push_back("dt: must be positive");
  if (cfg.command == Command::Solve || (cfg.command == Command::Moments && cfg.source == MomentSource::Fd)) {
    if (cfg.init == InitKind::Ou && !(cfg.init_t > 0)) problems.push_back("init_t: must be positive for init=ou");
    if (cfg.init == InitKind::Gaussian && !(cfg.init_width > 0)) problems.push_back("init_width: must be positive");
    if (cfg.grid.nv < 3) problems.push_back("nv: solve needs at least 3 nodes");
  }

  // family construction checks its own invariants
  if (cfg.family && problems.empty()) {
    try {
      SolutionHandle probe(cfg.phys, cfg.family_config, cfg.variant);
      (void)probe;
    } catch (const DomainError& e) {
      problems.push_back(std::string("family: ") + e.what());
    }
  }

  if (!problems.empty()) {
    std::string msg = "config error:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  cfg.resolved = std::move(kv);
  return cfg;
}

inline KeyValues read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error:\n  cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path);
}

inline RunConfig load_config(const std::string& path, const KeyValues& overrides = {}) {
  KeyValues kv = read_key_value_file(path);
  kv.insert(kv.end(), overrides.begin(), overrides.end());
  return resolve_config(kv);
}

}  // namespace fracfpe::cli
