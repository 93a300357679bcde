// fracfpe: evaluate time maps, fractional derivatives, exact solutions,
// finite-difference solves, residuals and moments; write CSV.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fracfpe/cli.hpp"

int main(int argc, char** argv) {
  using namespace fracfpe::cli;
  CLI::App app{"Fokker-Planck exact solutions, fractional time maps and reference solvers"};
  std::string command, command_flag, preset, config_path, output;
  std::vector<std::string> sets;
  app.add_option("cmd", command, "tau, deriv, exact, solve, residual or moments");
  app.add_option("--command", command_flag, "same as the positional command");
  app.add_option("--preset", preset, "named parameter set (fig1i ... fig4)");
  app.add_option("--config", config_path, "flat key=value file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "key=value override, repeatable");
  app.add_option("-o,--output", output, "output CSV path, '-' for stdout");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  KeyValues pairs;
  try {
    if (!config_path.empty()) pairs = read_key_value_file(config_path);
    if (!preset.empty()) pairs.emplace_back("preset", preset);
    if (!command.empty()) pairs.emplace_back("command", command);
    if (!command_flag.empty()) pairs.emplace_back("command", command_flag);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0)
        throw fracfpe::ConfigError("config error:\n  --set expects key=value, got '" + s + "'");
      pairs.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!output.empty()) pairs.emplace_back("output", output);
  } catch (const fracfpe::ConfigError& e) {
    std::cerr << "fracfpe: " << e.what() << "\n";
    return kConfigError;
  }
  return run(pairs);
}
