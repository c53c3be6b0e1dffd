#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sysrisk/cli/run.hpp"

using namespace sysrisk::cli;

int main(int argc, char** argv) {
  CLI::App app{"Market-adjusted systemic risk measures on finite scenario spaces"};
  app.require_subcommand(1);

  RunConfig cfg;
  cfg.tolerance = default_tolerance();
  std::string x_path, format = "text", measure = "rho";
  double gamma = 0.0;

  const std::pair<Command, const char*> commands[] = {
      {Command::Rho, "capital requirement rho(X)"},
      {Command::RhoGamma, "capital requirement with trades aggregated through Gamma"},
      {Command::Dual, "dual optimizer Q*, penalty and its decomposition"},
      {Command::Gamma, "gamma* = rho(0)"},
      {Command::Arbitrage, "regulatory arbitrage check at --gamma (default gamma*)"},
      {Command::Fair, "fair measure vector at --gamma (default gamma*)"},
      {Command::CheckA, "condition (A) for n = 1..--n-max"},
      {Command::Verify, "duality, cash additivity, fairness and (A) checks"},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [command, help] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(to_string(command)), help);
    sub->add_option("--instance", cfg.instance_path, "instance JSON file")->required();
    sub->add_option("--x", x_path, "position JSON file (default: zero)");
    sub->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
    sub->add_option("--tol", cfg.tolerance, "verification tolerance (env SYSRISK_TOLERANCE)");
    sub->add_option("--seed", cfg.seed, "seed for randomized validation");
    sub->add_option("--gamma", gamma, "threshold gamma (default gamma*)");
    sub->add_option("--n-max", cfg.n_max, "largest n for condition (A)");
    if (command != Command::Rho && command != Command::RhoGamma) {
      sub->add_option("--measure", measure, "rho or rho-gamma")->check(CLI::IsMember({"rho", "rho-gamma"}));
    }
    subs.emplace_back(sub, command);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_code::kOk : exit_code::kInputError;
  }

  for (const auto& [sub, command] : subs) {
    if (!sub->parsed()) continue;
    cfg.command = command;
    if (sub->count("--x")) cfg.x_path = x_path;
    if (sub->count("--gamma")) cfg.gamma = gamma;
  }
  cfg.format = format == "json" ? Format::Json : Format::Text;
  cfg.measure = measure == "rho-gamma" ? sysrisk::Measure::RhoGamma : sysrisk::Measure::Rho;
  return run(cfg, std::cout, std::cerr);
}
