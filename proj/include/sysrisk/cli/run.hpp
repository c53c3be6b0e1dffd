#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "sysrisk/risk_engine.hpp"

namespace sysrisk::cli {

enum class Command { Rho, RhoGamma, Dual, Gamma, Arbitrage, Fair, CheckA, Verify };
enum class Format { Text, Json };

std::optional<Command> parse_command(std::string_view name);
std::string_view to_string(Command command) noexcept;

inline constexpr const char* kToleranceEnv = "SYSRISK_TOLERANCE";

/// 1e-6 unless SYSRISK_TOLERANCE holds a positive number. Read once.
double default_tolerance();

struct RunConfig {
  Command command = Command::Rho;
  std::string instance_path;
  std::optional<std::string> x_path;  // zero profile when absent
  Format format = Format::Text;
  double tolerance = 1e-6;            // gap, fairness and decomposition checks
  std::uint64_t seed = 20240601;
  std::optional<double> gamma;        // defaults to gamma*
  int n_max = 10;
  Measure measure = Measure::Rho;     // rho-gamma always uses RhoGamma
};

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kPropertyFail = 1;
inline constexpr int kInputError = 2;
inline constexpr int kNumericalError = 3;
}  // namespace exit_code

/// Runs one command, writing the report to `out` and diagnostics to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace sysrisk::cli
