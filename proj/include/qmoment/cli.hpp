#pragma once

// Subcommands behind the `qmoment` tool. run_command does the work and keeps
// outputs in memory so tests can inspect them; run_cli adds argument parsing,
// file output and exit codes.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qmoment/config.hpp"

namespace qmoment::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNumericalFailure = 2, kToleranceExceeded = 3 };

enum class Format { Csv, Text };

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::vector<OutputFile> files;  // deterministic data
  std::vector<std::pair<std::string, std::string>> summary;
  std::string meta_json;          // wall-clock and run counters, kept apart from the data
  int exit_code = kOk;
  std::string message;            // reason for a nonzero exit code

  const OutputFile* file(std::string_view name) const;
  std::string summary_value(std::string_view key) const;  // "" when absent
  std::string render_summary(Format f) const;
};

inline constexpr std::string_view kCommands[] = {"derive", "simulate", "fixed-points", "sweep", "oracle", "compare"};

/// Raw equations, central forms and the closed system for the configured
/// scenario and closure.
std::string derive_text(const RunConfig& c);

/// Throws ConfigError for an unknown command; domain errors propagate.
CommandResult run_command(std::string_view command, const RunConfig& c, Format format = Format::Csv,
                          bool assert_tolerances = false);

/// `qmoment <command> --config PATH [--out DIR] [--assert] [--format csv|text]`.
/// With --out, files (and <command>.meta.json) go to DIR and the summary to
/// `out`; without it, data goes to `out` and the summary to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qmoment::cli
