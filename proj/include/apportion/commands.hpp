#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apportion/impact.hpp"
#include "apportion/run_config.hpp"

namespace apportion {

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  bool strict = false;
  std::optional<std::uint64_t> seed;
};

// Each command returns its exit code: 0 success, 1 validation or fit error,
// 2 I/O error. Errors are reported on `err`.

int cmd_validate(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_fit(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_estimate(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_detect(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_report(const CommandOptions& opt, std::ostream& out, std::ostream& err);
/// `opt.config` is the scenario file; the bundle goes to `opt.out`.
int cmd_synth(const CommandOptions& opt, std::ostream& out, std::ostream& err);

/// Dispatches by subcommand name; unknown names give exit code 1.
int run_command(std::string_view name, const CommandOptions& opt, std::ostream& out,
                std::ostream& err);

/// Findings CSV: `rule,equipment,start,end,statistic,threshold`.
void write_findings(std::ostream& out, std::span<const FaultFinding> findings, int utc_offset_minutes);
std::vector<FaultFinding> parse_findings(std::string_view csv_text);

/// Report tables from prioritized impacts.
void write_report_csv(std::ostream& out, std::span<const ImpactEstimate> impacts, int utc_offset_minutes);
/// One row per rule: rule, possible fault, detected count, MMBTU/year.
void write_summary_csv(std::ostream& out, std::span<const ImpactEstimate> impacts);
void write_report_text(std::ostream& out, std::span<const ImpactEstimate> impacts, int utc_offset_minutes);

}  // namespace apportion
