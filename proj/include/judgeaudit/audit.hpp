#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "judgeaudit/report.hpp"
#include "judgeaudit/runner.hpp"

namespace judgeaudit {

/// One audit run, fully specified. The config digest over the canonical
/// JSON form plus the input digests make a run reproducible bit-for-bit
/// with mock judges.
struct RunConfig {
  std::filesystem::path corpus_path;  // single/stacked protocols
  std::filesystem::path pairs_path;   // pairwise protocol
  std::vector<JudgeConfig> judges;
  std::vector<Technique> techniques = {kAllTechniques.begin(), kAllTechniques.end()};
  std::string protocol = "single";  // single | pairwise | stacked
  PromptVariant variant = PromptVariant::Baseline;
  Placement placement = Placement::append;
  TemplatePolicy policy = TemplatePolicy::hashed;
  std::filesystem::path bank_path;     // optional overrides
  std::filesystem::path prompts_path;  // optional overrides
  std::filesystem::path cache_dir;     // empty = uncached
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  Rubric rubric;

  json to_json() const;  // canonical form, digested into the manifest
};

RunConfig run_config_from_json(const json& node, const std::string& where);
RunConfig load_run_config(const std::filesystem::path& path);

/// Collects every problem at once instead of stopping at the first.
std::vector<std::string> validate_run_config(const RunConfig& config);

struct AuditOutcome {
  int exit_code = 0;  // 0 full success, 2 invalid trials present
  RunStats stats;
  AuditReport report;
  std::filesystem::path records_path;
  std::filesystem::path manifest_path;
  std::vector<std::filesystem::path> report_paths;
};

/// Runs the configured protocol across judges, writes the manifest, the raw
/// records, and all three report exports under out_dir. Throws AuditAborted
/// (transport failure; partial records attached) and config/file errors.
AuditOutcome run_audit(const RunConfig& config);

/// Re-aggregates a raw record file into an AuditReport without touching the
/// network. Byte-identical to the audit-time report for identical inputs.
AuditReport report_from_records(const std::filesystem::path& records_path, ReportMeta meta);

/// Loads a reference fixture, recomputes the published aggregates, prints a
/// pass/fail line per check. Returns 0 when every check passes.
int fixture_check(const std::filesystem::path& fixture_path, std::ostream& out);

}  // namespace judgeaudit
