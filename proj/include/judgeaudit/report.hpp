#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "judgeaudit/metrics.hpp"

namespace judgeaudit {

struct ReportMeta {
  std::vector<std::string> judges;
  std::string protocol;  // "single", "pairwise", or "stacked"
  std::string corpus_digest;
  std::string bank_digest;
  std::string prompt_digest;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string stacking_rank_metric = "mean relative delta across benchmarks";

  bool operator==(const ReportMeta&) const = default;
};

struct PairwiseReportRow {
  std::string judge;
  Condition condition_on_a;
  PairwisePercentages percentages;
  int dropped_pairs = 0;
};

/// Everything the renderers need, with full-precision values and support
/// counts; display rounding happens only at render time.
struct AuditReport {
  ReportMeta meta;
  std::vector<CellMean> cells;
  std::vector<DeltaRecord> deltas;
  std::vector<TechniqueSummary> technique_rollup;
  std::vector<ModelSummary> model_rollup;
  std::vector<PairwiseReportRow> pairwise_rows;
  int dropped_cells = 0;

  json to_json() const;
  static AuditReport from_json(const json& node);
};

AuditReport build_report(ReportMeta meta, const std::vector<ScoreRecord>& records);
AuditReport build_pairwise_report(ReportMeta meta, const std::vector<PairwiseRecord>& records);

/// One block per judge: rows Orig. + single-technique conditions, columns
/// benchmarks. Cell = mean to 2 decimals plus signed delta to 1 decimal,
/// "*"-flagged when the full-precision delta is positive. Cells with no
/// valid trials render as an em dash with a footnote.
std::string render_main_table(const AuditReport& report);

/// Stacked pairs ranked by mean relative delta across benchmarks
/// (descending, ties broken by pair label), top_k rows per judge.
std::string render_stacking_table(const AuditReport& report, int top_k);

/// A Win / B Win / Tie percentages per condition row.
std::string render_pairwise_table(const AuditReport& report);

/// Per technique label: the baseline delta next to each variant's delta
/// (averaged across benchmarks). Throws when a variant covers a different
/// condition set than the baseline; variants absent from the map are
/// omitted with a note.
std::string render_mitigation_summary(
    const std::vector<DeltaRecord>& baseline,
    const std::map<std::string, std::vector<DeltaRecord>>& variants);

enum class ExportFormat { markdown, csv, structured };
ExportFormat parse_export_format(const std::string& name);

/// Writes report.md / report.csv / report.json into out_dir and returns the
/// path. csv and structured exports are loss-free (full precision plus
/// support counts).
std::filesystem::path export_report(const AuditReport& report, ExportFormat format,
                                    const std::filesystem::path& out_dir);

std::string report_markdown(const AuditReport& report);
std::string report_csv(const AuditReport& report);

}  // namespace judgeaudit
