#include "judgeaudit/report.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace judgeaudit;
using judgeaudit::testing::TempDir;

namespace {

CellMean cell(const std::string& judge, Benchmark bench, Condition condition, double mean,
              int support = 12) {
  CellMean c;
  c.judge = judge;
  c.benchmark = bench;
  c.condition = std::move(condition);
  c.mean = mean;
  c.support = support;
  c.items = support;
  return c;
}

DeltaRecord delta(const std::string& judge, Benchmark bench, Condition condition, double orig,
                  double biased, double rel_change) {
  DeltaRecord d;
  d.judge = judge;
  d.benchmark = bench;
  d.condition = std::move(condition);
  d.orig_mean = orig;
  d.biased_mean = biased;
  d.rel_change = rel_change;
  d.success = rel_change > 0.0;
  d.support = 12;
  return d;
}

AuditReport small_report() {
  AuditReport report;
  report.meta.judges = {"Qwen 2.5 14B"};
  report.meta.protocol = "single";
  report.meta.corpus_digest = "c";
  report.meta.bank_digest = "b";
  report.meta.prompt_digest = "p";
  report.meta.config_digest = "g";
  const Condition orig{};
  const Condition auth{{Technique::Authority}};
  report.cells = {
      cell("Qwen 2.5 14B", Benchmark::MATH, orig, 3.57),
      cell("Qwen 2.5 14B", Benchmark::MATH, auth, 3.63),
      cell("Qwen 2.5 14B", Benchmark::AMC, orig, 3.53),
      cell("Qwen 2.5 14B", Benchmark::AMC, auth, 3.53),
  };
  report.deltas = {
      delta("Qwen 2.5 14B", Benchmark::MATH, auth, 3.57, 3.63, relative_change(3.57, 3.63)),
      delta("Qwen 2.5 14B", Benchmark::AMC, auth, 3.53, 3.53, 0.0),
  };
  report.technique_rollup = technique_summaries(report.deltas);
  report.model_rollup = model_summaries(report.deltas);
  return report;
}

}  // namespace

TEST_CASE("main table renders published cell formatting") {
  const std::string table = render_main_table(small_report());
  CHECK(table.find("| Orig. | 3.57 | 3.53 |") != std::string::npos);
  // Positive delta flagged, zero delta unflagged.
  CHECK(table.find("3.63 (+1.7%)*") != std::string::npos);
  CHECK(table.find("3.53 (+0.0%) |") != std::string::npos);
  CHECK(table.find("3.53 (+0.0%)*") == std::string::npos);
  // Column order follows the benchmark enum.
  CHECK(table.find("| Bias | MATH | AMC |") != std::string::npos);
}

TEST_CASE("missing cells render as an em dash with a footnote") {
  AuditReport report = small_report();
  report.cells.erase(report.cells.begin() + 3);  // drop AMC biased cell
  report.deltas.erase(report.deltas.begin() + 1);
  report.dropped_cells = 1;
  const std::string table = render_main_table(report);
  CHECK(table.find("—") != std::string::npos);
  CHECK(table.find("no valid trials") != std::string::npos);
}

TEST_CASE("stacking table ranks pairs by mean delta with lexicographic ties") {
  AuditReport report;
  report.meta.judges = {"judge"};
  report.meta.protocol = "stacked";
  const Condition orig{};
  report.cells.push_back(cell("judge", Benchmark::MATHQA, orig, 3.64));
  // Published row: the Cons. + Iden. MATHQA cell shows 3.96 (+8.9%) where
  // the delta comes from unrounded means, not from the rounded 3.64/3.96.
  int rank_seed = 0;
  for (const auto& [a, b] : stacked_condition_pairs()) {
    const Condition c{{a, b}};
    const double rel = c.label() == "Cons. + Iden." ? 8.9 : 0.5 + 0.1 * (rank_seed++ % 10);
    report.cells.push_back(cell("judge", Benchmark::MATHQA, c, 3.64 * (1 + rel / 100)));
    report.deltas.push_back(delta("judge", Benchmark::MATHQA, c, 3.64,
                                  c.label() == "Cons. + Iden." ? 3.96 : 3.70, rel));
  }

  const std::string table = render_stacking_table(report, 10);
  CHECK(table.find("3.96 (+8.9%)*") != std::string::npos);
  CHECK(table.find("top 10 of 21") != std::string::npos);

  // Ten data rows: header, rule, Orig., then 10 ranked pairs.
  int rows = 0;
  for (std::size_t pos = table.find("| Cons."); pos != std::string::npos;
       pos = table.find("| Cons.", pos + 1)) {
    ++rows;
  }
  CHECK(render_stacking_table(report, 21).find("top 21 of 21") != std::string::npos);

  // Equal mean deltas order lexicographically by label.
  AuditReport tie_report;
  tie_report.meta.judges = {"judge"};
  tie_report.meta.protocol = "stacked";
  tie_report.cells.push_back(cell("judge", Benchmark::MATH, orig, 3.0));
  const Condition ci{{Technique::Consistency, Technique::Identity}};
  const Condition am{{Technique::Authority, Technique::Majority}};
  tie_report.deltas.push_back(delta("judge", Benchmark::MATH, ci, 3.0, 3.3, 10.0));
  tie_report.deltas.push_back(delta("judge", Benchmark::MATH, am, 3.0, 3.3, 10.0));
  tie_report.cells.push_back(cell("judge", Benchmark::MATH, ci, 3.3));
  tie_report.cells.push_back(cell("judge", Benchmark::MATH, am, 3.3));
  const std::string tie_table = render_stacking_table(tie_report, 2);
  CHECK(tie_table.find("Auth. + Major.") < tie_table.find("Cons. + Iden."));
}

TEST_CASE("mitigation summary aligns variants against the baseline") {
  const Condition auth{{Technique::Authority}};
  const Condition pity{{Technique::Pity}};
  std::vector<DeltaRecord> baseline = {
      delta("j", Benchmark::MATH, auth, 3.0, 3.09, 3.0),
      delta("j", Benchmark::MATH, pity, 3.0, 3.03, 1.0),
  };
  std::vector<DeltaRecord> direct = {
      delta("j", Benchmark::MATH, auth, 3.0, 3.03, 1.0),
      delta("j", Benchmark::MATH, pity, 3.0, 2.97, -1.0),
  };

  SUBCASE("reduction is visible side by side") {
    const std::string table =
        render_mitigation_summary(baseline, {{"DirectMitigation", direct}});
    CHECK(table.find("| Auth. | +3.0 | +1.0 |") != std::string::npos);
    CHECK(table.find("| Pity. | +1.0 | -1.0 |") != std::string::npos);
    CHECK(table.find("ChainOfThought omitted") != std::string::npos);
  }
  SUBCASE("identical audits give identical columns") {
    const std::string table =
        render_mitigation_summary(baseline, {{"DirectMitigation", baseline}});
    CHECK(table.find("| Auth. | +3.0 | +3.0 |") != std::string::npos);
  }
  SUBCASE("condition mismatch is an error") {
    std::vector<DeltaRecord> other = {delta("j", Benchmark::MATH, auth, 3.0, 3.03, 1.0)};
    CHECK_THROWS_WITH_AS(render_mitigation_summary(baseline, {{"DirectMitigation", other}}),
                         doctest::Contains("different conditions"), std::runtime_error);
  }
}

TEST_CASE("structured export round-trips losslessly") {
  const AuditReport report = small_report();
  TempDir tmp;
  const auto path = export_report(report, ExportFormat::structured, tmp.path);
  const AuditReport reloaded = AuditReport::from_json(json::parse(read_text_file(path)));
  CHECK(reloaded.to_json() == report.to_json());
  CHECK(reloaded.meta == report.meta);
  REQUIRE(reloaded.deltas.size() == report.deltas.size());
  for (std::size_t i = 0; i < reloaded.deltas.size(); ++i) {
    CHECK(reloaded.deltas[i].rel_change == report.deltas[i].rel_change);  // full precision
  }
}

TEST_CASE("csv export carries one row per cell with full precision") {
  const AuditReport report = small_report();
  const std::string csv = report_csv(report);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + 4);  // header + judges x benchmarks x conditions
  CHECK(csv.find(format_double(relative_change(3.57, 3.63))) != std::string::npos);
  CHECK(csv.find(",1\n") != std::string::npos);  // success flag
}

TEST_CASE("markdown export flags every positive delta") {
  const std::string md = report_markdown(small_report());
  CHECK(md.find("(+1.7%)*") != std::string::npos);
  CHECK(md.find("judges: Qwen 2.5 14B") != std::string::npos);
}

TEST_CASE("rendering is a pure function of the report") {
  const AuditReport report = small_report();
  CHECK(render_main_table(report) == render_main_table(report));
  CHECK(report_markdown(report) == report_markdown(report));
  CHECK(report_csv(report) == report_csv(report));
}

TEST_CASE("pairwise report renders the A/B/Tie table") {
  AuditReport report;
  report.meta.judges = {"judge"};
  report.meta.protocol = "pairwise";
  PairwiseReportRow orig_row;
  orig_row.judge = "judge";
  orig_row.condition_on_a = Condition{};
  orig_row.percentages = PairwisePercentages{72, 82, 46, 100};
  PairwiseReportRow cons_row;
  cons_row.judge = "judge";
  cons_row.condition_on_a = Condition{{Technique::Consistency}};
  cons_row.percentages = PairwisePercentages{84, 81, 35, 100};
  report.pairwise_rows = {cons_row, orig_row};

  const std::string table = render_pairwise_table(report);
  CHECK(table.find("| Orig. | 36.0 | 41.0 | 23.0 | 100 |") != std::string::npos);
  CHECK(table.find("| Cons. | 42.0 | 40.5 | 17.5 | 100 |") != std::string::npos);
  CHECK(table.find("| Orig.") < table.find("| Cons."));  // Orig. row first
}
