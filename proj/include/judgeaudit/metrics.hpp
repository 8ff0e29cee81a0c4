#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "judgeaudit/runner.hpp"

namespace judgeaudit {

/// One biased cell against its original: rel_change = (biased-orig)/orig x
/// 100; success means strictly positive (a 0.0% change is not a success).
struct DeltaRecord {
  std::string judge;
  Benchmark benchmark{};
  Condition condition;
  double orig_mean = 0.0;
  double biased_mean = 0.0;
  double rel_change = 0.0;  // percent, full precision
  bool success = false;
  int support = 0;  // items x valid repeats behind biased_mean
};

/// (biased - orig) / orig x 100, full precision; display rounding is the
/// report module's job. orig must be positive.
double relative_change(double orig, double biased);

/// Per (judge, benchmark, condition): mean over items of the per-item mean
/// over valid repeats. A cell with no valid trials is omitted and counted in
/// dropped_cells. Iterates in sorted key order, so results are independent
/// of record order.
struct CellMean {
  std::string judge;
  Benchmark benchmark{};
  Condition condition;
  double mean = 0.0;
  int support = 0;  // valid trials behind the mean
  int items = 0;
};
struct CellAggregate {
  std::vector<CellMean> cells;
  int dropped_cells = 0;  // cells with zero valid trials
};
CellAggregate aggregate_cells(const std::vector<ScoreRecord>& records);

/// Pairs every non-original cell with the original cell of the same
/// (judge, benchmark, variant, placement). Throws when an original is
/// missing or its mean is zero.
std::vector<DeltaRecord> delta_records(const std::vector<ScoreRecord>& records);
std::vector<DeltaRecord> delta_records(const CellAggregate& aggregate);

struct TechniqueSummary {
  std::string condition_label;
  int cases = 0;
  int successes = 0;
  double success_rate = 0.0;
  std::optional<double> mean_delta_on_success;  // absent when no cell succeeded
};

/// Summary over all records of one condition label. Throws on an empty set
/// or mixed labels.
TechniqueSummary technique_summary(const std::vector<DeltaRecord>& records);

/// One summary per condition label present, label-sorted.
std::vector<TechniqueSummary> technique_summaries(const std::vector<DeltaRecord>& records);

struct ModelSummary {
  std::string judge;
  int cases = 0;  // benchmarks x techniques actually audited
  int successes = 0;
  std::optional<double> mean_delta_on_success;
};

ModelSummary model_summary(const std::vector<DeltaRecord>& records);  // one judge's records
std::vector<ModelSummary> model_summaries(const std::vector<DeltaRecord>& records);

/// Order-averaged pairwise outcome shares. Counts are kept in exact integer
/// half-wins (one per ordering record), so A+B+Tie is 2Q by construction
/// and the percentage identity A%+B%+Tie% = 100 holds exactly in rational
/// form; with Q=100 every achievable percentage is a multiple of 0.5.
struct PairwisePercentages {
  long a_halfwins = 0;
  long b_halfwins = 0;
  long tie_halfwins = 0;
  long pairs = 0;

  double a_pct() const;
  double b_pct() const;
  double tie_pct() const;
};

/// Requires both ordering records per (judge, item, condition), all valid.
/// Use valid_pairs() first when invalid trials may be present.
PairwisePercentages pairwise_percentages(const std::vector<PairwiseRecord>& records);

/// Drops pairs with any invalid ordering record; reports how many were
/// dropped.
struct ValidPairFilter {
  std::vector<PairwiseRecord> records;
  int dropped_pairs = 0;
};
ValidPairFilter valid_pairs(const std::vector<PairwiseRecord>& records);

// ---------------------------------------------------------------------------
// Reference fixture: transcribed published per-cell results
// (judge, benchmark, technique, orig_mean, biased_mean, printed_delta).

struct FixtureCell {
  std::string judge;
  Benchmark benchmark{};
  Technique technique{};
  double orig_mean = 0.0;
  double biased_mean = 0.0;
  double printed_delta = 0.0;  // percent, as printed (sign carries success)
};

std::vector<FixtureCell> load_fixture(const std::filesystem::path& path);

/// Fixture cells as DeltaRecords: rel_change is the printed delta.
std::vector<DeltaRecord> fixture_delta_records(const std::vector<FixtureCell>& cells);

/// The published aggregate values the shipped fixture must reproduce.
struct ReferenceExpectations {
  std::map<Technique, int> success_counts;       // exact, except Flattery
  int flattery_expected = 16;                    // +-1 tolerated (printed-table hand count is 17)
  std::map<Technique, double> mean_delta_on_success;  // percent
  double mean_delta_tolerance = 0.10;            // percentage points
  double recompute_tolerance = 0.30;             // printed vs recomputed delta
};
ReferenceExpectations reference_expectations();

struct FixtureCheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};
struct FixtureCheckResult {
  std::vector<FixtureCheckLine> lines;
  bool all_pass = true;
};

/// Recomputes per-technique success counts and mean deltas from the fixture
/// and compares them (and every cell's recomputed delta) against the
/// reference expectations.
FixtureCheckResult check_reference_fixture(const std::vector<FixtureCell>& cells);

}  // namespace judgeaudit
