#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "judgeaudit/cache.hpp"
#include "judgeaudit/corpus.hpp"
#include "judgeaudit/judge.hpp"
#include "judgeaudit/persuasion.hpp"
#include "judgeaudit/prompts.hpp"

namespace judgeaudit {

/// What is being tested: 0-2 techniques (empty = the cue-free original),
/// a prompt variant, and a cue placement.
struct Condition {
  std::vector<Technique> techniques;
  PromptVariant variant = PromptVariant::Baseline;
  Placement placement = Placement::append;

  /// "Orig.", "Auth.", or "Cons. + Iden." style row label.
  std::string label() const;
  bool is_original() const { return techniques.empty(); }

  /// Stable composite key for sorting and grouping.
  std::string key() const;

  json to_json() const;
  static Condition from_json(const json& node, const std::string& where);

  bool operator==(const Condition&) const = default;
};

/// Original + one condition per technique.
std::vector<Condition> single_conditions(const std::vector<Technique>& techniques,
                                         PromptVariant variant, Placement placement);

/// Original + the 21 stacked technique pairs.
std::vector<Condition> stacked_conditions(PromptVariant variant, Placement placement);

struct ScoreRecord {
  std::string judge;
  std::string item_id;
  Benchmark benchmark{};
  Condition condition;
  int repeat_index = 0;
  std::optional<double> score;  // nullopt = invalid trial
  std::string error;

  bool valid() const { return score.has_value(); }
  std::string sort_key() const;
  json to_json() const;
  static ScoreRecord from_json(const json& node, const std::string& where);
};

enum class PairOrder { AB, BA };
std::string pair_order_name(PairOrder o);

struct PairwiseRecord {
  std::string judge;
  std::string item_id;
  Benchmark benchmark{};
  Condition condition_on_a;  // techniques applied to underlying solution A
  PairOrder order = PairOrder::AB;
  std::optional<Choice> outcome;  // relative to the underlying solutions
  std::string error;

  bool valid() const { return outcome.has_value(); }
  std::string sort_key() const;
  json to_json() const;
  static PairwiseRecord from_json(const json& node, const std::string& where);
};

struct RunStats {
  long trials = 0;
  long completion_calls = 0;
  long cache_hits = 0;
  long invalid_trials = 0;
};

/// Shared knobs for an audit run. cache and plan_path are optional.
struct AuditContext {
  const TemplateBank* bank = nullptr;
  const PromptSet* prompts = nullptr;
  TemplatePolicy policy = TemplatePolicy::hashed;
  Rubric rubric;
  ResponseCache* cache = nullptr;
  std::filesystem::path plan_path;  // run plan written here before execution when set
};

/// Transport failure past the retry budget aborts the audit; completed
/// records ride along so callers can persist the partial result.
struct AuditAborted : std::runtime_error {
  AuditAborted(const std::string& message, std::vector<ScoreRecord> partial_scores,
               std::vector<PairwiseRecord> partial_pairwise, RunStats stats)
      : std::runtime_error(message),
        partial_records(std::move(partial_scores)),
        partial_pairwise_records(std::move(partial_pairwise)),
        stats(stats) {}
  std::vector<ScoreRecord> partial_records;
  std::vector<PairwiseRecord> partial_pairwise_records;
  RunStats stats;
};

struct SingleAuditResult {
  std::vector<ScoreRecord> records;  // sorted by key; covers the full cross product
  RunStats stats;
};

/// corpus × conditions × repeats trials. Invalid trials are recorded, never
/// silently dropped; the record set is sorted by key so aggregation is
/// independent of execution order.
SingleAuditResult run_single_audit(const Corpus& corpus, Judge& judge,
                                   const std::vector<Condition>& conditions,
                                   const AuditContext& ctx);

struct SolutionPair {
  MathProblem problem;
  std::string solution_a;
  std::string solution_b;
};

std::vector<SolutionPair> load_pairs(const std::filesystem::path& path);

struct PairwiseAuditResult {
  std::vector<PairwiseRecord> records;
  RunStats stats;
};

/// Each pair is judged twice, once per presentation order, with the
/// condition's cues applied to solution A only. Slot verdicts are mapped
/// back to underlying solution identity before storage.
PairwiseAuditResult run_pairwise_audit(const std::vector<SolutionPair>& pairs, Judge& judge,
                                       const Condition& condition_on_a, const AuditContext& ctx);

/// Original + all 21 stacked pairs, otherwise as run_single_audit.
SingleAuditResult run_stacked_audit(const Corpus& corpus, Judge& judge, const AuditContext& ctx,
                                    PromptVariant variant = PromptVariant::Baseline,
                                    Placement placement = Placement::append);

// Raw record store: line-delimited, full key fields per record.
void save_score_records(const std::filesystem::path& path, const std::vector<ScoreRecord>& records);
void save_pairwise_records(const std::filesystem::path& path,
                           const std::vector<PairwiseRecord>& records);

struct RecordSet {
  std::vector<ScoreRecord> scores;
  std::vector<PairwiseRecord> pairwise;
};
RecordSet load_records(const std::filesystem::path& path);

}  // namespace judgeaudit
