#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "judgeaudit/corpus.hpp"
#include "judgeaudit/judge.hpp"
#include "judgeaudit/prompts.hpp"

namespace judgeaudit {

enum class TaskStatus { pending, generated, accepted, rejected };

struct GenerationTask {
  MathProblem problem;
  ErrorType error_type{};
  int attempts = 0;
  TaskStatus status = TaskStatus::pending;
  std::optional<CandidateSolution> result;
};

enum class Verdict { pending, accept, reject_incoherent, reject_unsafe };
std::string verdict_name(Verdict v);
Verdict parse_verdict(const std::string& name);

struct ReviewDecision {
  std::string problem_id;
  Verdict verdict = Verdict::pending;
  std::string note;
};

/// Problems-only file: corpus schema minus the solution fields.
std::vector<MathProblem> load_problems(const std::filesystem::path& path);

/// Asks the generator to solve the problem while introducing exactly the
/// requested error class, then extracts the final answer (the trailing
/// "Final answer:" line, else the last nonempty line). An empty generation
/// is retried once inside the client; a second empty reply is an error.
CandidateSolution generate_faulty(const MathProblem& problem, ErrorType error_type,
                                  Judge& generator, const PromptSet& prompts);

/// Assigns error types round-robin within each benchmark (first `target`
/// problems per benchmark in file order), so per-type counts differ by at
/// most 1.
std::vector<GenerationTask> balance_plan(const std::vector<MathProblem>& problems,
                                         const std::map<Benchmark, int>& targets);

/// Draft corpus with generation attempt counts: corpus schema plus
/// "attempts". Used for the review round-trip and the regeneration queue.
struct DraftItem {
  CorpusItem item;
  int attempts = 0;
};
std::vector<DraftItem> load_draft(const std::filesystem::path& path);
void save_draft(const std::vector<DraftItem>& draft, const std::filesystem::path& path);

/// Writes the hand-editable review file: one TSV line per item
/// (id, verdict, note), verdicts initialized to "pending".
void review_export(const std::vector<DraftItem>& draft, const std::filesystem::path& review_path);

std::vector<ReviewDecision> load_review_file(const std::filesystem::path& path);

struct ReviewImportResult {
  Corpus accepted;
  std::vector<DraftItem> regeneration_queue;  // rejected items, attempts+1
  std::vector<std::string> dropped;           // past the attempt budget
  std::vector<ReviewDecision> decisions;
};

inline constexpr int kMaxGenerationAttempts = 3;

/// Applies verdicts to a draft. Every draft item needs a non-pending
/// verdict; unknown ids are errors. Rejected items join the regeneration
/// queue with attempts+1, or are dropped once past the attempt budget.
/// Importing the same file twice yields the same result.
ReviewImportResult review_import(const std::vector<DraftItem>& draft,
                                 const std::filesystem::path& review_path,
                                 int max_attempts = kMaxGenerationAttempts);

}  // namespace judgeaudit
