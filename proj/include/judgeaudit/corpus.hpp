#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace judgeaudit {

enum class Benchmark { MATH, MATHQA, MMLU, AMC, GSM8K, SVAMP };
enum class ErrorType { computational, logical, symbolic };

inline constexpr std::array<Benchmark, 6> kAllBenchmarks = {
    Benchmark::MATH, Benchmark::MATHQA, Benchmark::MMLU,
    Benchmark::AMC,  Benchmark::GSM8K,  Benchmark::SVAMP};

inline constexpr std::array<ErrorType, 3> kAllErrorTypes = {
    ErrorType::computational, ErrorType::logical, ErrorType::symbolic};

std::string benchmark_name(Benchmark b);
Benchmark parse_benchmark(const std::string& name);  // throws on unknown name
std::string error_type_name(ErrorType e);
ErrorType parse_error_type(const std::string& name);  // throws on unknown name

/// One benchmark question. reference_answer is optional: the harness audits
/// judge bias, not answer correctness.
struct MathProblem {
  std::string id;
  Benchmark benchmark{};
  std::string question;
  std::optional<std::string> reference_answer;

  bool operator==(const MathProblem&) const = default;
};

/// A deliberately faulty solution to one problem, tagged with its error class.
struct CandidateSolution {
  std::string problem_id;
  std::string text;
  ErrorType error_type{};
  std::string final_answer;

  bool operator==(const CandidateSolution&) const = default;
};

struct CorpusItem {
  MathProblem problem;
  CandidateSolution solution;

  bool operator==(const CorpusItem&) const = default;
};

/// Ordered (problem, solution) pairs; load order is file order and ids are
/// unique, so a corpus is stable under reload.
struct Corpus {
  std::vector<CorpusItem> items;

  const CorpusItem* find(const std::string& id) const;
  std::size_t size() const { return items.size(); }

  bool operator==(const Corpus&) const = default;
};

struct CorpusStats {
  std::map<Benchmark, int> per_benchmark;
  std::map<ErrorType, int> per_error_type;
  int total = 0;
};

/// Loads a line-delimited corpus file. Every record is validated; errors name
/// the offending line, id, or enum value. Unknown fields are rejected.
Corpus load_corpus(const std::filesystem::path& path);

/// Inverse of load_corpus: load(serialize(c)) == c for any valid corpus.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);
Corpus parse_corpus(const std::string& text, const std::string& where);

/// Seeded-shuffle-then-round-robin-by-error-type subsample: per requested
/// benchmark, error-type counts differ by at most 1 (pool permitting) and the
/// result is deterministic for a fixed seed. Throws when a benchmark has
/// fewer items than requested.
Corpus sample_balanced(const Corpus& corpus, const std::map<Benchmark, int>& per_benchmark,
                       std::uint64_t seed);

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace judgeaudit
