#include "judgeaudit/corpus.hpp"

#include <map>
#include <set>

#include "doctest.h"
#include "judgeaudit/util.hpp"
#include "test_support.hpp"

using namespace judgeaudit;
using judgeaudit::testing::TempDir;

namespace {

std::string record_line(const std::string& id, const std::string& bench,
                        const std::string& error_type) {
  json j;
  j["id"] = id;
  j["benchmark"] = bench;
  j["question"] = "What is 1 + 1 for " + id + "?";
  j["solution"] = "1 + 1 = 3.\nFinal answer: 3";
  j["error_type"] = error_type;
  j["final_answer"] = "3";
  return j.dump() + "\n";
}

}  // namespace

TEST_CASE("load_corpus accepts valid records in file order") {
  TempDir tmp;
  const auto path = tmp.path / "c.jsonl";
  write_text_atomic(path, record_line("a", "MATH", "computational") +
                              record_line("b", "AMC", "logical") +
                              record_line("c", "SVAMP", "symbolic"));
  const Corpus corpus = load_corpus(path);
  REQUIRE(corpus.size() == 3);
  CHECK(corpus.items[0].problem.id == "a");
  CHECK(corpus.items[1].problem.benchmark == Benchmark::AMC);
  CHECK(corpus.items[2].solution.error_type == ErrorType::symbolic);
}

TEST_CASE("load_corpus rejects duplicates, unknown enums, malformed lines") {
  TempDir tmp;
  const auto path = tmp.path / "c.jsonl";

  write_text_atomic(path, record_line("math-001", "MATH", "computational") +
                              record_line("math-001", "MATH", "logical"));
  CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("duplicate id \"math-001\""),
                       std::runtime_error);

  write_text_atomic(path, record_line("x", "AIME", "computational"));
  CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("unknown benchmark \"AIME\""),
                       std::runtime_error);

  write_text_atomic(path, record_line("x", "MATH", "typo"));
  CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("unknown error_type"),
                       std::runtime_error);

  write_text_atomic(path, "{broken\n");
  CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("line 1"), std::runtime_error);

  json with_extra = json::parse(record_line("x", "MATH", "logical"));
  with_extra["shoe_size"] = 44;
  write_text_atomic(path, with_extra.dump() + "\n");
  CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("shoe_size"), std::runtime_error);
}

TEST_CASE("corpus round-trips through serialization") {
  const Corpus corpus = testing::synthetic_corpus(23);
  TempDir tmp;
  const auto path = tmp.path / "c.jsonl";
  save_corpus(corpus, path);
  CHECK(load_corpus(path) == corpus);
}

TEST_CASE("optional reference_answer survives the round trip") {
  Corpus corpus = testing::synthetic_corpus(2);
  corpus.items[0].problem.reference_answer = "42";
  TempDir tmp;
  save_corpus(corpus, tmp.path / "c.jsonl");
  const Corpus reloaded = load_corpus(tmp.path / "c.jsonl");
  CHECK(reloaded.items[0].problem.reference_answer == "42");
  CHECK(!reloaded.items[1].problem.reference_answer);
}

TEST_CASE("sample_balanced splits error types evenly") {
  // 120 MATH items, 40 per error type.
  Corpus corpus;
  for (int i = 0; i < 120; ++i) {
    CorpusItem item = testing::synthetic_corpus(1, "m" + std::to_string(i)).items[0];
    item.problem.benchmark = Benchmark::MATH;
    item.solution.error_type = kAllErrorTypes[i % 3];
    corpus.items.push_back(std::move(item));
  }
  const Corpus sampled = sample_balanced(corpus, {{Benchmark::MATH, 90}}, 7);
  REQUIRE(sampled.size() == 90);

  // Oracle: exhaustive tally of the output classes.
  std::map<ErrorType, int> tally;
  for (const auto& item : sampled.items) ++tally[item.solution.error_type];
  CHECK(tally[ErrorType::computational] == 30);
  CHECK(tally[ErrorType::logical] == 30);
  CHECK(tally[ErrorType::symbolic] == 30);

  const CorpusStats stats = corpus_stats(sampled);
  CHECK(stats.per_error_type.at(ErrorType::computational) == 30);
  CHECK(stats.per_error_type.at(ErrorType::logical) == 30);
  CHECK(stats.per_error_type.at(ErrorType::symbolic) == 30);
}

TEST_CASE("sample_balanced returns the whole pool when everything is requested") {
  Corpus corpus;
  for (int i = 0; i < 40; ++i) {
    CorpusItem item = testing::synthetic_corpus(1, "amc" + std::to_string(i)).items[0];
    item.problem.benchmark = Benchmark::AMC;
    item.solution.error_type = kAllErrorTypes[i % 3];
    corpus.items.push_back(std::move(item));
  }
  const Corpus sampled = sample_balanced(corpus, {{Benchmark::AMC, 40}}, 3);
  CHECK(sampled.size() == 40);
  std::set<std::string> ids;
  for (const auto& item : sampled.items) ids.insert(item.problem.id);
  CHECK(ids.size() == 40);
}

TEST_CASE("sample_balanced is deterministic and a sub-multiset of the input") {
  const Corpus corpus = testing::synthetic_corpus(60);
  const std::map<Benchmark, int> request = {{Benchmark::MATH, 6}, {Benchmark::AMC, 4}};
  const Corpus a = sample_balanced(corpus, request, 11);
  const Corpus b = sample_balanced(corpus, request, 11);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.items[i].problem.id == b.items[i].problem.id);
  }
  for (const auto& item : a.items) CHECK(corpus.find(item.problem.id) != nullptr);
  CHECK(sample_balanced(corpus, request, 12).items != a.items);
}

TEST_CASE("sample_balanced rejects requests beyond the pool") {
  const Corpus corpus = testing::synthetic_corpus(12);
  CHECK_THROWS_WITH_AS(sample_balanced(corpus, {{Benchmark::MATH, 99}}, 1),
                       doctest::Contains("99 requested"), std::runtime_error);
}

TEST_CASE("corpus_stats totals equal corpus size") {
  CHECK(corpus_stats(Corpus{}).total == 0);
  for (const auto& [bench, count] : corpus_stats(Corpus{}).per_benchmark) CHECK(count == 0);

  Corpus corpus;
  for (int i = 0; i < 140; ++i) {
    CorpusItem item = testing::synthetic_corpus(1, "s" + std::to_string(i)).items[0];
    item.problem.benchmark = i < 40 ? Benchmark::AMC : Benchmark::GSM8K;
    corpus.items.push_back(std::move(item));
  }
  const CorpusStats stats = corpus_stats(corpus);
  CHECK(stats.per_benchmark.at(Benchmark::AMC) == 40);
  CHECK(stats.per_benchmark.at(Benchmark::GSM8K) == 100);
  CHECK(stats.total == 140);
  int type_total = 0;
  for (const auto& [type, count] : stats.per_error_type) type_total += count;
  CHECK(type_total == stats.total);
}

TEST_CASE("shipped demo corpus loads and documents its own counts") {
  const Corpus corpus = load_corpus(testing::data_dir() / "fixtures/corpus_demo.jsonl");
  const CorpusStats stats = corpus_stats(corpus);
  CHECK(stats.total == 12);
  for (Benchmark b : kAllBenchmarks) CHECK(stats.per_benchmark.at(b) == 2);
  for (ErrorType e : kAllErrorTypes) CHECK(stats.per_error_type.at(e) == 4);
}
