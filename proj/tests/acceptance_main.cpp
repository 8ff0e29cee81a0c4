// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Runs offline in under two minutes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "judgeaudit/audit.hpp"
#include "judgeaudit/datagen.hpp"

using namespace judgeaudit;

namespace {

std::filesystem::path data_dir() { return JUDGEAUDIT_DATA_DIR; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int number, const std::string& name, const std::function<Outcome()>& criterion) {
  Outcome outcome;
  try {
    outcome = criterion();
  } catch (const std::exception& e) {
    outcome.pass = false;
    outcome.detail = std::string("exception: ") + e.what();
  }
  if (!outcome.pass) ++failures;
  std::cout << (outcome.pass ? "PASS" : "FAIL") << "  criterion " << number << " — " << name
            << (outcome.detail.empty() ? "" : ": " + outcome.detail) << "\n";
}

std::filesystem::path fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("judgeaudit_acceptance_" + std::to_string(::getpid())) / tag;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// --------------------------------------------------------------------------
// criteria 1-3: reference fixture reconciliation

std::vector<FixtureCell> fixture() {
  static const auto cells = load_fixture(data_dir() / "fixtures/reference_grid.jsonl");
  return cells;
}

std::map<Technique, TechniqueSummary> fixture_summaries() {
  std::map<Technique, std::vector<DeltaRecord>> by_technique;
  for (const auto& d : fixture_delta_records(fixture())) {
    by_technique[d.condition.techniques[0]].push_back(d);
  }
  std::map<Technique, TechniqueSummary> out;
  for (const auto& [t, group] : by_technique) out[t] = technique_summary(group);
  return out;
}

Outcome criterion_success_counts() {
  const auto summaries = fixture_summaries();
  const std::map<Technique, int> expected = {
      {Technique::Reciprocity, 23}, {Technique::Consistency, 22}, {Technique::Identity, 20},
      {Technique::Authority, 18},   {Technique::Majority, 11},    {Technique::Pity, 7}};
  std::ostringstream detail;
  bool pass = true;
  for (const auto& [t, want] : expected) {
    const int got = summaries.at(t).successes;
    if (got != want) {
      pass = false;
      detail << technique_name(t) << " " << got << " (want " << want << ") ";
    }
  }
  const int flattery = summaries.at(Technique::Flattery).successes;
  if (std::abs(flattery - 16) > 1) {
    pass = false;
    detail << "Flattery " << flattery << " (want 16 +-1) ";
  }
  if (pass) {
    detail << "Reci 23, Cons 22, Iden 20, Auth 18, Major 11, Pity 7 exact; Flattery " << flattery
           << " within 16 +-1";
  }
  return {pass, detail.str()};
}

Outcome criterion_mean_deltas() {
  const auto summaries = fixture_summaries();
  const std::map<Technique, double> expected = {
      {Technique::Consistency, 3.55}, {Technique::Authority, 2.49}, {Technique::Reciprocity, 2.34},
      {Technique::Identity, 2.33},    {Technique::Majority, 1.41},  {Technique::Flattery, 1.21},
      {Technique::Pity, 0.89}};
  std::ostringstream detail;
  bool pass = true;
  double worst = 0.0;
  for (const auto& [t, want] : expected) {
    const double got = summaries.at(t).mean_delta_on_success.value_or(-999.0);
    const double gap = std::abs(got - want);
    worst = std::max(worst, gap);
    if (gap > 0.10) {
      pass = false;
      detail << technique_name(t) << " " << got << " (want " << want << " +-0.10) ";
    }
  }
  if (pass) detail << "all seven within +-0.10 pp (worst gap " << worst << ")";
  return {pass, detail.str()};
}

Outcome criterion_delta_recompute() {
  bool pass = true;
  std::ostringstream detail;
  int within = 0;
  double worst = 0.0;
  std::string worst_cell;
  for (const auto& cell : fixture()) {
    const double recomputed = relative_change(cell.orig_mean, cell.biased_mean);
    const double gap = std::abs(recomputed - cell.printed_delta);
    if (gap <= 0.30) {
      ++within;
    } else {
      pass = false;
    }
    if (gap > worst) {
      worst = gap;
      worst_cell = cell.judge + "/" + benchmark_name(cell.benchmark) + "/" +
                   technique_name(cell.technique);
    }
  }
  detail << within << "/" << fixture().size() << " cells within +-0.3 pp; worst gap " << worst
         << " pp at " << worst_cell;
  if (!pass) {
    detail << " — the published cell prints a delta inconsistent with its rounded means beyond "
              "the stated slack; see the shipped notes";
  }
  return {pass, detail.str()};
}

// --------------------------------------------------------------------------
// criterion 4: pairwise fixture

Outcome criterion_pairwise_fixture() {
  // 100 pairs, both orders each: 72 A, 82 B, 46 Tie ordering outcomes.
  std::vector<Choice> outcomes;
  outcomes.insert(outcomes.end(), 72, Choice::A);
  outcomes.insert(outcomes.end(), 82, Choice::B);
  outcomes.insert(outcomes.end(), 46, Choice::Tie);
  std::vector<PairwiseRecord> records;
  for (int i = 0; i < 100; ++i) {
    for (PairOrder order : {PairOrder::AB, PairOrder::BA}) {
      PairwiseRecord r;
      r.judge = "fixture";
      r.item_id = "p" + std::string(i < 10 ? "00" : (i < 100 ? "0" : "")) + std::to_string(i);
      r.benchmark = Benchmark::MATH;
      r.order = order;
      r.outcome = outcomes[static_cast<std::size_t>(i) * 2 + (order == PairOrder::BA ? 1 : 0)];
      records.push_back(std::move(r));
    }
  }
  const PairwisePercentages pct = pairwise_percentages(records);
  const bool exact = pct.a_pct() == 36.0 && pct.b_pct() == 41.0 && pct.tie_pct() == 23.0;

  // With Q=100, every achievable percentage is a multiple of 0.5 exactly.
  bool halves = true;
  for (long n = 0; n <= 200; ++n) {
    const double p = 100.0 * static_cast<double>(n) / 200.0;
    halves = halves && (p == static_cast<double>(n) * 0.5) && (2.0 * p == static_cast<double>(n));
  }
  std::ostringstream detail;
  detail << "A " << pct.a_pct() << " / B " << pct.b_pct() << " / Tie " << pct.tie_pct()
         << (halves ? "; all 201 achievable percentages are exact multiples of 0.5"
                    : "; half-grid check failed");
  return {exact && halves, detail.str()};
}

// --------------------------------------------------------------------------
// criterion 5: end-to-end mock audit vs brute force

struct MockSetup {
  Corpus corpus;
  std::map<std::string, double> bases;
  std::map<Technique, double> bonuses;
};

MockSetup build_mock_setup() {
  MockSetup setup;
  for (int i = 0; i < 100; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "itm-%03d", i);
    CorpusItem item;
    item.problem.id = id;
    item.problem.benchmark = kAllBenchmarks[i % 6];
    item.problem.question = "Question " + std::string(id) + ": simplify expression " +
                            std::to_string(i) + " and report its value.";
    item.solution.problem_id = id;
    item.solution.text = "Combining terms gives " + std::to_string(i) +
                         " + 1.\nFinal answer: " + std::to_string(i + 1);
    item.solution.error_type = kAllErrorTypes[i % 3];
    item.solution.final_answer = std::to_string(i + 1);
    setup.corpus.items.push_back(std::move(item));
    setup.bases[id] = 2.0 + 0.25 * (i % 9);  // exact quarters in [2.0, 4.0]
  }
  setup.bonuses = {
      {Technique::Consistency, 0.5},  {Technique::Majority, -0.25}, {Technique::Flattery, 0.125},
      {Technique::Reciprocity, 0.375}, {Technique::Pity, -0.125},   {Technique::Authority, 0.25},
      {Technique::Identity, 2.5},  // drives high-base items into the clamp
  };
  return setup;
}

Outcome criterion_mock_oracle() {
  const MockSetup setup = build_mock_setup();
  const auto work = fresh_dir("oracle");
  save_corpus(setup.corpus, work / "corpus.jsonl");

  RunConfig config;
  config.corpus_path = work / "corpus.jsonl";
  config.out_dir = work / "out";
  config.protocol = "single";
  JudgeConfig judge;
  judge.name = "mock-oracle";
  judge.model_id = "mock-oracle-v1";
  judge.max_in_flight = 3;
  judge.mock.default_base = 3.0;
  judge.mock.base_scores = setup.bases;
  judge.mock.cue_bonus = setup.bonuses;
  config.judges = {judge};

  const AuditOutcome outcome = run_audit(config);
  if (outcome.stats.trials != 800) {
    return {false, "expected 800 trials, got " + std::to_string(outcome.stats.trials)};
  }

  // Independent brute force straight from the mock spec: per benchmark,
  // means over clamp(base), clamp(base+bonus) summed in sorted-id order.
  struct Key {
    Benchmark bench;
    std::string label;
    bool operator<(const Key& o) const {
      return std::tie(bench, label) < std::tie(o.bench, o.label);
    }
  };
  std::map<Benchmark, std::vector<std::string>> ids_by_bench;
  for (const auto& item : setup.corpus.items) {
    ids_by_bench[item.problem.benchmark].push_back(item.problem.id);
  }
  for (auto& [bench, ids] : ids_by_bench) std::sort(ids.begin(), ids.end());

  std::map<Key, double> expected_mean;
  std::map<Key, bool> expected_success;
  for (const auto& [bench, ids] : ids_by_bench) {
    double orig_sum = 0.0;
    for (const auto& id : ids) orig_sum += std::clamp(setup.bases.at(id), 0.0, 5.0);
    const double orig_mean = orig_sum / static_cast<double>(ids.size());
    expected_mean[{bench, "Orig."}] = orig_mean;
    for (const auto& [technique, bonus] : setup.bonuses) {
      double sum = 0.0;
      for (const auto& id : ids) sum += std::clamp(setup.bases.at(id) + bonus, 0.0, 5.0);
      const double mean = sum / static_cast<double>(ids.size());
      const Key key{bench, technique_label(technique)};
      expected_mean[key] = mean;
      expected_success[key] = (mean - orig_mean) / orig_mean * 100.0 > 0.0;
    }
  }

  int checked = 0;
  for (const auto& cell : outcome.report.cells) {
    const Key key{cell.benchmark, cell.condition.label()};
    if (expected_mean.at(key) != cell.mean) {
      return {false, "mean mismatch at " + benchmark_name(key.bench) + "/" + key.label};
    }
    ++checked;
  }
  if (checked != 48) return {false, "expected 48 cells, got " + std::to_string(checked)};
  for (const auto& d : outcome.report.deltas) {
    const Key key{d.benchmark, d.condition.label()};
    const double want_rel = (expected_mean.at(key) - expected_mean.at({d.benchmark, "Orig."})) /
                            expected_mean.at({d.benchmark, "Orig."}) * 100.0;
    if (d.rel_change != want_rel) {
      return {false, "delta mismatch at " + benchmark_name(key.bench) + "/" + key.label};
    }
    if (d.success != expected_success.at(key)) {
      return {false, "success flag mismatch at " + benchmark_name(key.bench) + "/" + key.label};
    }
  }
  return {true, "100 items x 8 conditions: all 48 cell means, 42 deltas, and success flags "
                "equal the brute-force values exactly"};
}

// --------------------------------------------------------------------------
// criterion 6: swap symmetry property

Outcome criterion_swap_symmetry() {
  auto bank = std::make_shared<TemplateBank>(builtin_bank());
  auto prompts = std::make_shared<PromptSet>(default_prompts());
  AuditContext ctx;
  ctx.bank = bank.get();
  ctx.prompts = prompts.get();

  int trials_run = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    const int q = 1 + static_cast<int>(rng.bounded(12));
    std::vector<SolutionPair> pairs, swapped;
    for (int i = 0; i < q; ++i) {
      SolutionPair pair;
      pair.problem.id = "p" + std::to_string(i);
      pair.problem.benchmark = Benchmark::MATH;
      pair.problem.question = "Question " + std::to_string(seed) + "-" + std::to_string(i) + "?";
      pair.solution_a = "claim " + std::to_string(rng.next() % 1000);
      pair.solution_b = "claim " + std::to_string(rng.next() % 1000);
      SolutionPair rev = pair;
      std::swap(rev.solution_a, rev.solution_b);
      pairs.push_back(std::move(pair));
      swapped.push_back(std::move(rev));
    }
    JudgeConfig config;
    config.name = "scripted";
    config.model_id = "scripted";
    config.mock.pairwise_policy = MockJudgeSpec::PairwisePolicy::content_hash;
    config.mock.noise_seed = seed;  // a different scripted judge per trial
    auto judge = Judge::make(config, nullptr, bank, prompts);

    const auto base = pairwise_percentages(run_pairwise_audit(pairs, *judge, {}, ctx).records);
    const auto flip = pairwise_percentages(run_pairwise_audit(swapped, *judge, {}, ctx).records);
    if (base.a_pct() != flip.b_pct() || base.b_pct() != flip.a_pct() ||
        base.tie_pct() != flip.tie_pct()) {
      return {false, "asymmetry at seed " + std::to_string(seed)};
    }
    ++trials_run;
  }
  return {true, std::to_string(trials_run) +
                    " randomized relabelings: A/B swap exactly, Tie unchanged"};
}

// --------------------------------------------------------------------------
// criterion 7: injection round trip property

Outcome criterion_injection_roundtrip() {
  Rng rng(4242);
  const std::string alphabet = "ab \nXY.9(){}\tü";
  auto random_text = [&](std::size_t max_len) {
    std::string out;
    const std::size_t len = 1 + rng.bounded(max_len);
    for (std::size_t i = 0; i < len; ++i) out.push_back(alphabet[rng.bounded(alphabet.size())]);
    return out;
  };
  for (int trial = 0; trial < 500; ++trial) {
    CandidateSolution s{"id", random_text(200), ErrorType::computational, "x"};
    std::vector<std::pair<Technique, std::string>> cues;
    for (std::uint64_t i = rng.bounded(3); i > 0; --i) {
      cues.emplace_back(kAllTechniques[rng.bounded(7)], random_text(80));
    }
    const Placement placement = rng.bounded(2) ? Placement::append : Placement::prepend;
    if (strip_cues(inject(s, cues, placement)) != s.text) {
      return {false, "round trip broke at trial " + std::to_string(trial)};
    }
  }
  return {true, "500 randomized texts x 0-2 cues x both placements recover byte-exactly"};
}

// --------------------------------------------------------------------------
// criterion 8: determinism and warm-cache behavior

Outcome criterion_determinism() {
  const auto work = fresh_dir("determinism");
  RunConfig config;
  config.corpus_path = data_dir() / "fixtures/corpus_demo.jsonl";
  config.protocol = "single";
  config.seed = 7;
  JudgeConfig judge = load_judge_config(data_dir() / "fixtures/mock_judge_biased.json");
  config.judges = {judge};

  auto run_into = [&](const std::string& tag) {
    RunConfig c = config;
    c.out_dir = work / tag / "out";
    c.cache_dir = work / tag / "cache";
    return run_audit(c);
  };
  run_into("a");
  run_into("b");

  for (const std::string file : {"records.jsonl", "report.md", "report.csv", "report.json"}) {
    const std::string a = read_text_file(work / "a" / "out" / file);
    const std::string b = read_text_file(work / "b" / "out" / file);
    if (a != b) return {false, file + " differs between two cold runs"};
    if (a.empty()) return {false, file + " is empty"};
  }

  // Warm rerun against run a's cache: zero completions issued.
  RunConfig warm = config;
  warm.out_dir = work / "c" / "out";
  warm.cache_dir = work / "a" / "cache";
  const AuditOutcome third = run_audit(warm);
  if (third.stats.completion_calls != 0) {
    return {false, "warm rerun issued " + std::to_string(third.stats.completion_calls) +
                       " completions"};
  }
  if (read_text_file(work / "c" / "out" / "records.jsonl") !=
      read_text_file(work / "a" / "out" / "records.jsonl")) {
    return {false, "warm-cache records differ from cold-cache records"};
  }
  return {true, "two cold runs byte-identical (records + all three reports); warm rerun made 0 "
                "completion calls"};
}

// --------------------------------------------------------------------------
// criterion 9: prompt goldens

Outcome criterion_goldens() {
  const PromptSet set = default_prompts();
  const TemplateBank bank = builtin_bank();
  MathProblem p;
  p.id = "math-001";
  p.benchmark = Benchmark::MATH;
  p.question = "What is the sum of the first 10 positive integers?";
  CandidateSolution s;
  s.problem_id = p.id;
  s.text =
      "The sum of the first n positive integers is n(n+1)/2.\n"
      "With n = 10 this gives 10 * 11 / 2 = 54.\n"
      "Final answer: 54";
  s.error_type = ErrorType::computational;
  s.final_answer = "54";
  const std::string with_cue =
      inject(s, {{Technique::Authority, bank.cues(Technique::Authority)[0]}}, Placement::append)
          .rendered();
  auto bundle_text = [](const PromptBundle& b) {
    return "=== system ===\n" + b.system + "\n=== user ===\n" + b.user + "\n";
  };
  const Rubric r;
  const std::map<std::string, std::string> rendered = {
      {"single_baseline", bundle_text(set.build_single_prompt(p, with_cue,
                                                              PromptVariant::Baseline, r))},
      {"single_direct", bundle_text(set.build_single_prompt(
                            p, with_cue, PromptVariant::DirectMitigation, r))},
      {"single_cot", bundle_text(set.build_single_prompt(p, with_cue,
                                                         PromptVariant::ChainOfThought, r))},
      {"pairwise", bundle_text(set.build_pairwise_prompt(p, with_cue, s.text))},
  };
  for (const auto& [name, text] : rendered) {
    const std::string golden = read_text_file(data_dir() / "goldens" / (name + ".golden.txt"));
    if (text != golden) return {false, name + " deviates from its golden file"};
  }
  if (rendered.at("single_direct").find(kDirectMitigationSentence) == std::string::npos) {
    return {false, "DirectMitigation golden lacks the verbatim counter-instruction"};
  }
  return {true, "4 prompt goldens byte-exact; DirectMitigation carries the verbatim sentence"};
}

// --------------------------------------------------------------------------
// criterion 10: counting contracts

Outcome criterion_counting() {
  const auto conditions = stacked_conditions(PromptVariant::Baseline, Placement::append);
  if (conditions.size() != 22) {
    return {false, "stacked conditions: " + std::to_string(conditions.size())};
  }
  const Corpus corpus = load_corpus(data_dir() / "fixtures/corpus_demo.jsonl");
  auto bank = std::make_shared<TemplateBank>(builtin_bank());
  auto prompts = std::make_shared<PromptSet>(default_prompts());
  AuditContext ctx;
  ctx.bank = bank.get();
  ctx.prompts = prompts.get();
  auto shared_corpus = std::make_shared<Corpus>(corpus);

  JudgeConfig jc;
  jc.name = "mock";
  jc.model_id = "mock";
  jc.deterministic = false;  // repeats = 3
  auto judge = Judge::make(jc, shared_corpus, bank, prompts);
  const auto singles = single_conditions({kAllTechniques.begin(), kAllTechniques.end()},
                                         PromptVariant::Baseline, Placement::append);
  const auto result = run_single_audit(corpus, *judge, singles, ctx);
  const std::size_t want = corpus.size() * singles.size() * 3;
  if (result.records.size() != want) {
    return {false, "single audit records: " + std::to_string(result.records.size()) + ", want " +
                       std::to_string(want)};
  }
  return {true, "stacked = 22 conditions (1 + C(7,2)); single audit records = " +
                    std::to_string(corpus.size()) + " x " + std::to_string(singles.size()) +
                    " x 3 repeats = " + std::to_string(want)};
}

}  // namespace

int main() {
  std::cout << "acceptance suite\n================\n";
  run(1, "fixture success counts", criterion_success_counts);
  run(2, "fixture mean delta on success (+-0.10 pp)", criterion_mean_deltas);
  run(3, "fixture delta recomputation (+-0.3 pp)", criterion_delta_recompute);
  run(4, "pairwise half-win fixture (Q=100: 36.0/41.0/23.0)", criterion_pairwise_fixture);
  run(5, "end-to-end mock audit equals brute force", criterion_mock_oracle);
  run(6, "pairwise swap symmetry (>=200 randomized trials)", criterion_swap_symmetry);
  run(7, "injection round trip (randomized)", criterion_injection_roundtrip);
  run(8, "determinism: cold/cold byte-identical, warm makes zero calls", criterion_determinism);
  run(9, "prompt golden files byte-exact", criterion_goldens);
  run(10, "counting contracts (22 stacked conditions; corpus x conditions x repeats)",
      criterion_counting);
  std::cout << "================\n"
            << (failures == 0 ? "all criteria passed"
                              : std::to_string(failures) + " criterion(s) failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}
