#include "judgeaudit/audit.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace judgeaudit;
using judgeaudit::testing::TempDir;

namespace {

RunConfig demo_config(const TempDir& tmp, const std::string& tag) {
  RunConfig config;
  config.corpus_path = testing::data_dir() / "fixtures/corpus_demo.jsonl";
  config.out_dir = tmp.path / tag;
  config.judges = {load_judge_config(testing::data_dir() / "fixtures/mock_judge_biased.json")};
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("validation reports every problem at once") {
  RunConfig config;
  config.protocol = "tournament";
  config.corpus_path = "/definitely/not/here.jsonl";
  config.rubric.min = 5.0;
  config.rubric.max = 0.0;
  config.techniques = {Technique::Pity, Technique::Pity};
  const auto problems = validate_run_config(config);
  REQUIRE(problems.size() >= 4);
  const std::string joined = join(problems, "\n");
  CHECK(joined.find("unknown protocol") != std::string::npos);
  CHECK(joined.find("at least one judge") != std::string::npos);
  CHECK(joined.find("rubric min") != std::string::npos);
  CHECK(joined.find("repeats an entry") != std::string::npos);
}

TEST_CASE("run config round-trips through its json form") {
  TempDir tmp;
  RunConfig config = demo_config(tmp, "rt");
  config.protocol = "stacked";
  config.variant = PromptVariant::ChainOfThought;
  config.placement = Placement::prepend;
  config.policy = TemplatePolicy::fixed_first;
  config.techniques = {Technique::Authority, Technique::Pity};
  const RunConfig back = run_config_from_json(config.to_json(), "round trip");
  CHECK(back.protocol == config.protocol);
  CHECK(back.variant == config.variant);
  CHECK(back.placement == config.placement);
  CHECK(back.policy == config.policy);
  CHECK(back.techniques == config.techniques);
  CHECK(back.judges.size() == 1);
  CHECK(back.judges[0].name == config.judges[0].name);
  CHECK(back.judges[0].mock.cue_bonus == config.judges[0].mock.cue_bonus);
  CHECK(back.seed == config.seed);
  // The digest covers semantic fields only, so two runs into different
  // directories share an identity.
  RunConfig moved = config;
  moved.out_dir = tmp.path / "elsewhere";
  moved.cache_dir = tmp.path / "cache";
  CHECK(moved.to_json().dump() == config.to_json().dump());
}

TEST_CASE("a multi-judge audit keeps records grouped and reports per judge") {
  TempDir tmp;
  RunConfig config = demo_config(tmp, "multi");
  JudgeConfig second = config.judges[0];
  second.name = "mock-neutral";
  second.model_id = "mock-neutral-v1";
  second.mock.cue_bonus.clear();
  config.judges.push_back(second);
  config.techniques = {Technique::Consistency};

  const AuditOutcome outcome = run_audit(config);
  CHECK(outcome.exit_code == 0);
  CHECK(outcome.stats.trials == 12 * 2 * 2);  // items x conditions x judges
  CHECK(outcome.report.meta.judges.size() == 2);

  int biased_successes = 0, neutral_successes = 0;
  for (const auto& delta : outcome.report.deltas) {
    if (delta.judge == "mock-biased" && delta.success) ++biased_successes;
    if (delta.judge == "mock-neutral" && delta.success) ++neutral_successes;
  }
  CHECK(biased_successes == 6);   // Consistency bonus lifts every benchmark
  CHECK(neutral_successes == 0);  // no bonus, no movement

  const std::string markdown = read_text_file(config.out_dir / "report.md");
  CHECK(markdown.find("## Judge: mock-biased") != std::string::npos);
  CHECK(markdown.find("## Judge: mock-neutral") != std::string::npos);
}

TEST_CASE("report_from_records rebuilds the audit-time aggregation") {
  TempDir tmp;
  RunConfig config = demo_config(tmp, "rebuild");
  const AuditOutcome outcome = run_audit(config);
  ReportMeta meta = outcome.report.meta;
  const AuditReport rebuilt = report_from_records(outcome.records_path, meta);
  CHECK(rebuilt.to_json() == outcome.report.to_json());
}

TEST_CASE("multi-judge pairwise reports keep per-judge rows") {
  TempDir tmp;
  RunConfig config;
  config.protocol = "pairwise";
  config.pairs_path = testing::data_dir() / "fixtures/pairs_demo.jsonl";
  config.out_dir = tmp.path / "pw";
  config.techniques = {Technique::Consistency};
  JudgeConfig biased = load_judge_config(testing::data_dir() / "fixtures/mock_judge_biased.json");
  JudgeConfig tie_judge = biased;
  tie_judge.name = "mock-tie";
  tie_judge.model_id = "mock-tie-v1";
  tie_judge.mock = MockJudgeSpec{};
  tie_judge.mock.pairwise_policy = MockJudgeSpec::PairwisePolicy::always_tie;
  config.judges = {biased, tie_judge};

  const AuditOutcome outcome = run_audit(config);
  REQUIRE(outcome.report.pairwise_rows.size() == 4);  // 2 judges x 2 conditions
  for (const auto& row : outcome.report.pairwise_rows) {
    if (row.judge == "mock-tie") CHECK(row.percentages.tie_pct() == 100.0);
    CHECK(row.percentages.pairs == 6);
  }
  // The biased judge favors the cued A set strictly more than original A.
  double orig_a = -1.0, cons_a = -1.0;
  for (const auto& row : outcome.report.pairwise_rows) {
    if (row.judge == "mock-biased" && row.condition_on_a.is_original()) {
      orig_a = row.percentages.a_pct();
    }
    if (row.judge == "mock-biased" && row.condition_on_a.label() == "Cons.") {
      cons_a = row.percentages.a_pct();
    }
  }
  CHECK(cons_a > orig_a);
}
