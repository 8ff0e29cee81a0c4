#include "judgeaudit/runner.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <sstream>
#include <thread>

namespace judgeaudit {

std::string Condition::label() const {
  if (techniques.empty()) return std::string(kOriginalLabel);
  std::vector<std::string> parts;
  for (Technique t : techniques) parts.push_back(technique_label(t));
  return join(parts, " + ");
}

std::string Condition::key() const {
  return label() + "\x1f" + prompt_variant_name(variant) + "\x1f" + placement_name(placement);
}

json Condition::to_json() const {
  json node;
  json names = json::array();
  for (Technique t : techniques) names.push_back(technique_name(t));
  node["techniques"] = names;
  node["variant"] = prompt_variant_name(variant);
  node["placement"] = placement_name(placement);
  return node;
}

Condition Condition::from_json(const json& node, const std::string& where) {
  Condition condition;
  if (node.contains("techniques")) {
    for (const auto& name : node["techniques"]) {
      condition.techniques.push_back(parse_technique(name.get<std::string>()));
    }
  }
  std::set<Technique> distinct(condition.techniques.begin(), condition.techniques.end());
  if (distinct.size() != condition.techniques.size()) {
    throw std::runtime_error(where + ": condition repeats a technique");
  }
  if (condition.techniques.size() > 2) {
    throw std::runtime_error(where + ": conditions carry at most two techniques");
  }
  if (node.contains("variant")) {
    condition.variant = parse_prompt_variant(node["variant"].get<std::string>());
  }
  if (node.contains("placement")) {
    condition.placement = parse_placement(node["placement"].get<std::string>());
  }
  return condition;
}

std::vector<Condition> single_conditions(const std::vector<Technique>& techniques,
                                         PromptVariant variant, Placement placement) {
  std::vector<Condition> conditions;
  conditions.push_back(Condition{{}, variant, placement});
  for (Technique t : techniques) conditions.push_back(Condition{{t}, variant, placement});
  return conditions;
}

std::vector<Condition> stacked_conditions(PromptVariant variant, Placement placement) {
  std::vector<Condition> conditions;
  conditions.push_back(Condition{{}, variant, placement});
  for (const auto& [a, b] : stacked_condition_pairs()) {
    conditions.push_back(Condition{{a, b}, variant, placement});
  }
  return conditions;
}

std::string ScoreRecord::sort_key() const {
  return judge + "\x1f" + condition.key() + "\x1f" + item_id + "\x1f" +
         std::to_string(repeat_index);
}

json ScoreRecord::to_json() const {
  json node;
  node["kind"] = "score";
  node["judge"] = judge;
  node["item_id"] = item_id;
  node["benchmark"] = benchmark_name(benchmark);
  node["techniques"] = condition.to_json()["techniques"];
  node["variant"] = prompt_variant_name(condition.variant);
  node["placement"] = placement_name(condition.placement);
  node["repeat"] = repeat_index;
  if (score) {
    node["score"] = *score;
  } else {
    node["error"] = error;
  }
  return node;
}

ScoreRecord ScoreRecord::from_json(const json& node, const std::string& where) {
  require_known_fields(node,
                       {"kind", "judge", "item_id", "benchmark", "techniques", "variant",
                        "placement", "repeat", "score", "error"},
                       where);
  ScoreRecord record;
  record.judge = node.at("judge").get<std::string>();
  record.item_id = node.at("item_id").get<std::string>();
  record.benchmark = parse_benchmark(node.at("benchmark").get<std::string>());
  record.condition = Condition::from_json(node, where);
  record.repeat_index = node.at("repeat").get<int>();
  if (node.contains("score")) record.score = node["score"].get<double>();
  if (node.contains("error")) record.error = node["error"].get<std::string>();
  if (!record.score && record.error.empty()) {
    throw std::runtime_error(where + ": record carries neither score nor error");
  }
  return record;
}

std::string pair_order_name(PairOrder o) { return o == PairOrder::AB ? "AB" : "BA"; }

std::string PairwiseRecord::sort_key() const {
  return judge + "\x1f" + condition_on_a.key() + "\x1f" + item_id + "\x1f" + pair_order_name(order);
}

json PairwiseRecord::to_json() const {
  json node;
  node["kind"] = "pairwise";
  node["judge"] = judge;
  node["item_id"] = item_id;
  node["benchmark"] = benchmark_name(benchmark);
  node["techniques"] = condition_on_a.to_json()["techniques"];
  node["variant"] = prompt_variant_name(condition_on_a.variant);
  node["placement"] = placement_name(condition_on_a.placement);
  node["order"] = pair_order_name(order);
  if (outcome) {
    node["outcome"] = choice_name(*outcome);
  } else {
    node["error"] = error;
  }
  return node;
}

PairwiseRecord PairwiseRecord::from_json(const json& node, const std::string& where) {
  require_known_fields(node,
                       {"kind", "judge", "item_id", "benchmark", "techniques", "variant",
                        "placement", "order", "outcome", "error"},
                       where);
  PairwiseRecord record;
  record.judge = node.at("judge").get<std::string>();
  record.item_id = node.at("item_id").get<std::string>();
  record.benchmark = parse_benchmark(node.at("benchmark").get<std::string>());
  record.condition_on_a = Condition::from_json(node, where);
  const std::string order = node.at("order").get<std::string>();
  if (order == "AB") record.order = PairOrder::AB;
  else if (order == "BA") record.order = PairOrder::BA;
  else throw std::runtime_error(where + ": unknown order \"" + order + "\"");
  if (node.contains("outcome")) {
    record.outcome = parse_choice_name(node["outcome"].get<std::string>());
  }
  if (node.contains("error")) record.error = node["error"].get<std::string>();
  return record;
}

namespace {

std::vector<std::pair<Technique, std::string>> cues_for(const Condition& condition,
                                                        const std::string& item_id,
                                                        const AuditContext& ctx) {
  std::vector<std::pair<Technique, std::string>> cues;
  for (Technique t : condition.techniques) {
    cues.emplace_back(t, select_template(*ctx.bank, t, item_id, ctx.policy));
  }
  return cues;
}

JudgeResponse run_trial(Judge& judge, const PromptBundle& bundle, TaskKind kind, int repeat,
                        const AuditContext& ctx) {
  if (ctx.cache != nullptr) {
    return cached_evaluate(judge, bundle, kind, *ctx.cache, repeat, ctx.rubric);
  }
  return judge.evaluate(bundle, kind, repeat, ctx.rubric);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each slot owns its
/// result, so completion order cannot affect the output.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

void write_plan(const std::filesystem::path& path, const std::vector<json>& trials) {
  if (path.empty()) return;
  std::ostringstream out;
  for (const auto& trial : trials) out << trial.dump() << "\n";
  write_text_atomic(path, out.str());
}

}  // namespace

SingleAuditResult run_single_audit(const Corpus& corpus, Judge& judge,
                                   const std::vector<Condition>& conditions,
                                   const AuditContext& ctx) {
  if (conditions.empty()) throw std::invalid_argument("run_single_audit: no conditions");
  if (ctx.bank == nullptr || ctx.prompts == nullptr) {
    throw std::invalid_argument("run_single_audit: context needs bank and prompts");
  }
  const int repeats = judge.config().effective_repeats();

  struct Trial {
    const CorpusItem* item;
    const Condition* condition;
    int repeat;
    PromptBundle bundle;
  };
  std::vector<Trial> trials;
  std::vector<json> plan;
  for (const auto& item : corpus.items) {
    for (const auto& condition : conditions) {
      const auto cues = cues_for(condition, item.problem.id, ctx);
      const PersuadedSolution persuaded = inject(item.solution, cues, condition.placement);
      const PromptBundle bundle = ctx.prompts->build_single_prompt(
          item.problem, persuaded.rendered(), condition.variant, ctx.rubric);
      for (int repeat = 0; repeat < repeats; ++repeat) {
        if (!ctx.plan_path.empty()) {
          json t;
          t["kind"] = "score";
          t["judge"] = judge.config().name;
          t["item_id"] = item.problem.id;
          t["condition"] = condition.to_json();
          t["repeat"] = repeat;
          t["key_digest"] = ResponseCache::key_digest(judge.config().name,
                                                      judge.config().model_id, bundle, repeat);
          plan.push_back(std::move(t));
        }
        trials.push_back(Trial{&item, &condition, repeat, bundle});
      }
    }
  }
  write_plan(ctx.plan_path, plan);

  const long calls_before = judge.completion_calls();
  std::vector<ScoreRecord> records(trials.size());
  std::atomic<long> cache_hits{0};
  std::atomic<long> invalid{0};
  std::atomic<bool> aborted{false};
  std::string abort_message;
  std::mutex abort_mutex;

  parallel_for(trials.size(), judge.config().max_in_flight, [&](std::size_t i) {
    if (aborted.load()) return;
    const Trial& trial = trials[i];
    ScoreRecord record;
    record.judge = judge.config().name;
    record.item_id = trial.item->problem.id;
    record.benchmark = trial.item->problem.benchmark;
    record.condition = *trial.condition;
    record.repeat_index = trial.repeat;
    const JudgeResponse response = run_trial(judge, trial.bundle, TaskKind::score, trial.repeat, ctx);
    if (response.attempt_count == 0) cache_hits.fetch_add(1);
    if (response.status == ResponseStatus::ok) {
      record.score = response.score;
    } else if (response.status == ResponseStatus::parse_error) {
      record.error = response.error;
      invalid.fetch_add(1);
    } else {
      std::lock_guard lock(abort_mutex);
      aborted.store(true);
      abort_message = "judge \"" + judge.config().name + "\" transport failure on item " +
                      record.item_id + ": " + response.error;
      return;
    }
    records[i] = std::move(record);
  });

  RunStats stats;
  stats.trials = static_cast<long>(trials.size());
  stats.completion_calls = judge.completion_calls() - calls_before;
  stats.cache_hits = cache_hits.load();
  stats.invalid_trials = invalid.load();

  if (aborted.load()) {
    std::vector<ScoreRecord> partial;
    for (auto& record : records) {
      if (!record.judge.empty()) partial.push_back(std::move(record));
    }
    std::sort(partial.begin(), partial.end(),
              [](const ScoreRecord& a, const ScoreRecord& b) { return a.sort_key() < b.sort_key(); });
    throw AuditAborted(abort_message, std::move(partial), {}, stats);
  }

  std::sort(records.begin(), records.end(),
            [](const ScoreRecord& a, const ScoreRecord& b) { return a.sort_key() < b.sort_key(); });
  return SingleAuditResult{std::move(records), stats};
}

std::vector<SolutionPair> load_pairs(const std::filesystem::path& path) {
  std::vector<SolutionPair> pairs;
  std::set<std::string> seen;
  for_each_jsonl_line(path, [&](const json& node, std::size_t line_no, std::size_t) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    require_known_fields(node, {"id", "benchmark", "question", "solution_a", "solution_b"}, where);
    SolutionPair pair;
    pair.problem.id = node.at("id").get<std::string>();
    pair.problem.benchmark = parse_benchmark(node.at("benchmark").get<std::string>());
    pair.problem.question = node.at("question").get<std::string>();
    pair.solution_a = node.at("solution_a").get<std::string>();
    pair.solution_b = node.at("solution_b").get<std::string>();
    if (pair.solution_a.empty() || pair.solution_b.empty()) {
      throw std::runtime_error(where + ": both solutions must be nonempty");
    }
    if (!seen.insert(pair.problem.id).second) {
      throw std::runtime_error(where + ": duplicate id \"" + pair.problem.id + "\"");
    }
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

PairwiseAuditResult run_pairwise_audit(const std::vector<SolutionPair>& pairs, Judge& judge,
                                       const Condition& condition_on_a, const AuditContext& ctx) {
  if (ctx.bank == nullptr || ctx.prompts == nullptr) {
    throw std::invalid_argument("run_pairwise_audit: context needs bank and prompts");
  }

  struct Trial {
    const SolutionPair* pair;
    PairOrder order;
    PromptBundle bundle;
  };
  std::vector<Trial> trials;
  std::vector<json> plan;
  for (const auto& pair : pairs) {
    const auto cues = cues_for(condition_on_a, pair.problem.id, ctx);
    CandidateSolution base{pair.problem.id, pair.solution_a, ErrorType::computational, ""};
    const std::string rendered_a = inject(base, cues, condition_on_a.placement).rendered();
    for (PairOrder order : {PairOrder::AB, PairOrder::BA}) {
      const std::string& first = order == PairOrder::AB ? rendered_a : pair.solution_b;
      const std::string& second = order == PairOrder::AB ? pair.solution_b : rendered_a;
      PromptBundle bundle = ctx.prompts->build_pairwise_prompt(pair.problem, first, second);
      if (!ctx.plan_path.empty()) {
        json t;
        t["kind"] = "pairwise";
        t["judge"] = judge.config().name;
        t["item_id"] = pair.problem.id;
        t["condition"] = condition_on_a.to_json();
        t["order"] = pair_order_name(order);
        t["key_digest"] =
            ResponseCache::key_digest(judge.config().name, judge.config().model_id, bundle, 0);
        plan.push_back(std::move(t));
      }
      trials.push_back(Trial{&pair, order, std::move(bundle)});
    }
  }
  write_plan(ctx.plan_path, plan);

  const long calls_before = judge.completion_calls();
  std::vector<PairwiseRecord> records(trials.size());
  std::atomic<long> cache_hits{0};
  std::atomic<long> invalid{0};
  std::atomic<bool> aborted{false};
  std::string abort_message;
  std::mutex abort_mutex;

  parallel_for(trials.size(), judge.config().max_in_flight, [&](std::size_t i) {
    if (aborted.load()) return;
    const Trial& trial = trials[i];
    PairwiseRecord record;
    record.judge = judge.config().name;
    record.item_id = trial.pair->problem.id;
    record.benchmark = trial.pair->problem.benchmark;
    record.condition_on_a = condition_on_a;
    record.order = trial.order;
    const JudgeResponse response = run_trial(judge, trial.bundle, TaskKind::choice, 0, ctx);
    if (response.attempt_count == 0) cache_hits.fetch_add(1);
    if (response.status == ResponseStatus::ok) {
      // Map the slot verdict back to underlying solution identity.
      Choice slot = *response.choice;
      if (trial.order == PairOrder::BA && slot != Choice::Tie) {
        slot = slot == Choice::A ? Choice::B : Choice::A;
      }
      record.outcome = slot;
    } else if (response.status == ResponseStatus::parse_error) {
      record.error = response.error;
      invalid.fetch_add(1);
    } else {
      std::lock_guard lock(abort_mutex);
      aborted.store(true);
      abort_message = "judge \"" + judge.config().name + "\" transport failure on item " +
                      record.item_id + ": " + response.error;
      return;
    }
    records[i] = std::move(record);
  });

  RunStats stats;
  stats.trials = static_cast<long>(trials.size());
  stats.completion_calls = judge.completion_calls() - calls_before;
  stats.cache_hits = cache_hits.load();
  stats.invalid_trials = invalid.load();

  if (aborted.load()) {
    std::vector<PairwiseRecord> partial;
    for (auto& record : records) {
      if (!record.judge.empty()) partial.push_back(std::move(record));
    }
    std::sort(partial.begin(), partial.end(), [](const PairwiseRecord& a, const PairwiseRecord& b) {
      return a.sort_key() < b.sort_key();
    });
    throw AuditAborted(abort_message, {}, std::move(partial), stats);
  }

  std::sort(records.begin(), records.end(), [](const PairwiseRecord& a, const PairwiseRecord& b) {
    return a.sort_key() < b.sort_key();
  });
  return PairwiseAuditResult{std::move(records), stats};
}

SingleAuditResult run_stacked_audit(const Corpus& corpus, Judge& judge, const AuditContext& ctx,
                                    PromptVariant variant, Placement placement) {
  return run_single_audit(corpus, judge, stacked_conditions(variant, placement), ctx);
}

void save_score_records(const std::filesystem::path& path,
                        const std::vector<ScoreRecord>& records) {
  std::ostringstream out;
  for (const auto& record : records) out << record.to_json().dump() << "\n";
  write_text_atomic(path, out.str());
}

void save_pairwise_records(const std::filesystem::path& path,
                           const std::vector<PairwiseRecord>& records) {
  std::ostringstream out;
  for (const auto& record : records) out << record.to_json().dump() << "\n";
  write_text_atomic(path, out.str());
}

RecordSet load_records(const std::filesystem::path& path) {
  RecordSet set;
  for_each_jsonl_line(path, [&](const json& node, std::size_t line_no, std::size_t offset) {
    const std::string where =
        path.string() + ":" + std::to_string(line_no) + " (byte offset " + std::to_string(offset) + ")";
    const std::string kind = node.value("kind", "");
    if (kind == "score") {
      set.scores.push_back(ScoreRecord::from_json(node, where));
    } else if (kind == "pairwise") {
      set.pairwise.push_back(PairwiseRecord::from_json(node, where));
    } else {
      throw std::runtime_error(where + ": unknown record kind \"" + kind + "\"");
    }
  });
  return set;
}

}  // namespace judgeaudit
