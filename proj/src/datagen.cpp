#include "judgeaudit/datagen.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "judgeaudit/util.hpp"

namespace judgeaudit {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pending: return "pending";
    case Verdict::accept: return "accept";
    case Verdict::reject_incoherent: return "reject_incoherent";
    case Verdict::reject_unsafe: return "reject_unsafe";
  }
  throw std::logic_error("verdict_name: bad enum");
}

Verdict parse_verdict(const std::string& name) {
  if (name == "pending") return Verdict::pending;
  if (name == "accept") return Verdict::accept;
  if (name == "reject_incoherent") return Verdict::reject_incoherent;
  if (name == "reject_unsafe") return Verdict::reject_unsafe;
  throw std::runtime_error("unknown verdict \"" + name + "\"");
}

std::vector<MathProblem> load_problems(const std::filesystem::path& path) {
  std::vector<MathProblem> problems;
  std::set<std::string> seen;
  for_each_jsonl_line(path, [&](const json& node, std::size_t line_no, std::size_t) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    require_known_fields(node, {"id", "benchmark", "question", "reference_answer"}, where);
    MathProblem p;
    p.id = node.at("id").get<std::string>();
    p.benchmark = parse_benchmark(node.at("benchmark").get<std::string>());
    p.question = node.at("question").get<std::string>();
    if (node.contains("reference_answer")) {
      p.reference_answer = node["reference_answer"].get<std::string>();
    }
    if (p.id.empty() || p.question.empty()) {
      throw std::runtime_error(where + ": id and question must be nonempty");
    }
    if (!seen.insert(p.id).second) {
      throw std::runtime_error(where + ": duplicate id \"" + p.id + "\"");
    }
    problems.push_back(std::move(p));
  });
  return problems;
}

namespace {

std::string extract_final_answer(const std::string& text) {
  // Trailing "Final answer:" line wins; otherwise the last nonempty line.
  std::istringstream in(text);
  std::string line;
  std::string marker_value;
  std::string last_nonempty;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    last_nonempty = t;
    const std::string lower = to_lower(t);
    const std::string marker = "final answer";
    if (lower.rfind(marker, 0) == 0) {
      std::size_t pos = marker.size();
      while (pos < t.size() && (t[pos] == ':' || t[pos] == ' ' || t[pos] == '*')) ++pos;
      marker_value = trim(t.substr(pos));
    }
  }
  return marker_value.empty() ? last_nonempty : marker_value;
}

}  // namespace

CandidateSolution generate_faulty(const MathProblem& problem, ErrorType error_type,
                                  Judge& generator, const PromptSet& prompts) {
  const PromptBundle bundle = prompts.build_generation_prompt(problem, error_type);
  const JudgeResponse response = generator.evaluate(bundle, TaskKind::freeform);
  if (!response.ok()) {
    throw std::runtime_error("generation failed for " + problem.id + ": " +
                             (response.error.empty() ? "transport failure" : response.error));
  }
  CandidateSolution solution;
  solution.problem_id = problem.id;
  solution.text = response.raw_text;
  solution.error_type = error_type;  // as requested, not verified automatically
  solution.final_answer = extract_final_answer(response.raw_text);
  return solution;
}

std::vector<GenerationTask> balance_plan(const std::vector<MathProblem>& problems,
                                         const std::map<Benchmark, int>& targets) {
  std::vector<GenerationTask> tasks;
  for (const auto& [bench, target] : targets) {
    if (target <= 0) throw std::invalid_argument("balance_plan: targets must be positive");
    std::vector<const MathProblem*> pool;
    for (const auto& p : problems) {
      if (p.benchmark == bench) pool.push_back(&p);
    }
    if (static_cast<int>(pool.size()) < target) {
      throw std::runtime_error("balance_plan: benchmark " + benchmark_name(bench) + " has " +
                               std::to_string(pool.size()) + " problems, " +
                               std::to_string(target) + " requested");
    }
    for (int i = 0; i < target; ++i) {
      GenerationTask task;
      task.problem = *pool[i];
      task.error_type = kAllErrorTypes[i % kAllErrorTypes.size()];
      tasks.push_back(std::move(task));
    }
  }
  return tasks;
}

std::vector<DraftItem> load_draft(const std::filesystem::path& path) {
  std::vector<DraftItem> draft;
  std::set<std::string> seen;
  for_each_jsonl_line(path, [&](const json& node, std::size_t line_no, std::size_t) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json without_attempts = node;
    int attempts = 0;
    if (without_attempts.contains("attempts")) {
      attempts = without_attempts["attempts"].get<int>();
      without_attempts.erase("attempts");
    }
    Corpus one = parse_corpus(without_attempts.dump(), where);
    if (one.items.size() != 1) throw std::runtime_error(where + ": expected one record");
    if (!seen.insert(one.items[0].problem.id).second) {
      throw std::runtime_error(where + ": duplicate id \"" + one.items[0].problem.id + "\"");
    }
    draft.push_back(DraftItem{std::move(one.items[0]), attempts});
  });
  return draft;
}

void save_draft(const std::vector<DraftItem>& draft, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& d : draft) {
    Corpus one;
    one.items.push_back(d.item);
    std::string line = serialize_corpus(one);
    json node = json::parse(line);
    node["attempts"] = d.attempts;
    out << node.dump() << "\n";
  }
  write_text_atomic(path, out.str());
}

void review_export(const std::vector<DraftItem>& draft, const std::filesystem::path& review_path) {
  std::ostringstream out;
  out << "# id\tverdict\tnote  (verdicts: accept | reject_incoherent | reject_unsafe)\n";
  for (const auto& d : draft) {
    out << d.item.problem.id << "\tpending\t\n";
  }
  write_text_atomic(review_path, out.str());
}

std::vector<ReviewDecision> load_review_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<ReviewDecision> decisions;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::size_t tab1 = line.find('\t');
    if (tab1 == std::string::npos) {
      throw std::runtime_error(where + ": expected id<TAB>verdict[<TAB>note]");
    }
    const std::size_t tab2 = line.find('\t', tab1 + 1);
    ReviewDecision decision;
    decision.problem_id = trim(line.substr(0, tab1));
    const std::string verdict = trim(tab2 == std::string::npos
                                         ? line.substr(tab1 + 1)
                                         : line.substr(tab1 + 1, tab2 - tab1 - 1));
    try {
      decision.verdict = parse_verdict(verdict);
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    if (tab2 != std::string::npos) decision.note = trim(line.substr(tab2 + 1));
    if (!seen.insert(decision.problem_id).second) {
      throw std::runtime_error(where + ": duplicate verdict for \"" + decision.problem_id + "\"");
    }
    decisions.push_back(std::move(decision));
  }
  return decisions;
}

ReviewImportResult review_import(const std::vector<DraftItem>& draft,
                                 const std::filesystem::path& review_path, int max_attempts) {
  ReviewImportResult result;
  result.decisions = load_review_file(review_path);

  std::map<std::string, const DraftItem*> by_id;
  for (const auto& d : draft) by_id[d.item.problem.id] = &d;

  std::map<std::string, const ReviewDecision*> decided;
  for (const auto& decision : result.decisions) {
    if (!by_id.count(decision.problem_id)) {
      throw std::runtime_error("review import: unknown id \"" + decision.problem_id + "\"");
    }
    decided[decision.problem_id] = &decision;
  }
  for (const auto& d : draft) {
    auto it = decided.find(d.item.problem.id);
    if (it == decided.end() || it->second->verdict == Verdict::pending) {
      throw std::runtime_error("review import: missing verdict for \"" + d.item.problem.id + "\"");
    }
    if (it->second->verdict == Verdict::accept) {
      result.accepted.items.push_back(d.item);
    } else {
      const int next_attempts = d.attempts + 1;
      if (next_attempts >= max_attempts) {
        result.dropped.push_back(d.item.problem.id);
      } else {
        result.regeneration_queue.push_back(DraftItem{d.item, next_attempts});
      }
    }
  }
  return result;
}

}  // namespace judgeaudit
