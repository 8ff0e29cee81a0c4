#include "judgeaudit/audit.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ostream>
#include <set>
#include <sstream>

namespace judgeaudit {

namespace fs = std::filesystem;

json RunConfig::to_json() const {
  json node;
  node["protocol"] = protocol;
  node["corpus"] = corpus_path.string();
  node["pairs"] = pairs_path.string();
  json judges_node = json::array();
  for (const auto& j : judges) {
    json jn;
    jn["name"] = j.name;
    jn["backend"] = j.backend == JudgeConfig::Backend::remote ? "remote" : "mock";
    jn["model_id"] = j.model_id;
    jn["temperature"] = j.temperature;
    jn["deterministic"] = j.deterministic;
    jn["repeats"] = j.effective_repeats();
    jn["max_in_flight"] = j.max_in_flight;
    if (j.backend == JudgeConfig::Backend::remote) {
      jn["endpoint"] = j.endpoint;
      jn["url_path"] = j.url_path;
      jn["api_key_env"] = j.api_key_env;
    } else {
      jn["mock"] = mock_spec_to_json(j.mock);
    }
    judges_node.push_back(std::move(jn));
  }
  node["judges"] = judges_node;
  json technique_names = json::array();
  for (Technique t : techniques) technique_names.push_back(technique_name(t));
  node["techniques"] = technique_names;
  node["variant"] = prompt_variant_name(variant);
  node["placement"] = placement_name(placement);
  node["template_policy"] = policy == TemplatePolicy::hashed ? "hashed" : "fixed_first";
  node["bank"] = bank_path.string();
  node["prompts"] = prompts_path.string();
  node["seed"] = seed;
  node["rubric"] = {{"min", rubric.min}, {"max", rubric.max}, {"marker", rubric.marker}};
  return node;
}

RunConfig run_config_from_json(const json& node, const std::string& where) {
  require_known_fields(node,
                       {"protocol", "corpus", "pairs", "judges", "techniques", "variant",
                        "placement", "template_policy", "bank", "prompts", "cache_dir", "out_dir",
                        "seed", "rubric"},
                       where);
  RunConfig config;
  if (node.contains("protocol")) config.protocol = node["protocol"].get<std::string>();
  if (node.contains("corpus")) config.corpus_path = node["corpus"].get<std::string>();
  if (node.contains("pairs")) config.pairs_path = node["pairs"].get<std::string>();
  if (node.contains("judges")) {
    config.judges.clear();
    int i = 0;
    for (const auto& jn : node["judges"]) {
      const std::string jwhere = where + ":judges[" + std::to_string(i++) + "]";
      if (jn.is_string()) {
        config.judges.push_back(load_judge_config(jn.get<std::string>()));
      } else {
        config.judges.push_back(judge_config_from_json(jn, jwhere));
      }
    }
  }
  if (node.contains("techniques")) {
    config.techniques.clear();
    for (const auto& name : node["techniques"]) {
      config.techniques.push_back(parse_technique(name.get<std::string>()));
    }
  }
  if (node.contains("variant")) config.variant = parse_prompt_variant(node["variant"].get<std::string>());
  if (node.contains("placement")) config.placement = parse_placement(node["placement"].get<std::string>());
  if (node.contains("template_policy")) {
    const std::string p = node["template_policy"].get<std::string>();
    if (p == "hashed") config.policy = TemplatePolicy::hashed;
    else if (p == "fixed_first") config.policy = TemplatePolicy::fixed_first;
    else throw std::runtime_error(where + ": unknown template_policy \"" + p + "\"");
  }
  if (node.contains("bank")) config.bank_path = node["bank"].get<std::string>();
  if (node.contains("prompts")) config.prompts_path = node["prompts"].get<std::string>();
  if (node.contains("cache_dir")) config.cache_dir = node["cache_dir"].get<std::string>();
  if (node.contains("out_dir")) config.out_dir = node["out_dir"].get<std::string>();
  if (node.contains("seed")) config.seed = node["seed"].get<std::uint64_t>();
  if (node.contains("rubric")) {
    const json& r = node["rubric"];
    require_known_fields(r, {"min", "max", "marker"}, where + ":rubric");
    if (r.contains("min")) config.rubric.min = r["min"].get<double>();
    if (r.contains("max")) config.rubric.max = r["max"].get<double>();
    if (r.contains("marker")) config.rubric.marker = r["marker"].get<std::string>();
  }
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  json parsed;
  try {
    parsed = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": malformed config: " + e.what());
  }
  return run_config_from_json(parsed, path.string());
}

std::vector<std::string> validate_run_config(const RunConfig& config) {
  std::vector<std::string> problems;
  if (config.protocol != "single" && config.protocol != "pairwise" &&
      config.protocol != "stacked") {
    problems.push_back("unknown protocol \"" + config.protocol + "\"");
  }
  if (config.protocol == "pairwise") {
    if (config.pairs_path.empty()) {
      problems.push_back("pairwise protocol needs a pairs file");
    } else if (!fs::exists(config.pairs_path)) {
      problems.push_back("pairs file does not exist: " + config.pairs_path.string());
    }
  } else {
    if (config.corpus_path.empty()) {
      problems.push_back("protocol \"" + config.protocol + "\" needs a corpus file");
    } else if (!fs::exists(config.corpus_path)) {
      problems.push_back("corpus file does not exist: " + config.corpus_path.string());
    }
  }
  if (config.judges.empty()) problems.push_back("at least one judge is required");
  std::set<std::string> names;
  for (const auto& judge : config.judges) {
    if (!names.insert(judge.name).second) {
      problems.push_back("duplicate judge name \"" + judge.name + "\"");
    }
  }
  if (!config.bank_path.empty() && !fs::exists(config.bank_path)) {
    problems.push_back("bank file does not exist: " + config.bank_path.string());
  }
  if (!config.prompts_path.empty() && !fs::exists(config.prompts_path)) {
    problems.push_back("prompt file does not exist: " + config.prompts_path.string());
  }
  if (config.rubric.min >= config.rubric.max) {
    problems.push_back("rubric min must be below max");
  }
  std::set<Technique> distinct(config.techniques.begin(), config.techniques.end());
  if (distinct.size() != config.techniques.size()) {
    problems.push_back("technique selection repeats an entry");
  }
  return problems;
}

namespace {

std::string sanitize_for_filename(const std::string& name) {
  std::string out;
  for (char c : name) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  return out;
}

/// Mock judges resolve items by question text; for the pairwise protocol
/// the lookup corpus is synthesized from the pairs file.
Corpus corpus_from_pairs(const std::vector<SolutionPair>& pairs) {
  Corpus corpus;
  for (const auto& pair : pairs) {
    CorpusItem item;
    item.problem = pair.problem;
    item.solution = CandidateSolution{pair.problem.id, pair.solution_a, ErrorType::computational,
                                      ""};
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

}  // namespace

AuditOutcome run_audit(const RunConfig& config) {
  const auto problems = validate_run_config(config);
  if (!problems.empty()) {
    throw std::runtime_error("invalid configuration:\n  - " + join(problems, "\n  - "));
  }

  auto bank = std::make_shared<TemplateBank>(
      config.bank_path.empty() ? builtin_bank() : load_bank_with_overrides(config.bank_path));
  auto prompts = std::make_shared<PromptSet>(
      config.prompts_path.empty() ? default_prompts() : load_prompts(config.prompts_path));

  const bool pairwise = config.protocol == "pairwise";
  std::vector<SolutionPair> pairs;
  auto corpus = std::make_shared<Corpus>();
  std::string corpus_digest;
  if (pairwise) {
    pairs = load_pairs(config.pairs_path);
    *corpus = corpus_from_pairs(pairs);
    corpus_digest = sha256_file(config.pairs_path);
  } else {
    *corpus = load_corpus(config.corpus_path);
    corpus_digest = sha256_file(config.corpus_path);
  }

  fs::create_directories(config.out_dir);
  std::optional<ResponseCache> cache;
  if (!config.cache_dir.empty()) cache.emplace(config.cache_dir);

  ReportMeta meta;
  for (const auto& judge : config.judges) meta.judges.push_back(judge.name);
  meta.protocol = config.protocol;
  meta.corpus_digest = corpus_digest;
  meta.bank_digest = bank->digest();
  meta.prompt_digest = prompts->digest();
  meta.config_digest = sha256_hex(config.to_json().dump());
  meta.seed = config.seed;

  // The manifest pins the run before any trial executes.
  json manifest;
  manifest["config_digest"] = meta.config_digest;
  manifest["corpus_digest"] = meta.corpus_digest;
  manifest["bank_digest"] = meta.bank_digest;
  manifest["prompt_digest"] = meta.prompt_digest;
  manifest["seed"] = config.seed;
  manifest["protocol"] = config.protocol;
  json manifest_judges = json::array();
  for (const auto& judge : config.judges) {
    manifest_judges.push_back(json{{"name", judge.name},
                                   {"model_id", judge.model_id},
                                   {"repeats", judge.effective_repeats()}});
  }
  manifest["judges"] = manifest_judges;
  manifest["started_at_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  const fs::path manifest_path = config.out_dir / "manifest.json";
  write_text_atomic(manifest_path, manifest.dump(2) + "\n");

  AuditOutcome outcome;
  outcome.manifest_path = manifest_path;
  outcome.records_path = config.out_dir / "records.jsonl";

  std::vector<ScoreRecord> all_scores;
  std::vector<PairwiseRecord> all_pairwise;

  auto judge_for = [&](const JudgeConfig& jc) {
    JudgeConfig wired = jc;
    // Noise seeds derive from the run seed unless pinned in the judge config.
    if (wired.backend == JudgeConfig::Backend::mock && !wired.mock.noise_seed &&
        wired.mock.noise_amplitude > 0.0) {
      wired.mock.noise_seed = derive_seed(config.seed, "mock_noise/" + wired.name);
    }
    return Judge::make(wired, corpus, bank, prompts);
  };

  try {
    for (const auto& judge_config : config.judges) {
      auto judge = judge_for(judge_config);
      AuditContext ctx;
      ctx.bank = bank.get();
      ctx.prompts = prompts.get();
      ctx.policy = config.policy;
      ctx.rubric = config.rubric;
      ctx.cache = cache ? &*cache : nullptr;
      ctx.plan_path =
          config.out_dir / ("plan-" + sanitize_for_filename(judge_config.name) + ".jsonl");

      if (pairwise) {
        for (const auto& condition :
             single_conditions(config.techniques, config.variant, config.placement)) {
          ctx.plan_path = config.out_dir / ("plan-" + sanitize_for_filename(judge_config.name) +
                                            "-" + sanitize_for_filename(condition.label()) +
                                            ".jsonl");
          auto result = run_pairwise_audit(pairs, *judge, condition, ctx);
          all_pairwise.insert(all_pairwise.end(), result.records.begin(), result.records.end());
          outcome.stats.trials += result.stats.trials;
          outcome.stats.completion_calls += result.stats.completion_calls;
          outcome.stats.cache_hits += result.stats.cache_hits;
          outcome.stats.invalid_trials += result.stats.invalid_trials;
        }
      } else {
        const auto conditions =
            config.protocol == "stacked"
                ? stacked_conditions(config.variant, config.placement)
                : single_conditions(config.techniques, config.variant, config.placement);
        auto result = run_single_audit(*corpus, *judge, conditions, ctx);
        all_scores.insert(all_scores.end(), result.records.begin(), result.records.end());
        outcome.stats.trials += result.stats.trials;
        outcome.stats.completion_calls += result.stats.completion_calls;
        outcome.stats.cache_hits += result.stats.cache_hits;
        outcome.stats.invalid_trials += result.stats.invalid_trials;
      }
    }
  } catch (AuditAborted& aborted) {
    // Persist whatever completed before rethrowing.
    all_scores.insert(all_scores.end(), aborted.partial_records.begin(),
                      aborted.partial_records.end());
    all_pairwise.insert(all_pairwise.end(), aborted.partial_pairwise_records.begin(),
                        aborted.partial_pairwise_records.end());
    std::sort(all_scores.begin(), all_scores.end(),
              [](const ScoreRecord& a, const ScoreRecord& b) { return a.sort_key() < b.sort_key(); });
    std::sort(all_pairwise.begin(), all_pairwise.end(),
              [](const PairwiseRecord& a, const PairwiseRecord& b) {
                return a.sort_key() < b.sort_key();
              });
    std::ostringstream out;
    for (const auto& record : all_scores) out << record.to_json().dump() << "\n";
    for (const auto& record : all_pairwise) out << record.to_json().dump() << "\n";
    write_text_atomic(outcome.records_path, out.str());
    throw;
  }

  std::sort(all_scores.begin(), all_scores.end(),
            [](const ScoreRecord& a, const ScoreRecord& b) { return a.sort_key() < b.sort_key(); });
  std::sort(all_pairwise.begin(), all_pairwise.end(),
            [](const PairwiseRecord& a, const PairwiseRecord& b) {
              return a.sort_key() < b.sort_key();
            });

  std::ostringstream records_out;
  for (const auto& record : all_scores) records_out << record.to_json().dump() << "\n";
  for (const auto& record : all_pairwise) records_out << record.to_json().dump() << "\n";
  write_text_atomic(outcome.records_path, records_out.str());

  outcome.report = pairwise ? build_pairwise_report(meta, all_pairwise)
                            : build_report(meta, all_scores);
  for (ExportFormat format :
       {ExportFormat::markdown, ExportFormat::csv, ExportFormat::structured}) {
    outcome.report_paths.push_back(export_report(outcome.report, format, config.out_dir));
  }
  outcome.exit_code = outcome.stats.invalid_trials > 0 ? 2 : 0;
  return outcome;
}

AuditReport report_from_records(const fs::path& records_path, ReportMeta meta) {
  RecordSet set = load_records(records_path);
  if (!set.pairwise.empty() && set.scores.empty()) {
    if (meta.protocol.empty()) meta.protocol = "pairwise";
    return build_pairwise_report(std::move(meta), set.pairwise);
  }
  if (meta.protocol.empty()) meta.protocol = "single";
  return build_report(std::move(meta), set.scores);
}

int fixture_check(const fs::path& fixture_path, std::ostream& out) {
  const auto cells = load_fixture(fixture_path);
  const FixtureCheckResult result = check_reference_fixture(cells);
  for (const auto& line : result.lines) {
    out << (line.pass ? "PASS" : "FAIL") << "  " << line.name << ": " << line.detail << "\n";
  }
  out << (result.all_pass ? "all checks passed" : "some checks FAILED") << " ("
      << result.lines.size() << " checks, " << cells.size() << " fixture cells)\n";
  return result.all_pass ? 0 : 1;
}

}  // namespace judgeaudit
