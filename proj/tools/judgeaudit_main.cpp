#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "judgeaudit/audit.hpp"
#include "judgeaudit/datagen.hpp"

namespace fs = std::filesystem;
using namespace judgeaudit;

namespace {

std::map<Benchmark, int> parse_count_map(const std::string& spec) {
  // "MATH=90,AMC=40"
  std::map<Benchmark, int> counts;
  std::size_t start = 0;
  while (start < spec.size()) {
    std::size_t comma = spec.find(',', start);
    const std::string part =
        spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const std::size_t eq = part.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("expected BENCHMARK=COUNT, got \"" + part + "\"");
    }
    counts[parse_benchmark(trim(part.substr(0, eq)))] = std::stoi(part.substr(eq + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return counts;
}

std::vector<Technique> parse_technique_list(const std::vector<std::string>& names) {
  std::vector<Technique> out;
  for (const auto& name : names) out.push_back(parse_technique(name));
  return out;
}

void print_stats(const CorpusStats& stats, std::ostream& out) {
  out << "items: " << stats.total << "\n";
  out << "per benchmark:";
  for (const auto& [bench, count] : stats.per_benchmark) {
    out << " " << benchmark_name(bench) << "=" << count;
  }
  out << "\nper error type:";
  for (const auto& [type, count] : stats.per_error_type) {
    out << " " << error_type_name(type) << "=" << count;
  }
  out << "\n";
}

int cmd_ingest(const std::string& corpus_path, const std::string& sample_spec,
               std::uint64_t seed, const std::string& out_path) {
  Corpus corpus = load_corpus(corpus_path);
  std::cout << "loaded " << corpus.size() << " records from " << corpus_path << "\n";
  print_stats(corpus_stats(corpus), std::cout);
  if (!sample_spec.empty()) {
    Corpus sampled = sample_balanced(corpus, parse_count_map(sample_spec), seed);
    std::cout << "\nbalanced sample (seed " << seed << "):\n";
    print_stats(corpus_stats(sampled), std::cout);
    if (!out_path.empty()) {
      save_corpus(sampled, out_path);
      std::cout << "wrote " << out_path << "\n";
    }
  } else if (!out_path.empty()) {
    save_corpus(corpus, out_path);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_audit(RunConfig config) {
  try {
    AuditOutcome outcome = run_audit(config);
    std::cout << "records: " << outcome.records_path.string() << "\n";
    for (const auto& path : outcome.report_paths) {
      std::cout << "report:  " << path.string() << "\n";
    }
    std::cout << "trials " << outcome.stats.trials << ", completions "
              << outcome.stats.completion_calls << ", cache hits " << outcome.stats.cache_hits
              << ", invalid " << outcome.stats.invalid_trials << "\n";
    if (outcome.exit_code == 2) {
      std::cout << "audit finished with invalid trials; affected cells are flagged in the report\n";
    }
    return outcome.exit_code;
  } catch (const AuditAborted& aborted) {
    std::cerr << "audit aborted: " << aborted.what() << "\n"
              << "partial records persisted under " << config.out_dir.string() << "\n";
    return 1;
  }
}

int cmd_report(const std::string& records_path, const std::string& format,
               const std::string& out_dir,
               const std::vector<std::pair<std::string, std::string>>& mitigation_records) {
  ReportMeta meta;
  meta.config_digest = "(rebuilt from records)";
  meta.corpus_digest = "(rebuilt from records)";
  meta.bank_digest = "(rebuilt from records)";
  meta.prompt_digest = "(rebuilt from records)";
  RecordSet set = load_records(records_path);
  std::set<std::string> judges;
  for (const auto& r : set.scores) judges.insert(r.judge);
  for (const auto& r : set.pairwise) judges.insert(r.judge);
  meta.judges.assign(judges.begin(), judges.end());
  AuditReport report = report_from_records(records_path, meta);
  const fs::path written = export_report(report, parse_export_format(format), out_dir);
  std::cout << "wrote " << written.string() << "\n";

  if (!mitigation_records.empty()) {
    std::map<std::string, std::vector<DeltaRecord>> variants;
    for (const auto& [name, path] : mitigation_records) {
      variants[name] = delta_records(load_records(path).scores);
    }
    const std::string table = render_mitigation_summary(delta_records(set.scores), variants);
    const fs::path mitigation_path = fs::path(out_dir) / "mitigation.md";
    write_text_atomic(mitigation_path, table);
    std::cout << "wrote " << mitigation_path.string() << "\n";
  }
  return 0;
}

int cmd_generate(const std::string& problems_path, const std::string& queue_path,
                 const std::string& generator_path, const std::string& targets_spec,
                 const std::string& out_path, const std::string& review_path, bool skip_review) {
  const JudgeConfig generator_config = load_judge_config(generator_path);
  auto prompts = std::make_shared<PromptSet>(default_prompts());
  auto judge = Judge::make(generator_config, nullptr, nullptr, prompts);

  std::vector<GenerationTask> tasks;
  std::vector<int> attempts;
  if (!queue_path.empty()) {
    for (const auto& d : load_draft(queue_path)) {
      GenerationTask task;
      task.problem = d.item.problem;
      task.error_type = d.item.solution.error_type;
      task.attempts = d.attempts;
      tasks.push_back(std::move(task));
    }
  } else {
    const auto problems = load_problems(problems_path);
    tasks = balance_plan(problems, parse_count_map(targets_spec));
  }

  std::vector<DraftItem> draft;
  for (auto& task : tasks) {
    CandidateSolution solution = generate_faulty(task.problem, task.error_type, *judge, *prompts);
    task.status = TaskStatus::generated;
    CorpusItem item{task.problem, std::move(solution)};
    draft.push_back(DraftItem{std::move(item), task.attempts});
  }

  if (skip_review) {
    Corpus corpus;
    for (auto& d : draft) corpus.items.push_back(std::move(d.item));
    save_corpus(corpus, out_path);
    std::cout << "wrote " << corpus.items.size() << " records to " << out_path
              << " (review skipped)\n";
    return 0;
  }
  save_draft(draft, out_path);
  review_export(draft, review_path);
  std::cout << "wrote draft " << out_path << " and review file " << review_path << "\n"
            << "fill in the verdicts, then run review-import\n";
  return 0;
}

int cmd_review_export(const std::string& draft_path, const std::string& review_path) {
  const auto draft = load_draft(draft_path);
  review_export(draft, review_path);
  std::cout << "wrote " << review_path << " (" << draft.size() << " items)\n";
  return 0;
}

int cmd_review_import(const std::string& draft_path, const std::string& review_path,
                      const std::string& corpus_out, const std::string& queue_out) {
  const auto draft = load_draft(draft_path);
  ReviewImportResult result = review_import(draft, review_path);
  save_corpus(result.accepted, corpus_out);
  std::cout << "accepted " << result.accepted.size() << " -> " << corpus_out << "\n";
  if (!result.regeneration_queue.empty()) {
    save_draft(result.regeneration_queue, queue_out);
    std::cout << "queued " << result.regeneration_queue.size() << " for regeneration -> "
              << queue_out << "\n";
  }
  for (const auto& id : result.dropped) {
    std::cout << "dropped " << id << " (attempt budget exhausted)\n";
  }
  return 0;
}

int cmd_cache(const std::string& cache_dir, bool clear) {
  ResponseCache cache(cache_dir);
  if (clear) {
    const std::size_t n = cache.count();
    cache.clear();
    std::cout << "cleared " << n << " entries from " << cache_dir << "\n";
    return 0;
  }
  const auto entries = cache.entries();
  std::cout << entries.size() << " entries in " << cache_dir << "\n";
  for (const auto& entry : entries) {
    std::cout << entry.key.substr(0, 16) << "…  " << entry.judge << "  " << entry.model_id << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persuasion-bias audit harness for LLM judges"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load, validate, and summarize a corpus file");
  std::string ingest_corpus, ingest_sample, ingest_out;
  std::uint64_t ingest_seed = 0;
  ingest->add_option("--corpus", ingest_corpus, "corpus file (JSONL)")->required();
  ingest->add_option("--sample", ingest_sample, "balanced sample, e.g. MATH=90,AMC=40");
  ingest->add_option("--seed", ingest_seed, "sampling seed");
  ingest->add_option("--out", ingest_out, "write the (sampled) corpus here");

  // audit
  auto* audit = app.add_subcommand("audit", "Run an audit protocol and write records + reports");
  std::string audit_config, audit_corpus, audit_pairs, audit_protocol, audit_variant,
      audit_placement, audit_policy, audit_bank, audit_prompts, audit_cache, audit_out;
  std::vector<std::string> audit_judges, audit_techniques;
  std::uint64_t audit_seed = 0;
  bool audit_seed_set = false;
  audit->add_option("--config", audit_config, "run config file (flags override it)");
  audit->add_option("--corpus", audit_corpus, "corpus file");
  audit->add_option("--pairs", audit_pairs, "solution pairs file (pairwise protocol)");
  audit->add_option("--judge", audit_judges, "judge config file (repeatable)");
  audit->add_option("--protocol", audit_protocol, "single | pairwise | stacked");
  audit->add_option("--technique", audit_techniques, "technique selection (repeatable)");
  audit->add_option("--variant", audit_variant, "Baseline | DirectMitigation | ChainOfThought");
  audit->add_option("--placement", audit_placement, "append | prepend");
  audit->add_option("--template-policy", audit_policy, "hashed | fixed_first");
  audit->add_option("--bank", audit_bank, "template bank override file");
  audit->add_option("--prompts", audit_prompts, "prompt definition file");
  audit->add_option("--cache-dir", audit_cache, "response cache directory");
  audit->add_option("--out-dir", audit_out, "output directory");
  audit->add_option("--seed", audit_seed, "top-level seed")->each([&](const std::string&) {
    audit_seed_set = true;
  });

  // report
  auto* report = app.add_subcommand("report", "Re-aggregate raw records into a report");
  std::string report_records, report_format = "markdown", report_out = "out";
  std::vector<std::string> report_mitigation;
  report->add_option("--records", report_records, "raw records file")->required();
  report->add_option("--format", report_format, "markdown | csv | structured");
  report->add_option("--out-dir", report_out, "output directory");
  report->add_option("--compare", report_mitigation,
                     "NAME=RECORDS with a mitigation-variant audit (repeatable)");

  // fixture-check
  auto* fixture = app.add_subcommand("fixture-check",
                                     "Recompute reference aggregates from a fixture file");
  std::string fixture_path;
  fixture->add_option("--fixture", fixture_path, "fixture file (JSONL)")->required();

  // generate
  auto* generate = app.add_subcommand("generate", "Generate faulty candidate solutions");
  std::string gen_problems, gen_queue, gen_generator, gen_targets, gen_out = "draft.jsonl",
                                                                   gen_review = "review.tsv";
  bool gen_skip_review = false;
  generate->add_option("--problems", gen_problems, "problems file (JSONL)");
  generate->add_option("--queue", gen_queue, "regeneration queue file (replaces --problems)");
  generate->add_option("--generator", gen_generator, "generator judge config file")->required();
  generate->add_option("--targets", gen_targets, "per-benchmark counts, e.g. MATH=90,AMC=40");
  generate->add_option("--out", gen_out, "draft (or corpus with --skip-review) output path");
  generate->add_option("--review-file", gen_review, "review file output path");
  generate->add_flag("--skip-review", gen_skip_review, "write an audit-ready corpus directly");

  // review-export / review-import
  auto* rexport = app.add_subcommand("review-export", "Write the review file for a draft");
  std::string rexport_draft, rexport_review = "review.tsv";
  rexport->add_option("--draft", rexport_draft, "draft file")->required();
  rexport->add_option("--review-file", rexport_review, "review file output path");

  auto* rimport = app.add_subcommand("review-import", "Apply verdicts to a draft");
  std::string rimport_draft, rimport_review, rimport_corpus = "corpus.jsonl",
                                             rimport_queue = "queue.jsonl";
  rimport->add_option("--draft", rimport_draft, "draft file")->required();
  rimport->add_option("--review-file", rimport_review, "filled-in review file")->required();
  rimport->add_option("--out", rimport_corpus, "accepted corpus output path");
  rimport->add_option("--queue", rimport_queue, "regeneration queue output path");

  // cache
  auto* cache = app.add_subcommand("cache", "Inspect or clear a response cache");
  std::string cache_dir;
  bool cache_clear = false;
  cache->add_option("--cache-dir", cache_dir, "cache directory")->required();
  cache->add_flag("--clear", cache_clear, "delete all entries");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      return cmd_ingest(ingest_corpus, ingest_sample, ingest_seed, ingest_out);
    }
    if (audit->parsed()) {
      RunConfig config;
      if (!audit_config.empty()) config = load_run_config(audit_config);
      if (!audit_corpus.empty()) config.corpus_path = audit_corpus;
      if (!audit_pairs.empty()) config.pairs_path = audit_pairs;
      for (const auto& path : audit_judges) config.judges.push_back(load_judge_config(path));
      if (!audit_protocol.empty()) config.protocol = audit_protocol;
      if (!audit_techniques.empty()) config.techniques = parse_technique_list(audit_techniques);
      if (!audit_variant.empty()) config.variant = parse_prompt_variant(audit_variant);
      if (!audit_placement.empty()) config.placement = parse_placement(audit_placement);
      if (!audit_policy.empty()) {
        config.policy =
            audit_policy == "fixed_first" ? TemplatePolicy::fixed_first : TemplatePolicy::hashed;
      }
      if (!audit_bank.empty()) config.bank_path = audit_bank;
      if (!audit_prompts.empty()) config.prompts_path = audit_prompts;
      if (!audit_cache.empty()) config.cache_dir = audit_cache;
      if (!audit_out.empty()) config.out_dir = audit_out;
      if (audit_seed_set) config.seed = audit_seed;
      return cmd_audit(std::move(config));
    }
    if (report->parsed()) {
      std::vector<std::pair<std::string, std::string>> mitigation;
      for (const auto& spec : report_mitigation) {
        const std::size_t eq = spec.find('=');
        if (eq == std::string::npos) {
          throw std::runtime_error("--compare expects NAME=RECORDS, got \"" + spec + "\"");
        }
        mitigation.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
      }
      return cmd_report(report_records, report_format, report_out, mitigation);
    }
    if (fixture->parsed()) {
      return fixture_check(fixture_path, std::cout);
    }
    if (generate->parsed()) {
      if (gen_queue.empty() && gen_problems.empty()) {
        throw std::runtime_error("generate needs --problems or --queue");
      }
      if (gen_queue.empty() && gen_targets.empty()) {
        throw std::runtime_error("generate needs --targets with --problems");
      }
      return cmd_generate(gen_problems, gen_queue, gen_generator, gen_targets, gen_out, gen_review,
                          gen_skip_review);
    }
    if (rexport->parsed()) {
      return cmd_review_export(rexport_draft, rexport_review);
    }
    if (rimport->parsed()) {
      return cmd_review_import(rimport_draft, rimport_review, rimport_corpus, rimport_queue);
    }
    if (cache->parsed()) {
      return cmd_cache(cache_dir, cache_clear);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
