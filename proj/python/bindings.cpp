#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "judgeaudit/audit.hpp"
#include "judgeaudit/datagen.hpp"

namespace py = pybind11;
using namespace judgeaudit;

namespace {

TemplatePolicy policy_from_name(const std::string& name) {
  if (name == "hashed") return TemplatePolicy::hashed;
  if (name == "fixed_first") return TemplatePolicy::fixed_first;
  throw std::runtime_error("unknown template policy \"" + name + "\"");
}

std::vector<std::pair<Technique, std::string>> cues_from_py(
    const std::vector<std::pair<std::string, std::string>>& cues) {
  std::vector<std::pair<Technique, std::string>> out;
  for (const auto& [name, cue] : cues) out.emplace_back(parse_technique(name), cue);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Persuasion-bias audit harness for LLM judges (C++ core)";

  py::class_<MathProblem>(m, "MathProblem")
      .def(py::init([](const std::string& id, const std::string& benchmark,
                       const std::string& question, std::optional<std::string> reference_answer) {
             MathProblem p;
             p.id = id;
             p.benchmark = parse_benchmark(benchmark);
             p.question = question;
             p.reference_answer = std::move(reference_answer);
             return p;
           }),
           py::arg("id"), py::arg("benchmark"), py::arg("question"),
           py::arg("reference_answer") = std::nullopt)
      .def_readonly("id", &MathProblem::id)
      .def_property_readonly(
          "benchmark", [](const MathProblem& p) { return benchmark_name(p.benchmark); })
      .def_readonly("question", &MathProblem::question)
      .def_readonly("reference_answer", &MathProblem::reference_answer);

  py::class_<CandidateSolution>(m, "CandidateSolution")
      .def(py::init([](const std::string& problem_id, const std::string& text,
                       const std::string& error_type, const std::string& final_answer) {
             CandidateSolution s;
             s.problem_id = problem_id;
             s.text = text;
             s.error_type = parse_error_type(error_type);
             s.final_answer = final_answer;
             return s;
           }),
           py::arg("problem_id"), py::arg("text"), py::arg("error_type"),
           py::arg("final_answer") = "")
      .def_readonly("problem_id", &CandidateSolution::problem_id)
      .def_readonly("text", &CandidateSolution::text)
      .def_property_readonly(
          "error_type", [](const CandidateSolution& s) { return error_type_name(s.error_type); })
      .def_readonly("final_answer", &CandidateSolution::final_answer);

  py::class_<CorpusItem>(m, "CorpusItem")
      .def_readonly("problem", &CorpusItem::problem)
      .def_readonly("solution", &CorpusItem::solution);

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("items", &Corpus::items)
      .def("__len__", &Corpus::size)
      .def("stats", [](const Corpus& corpus) {
        const CorpusStats stats = corpus_stats(corpus);
        py::dict per_benchmark, per_error_type;
        for (const auto& [b, n] : stats.per_benchmark) {
          per_benchmark[py::str(benchmark_name(b))] = n;
        }
        for (const auto& [e, n] : stats.per_error_type) {
          per_error_type[py::str(error_type_name(e))] = n;
        }
        using namespace py::literals;
        return py::dict("total"_a = stats.total, "per_benchmark"_a = per_benchmark,
                        "per_error_type"_a = per_error_type);
      });

  m.def("load_corpus", &load_corpus, py::arg("path"));
  m.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("path"));
  m.def(
      "sample_balanced",
      [](const Corpus& corpus, const std::map<std::string, int>& per_benchmark,
         std::uint64_t seed) {
        std::map<Benchmark, int> counts;
        for (const auto& [name, n] : per_benchmark) counts[parse_benchmark(name)] = n;
        return sample_balanced(corpus, counts, seed);
      },
      py::arg("corpus"), py::arg("per_benchmark"), py::arg("seed"));

  py::class_<TemplateBank>(m, "TemplateBank")
      .def("cues",
           [](const TemplateBank& bank, const std::string& technique) {
             return bank.cues(parse_technique(technique));
           })
      .def("digest", &TemplateBank::digest);
  m.def("builtin_bank", &builtin_bank);
  m.def("load_bank_with_overrides", &load_bank_with_overrides, py::arg("path"));
  m.def(
      "select_template",
      [](const TemplateBank& bank, const std::string& technique, const std::string& item_id,
         const std::string& policy) {
        return select_template(bank, parse_technique(technique), item_id,
                               policy_from_name(policy));
      },
      py::arg("bank"), py::arg("technique"), py::arg("item_id"), py::arg("policy") = "hashed");
  m.def("technique_names", [] {
    std::vector<std::string> names;
    for (Technique t : kAllTechniques) names.push_back(technique_name(t));
    return names;
  });
  m.def("technique_mode", [](const std::string& technique) {
    return mode_name(mode_of(parse_technique(technique)));
  });
  m.def("stacked_condition_pairs", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [a, b] : stacked_condition_pairs()) {
      out.emplace_back(technique_name(a), technique_name(b));
    }
    return out;
  });

  py::class_<PersuadedSolution>(m, "PersuadedSolution")
      .def("rendered", &PersuadedSolution::rendered)
      .def("strip_cues", [](const PersuadedSolution& p) { return strip_cues(p); });
  m.def(
      "inject",
      [](const CandidateSolution& solution,
         const std::vector<std::pair<std::string, std::string>>& cues,
         const std::string& placement) {
        return inject(solution, cues_from_py(cues), parse_placement(placement));
      },
      py::arg("solution"), py::arg("cues"), py::arg("placement") = "append");

  py::class_<PromptBundle>(m, "PromptBundle")
      .def_readonly("system", &PromptBundle::system)
      .def_readonly("user", &PromptBundle::user);

  py::class_<PromptSet>(m, "PromptSet")
      .def("build_single_prompt",
           [](const PromptSet& set, const MathProblem& p, const std::string& solution,
              const std::string& variant) {
             return set.build_single_prompt(p, solution, parse_prompt_variant(variant), Rubric{});
           },
           py::arg("problem"), py::arg("solution_text"), py::arg("variant") = "Baseline")
      .def("build_pairwise_prompt",
           [](const PromptSet& set, const MathProblem& p, const std::string& a,
              const std::string& b) { return set.build_pairwise_prompt(p, a, b); })
      .def("build_generation_prompt",
           [](const PromptSet& set, const MathProblem& p, const std::string& error_type) {
             return set.build_generation_prompt(p, parse_error_type(error_type));
           })
      .def("digest", &PromptSet::digest);
  m.def("default_prompts", &default_prompts);
  m.def("load_prompts", &load_prompts, py::arg("path"));
  m.attr("DIRECT_MITIGATION_SENTENCE") = std::string(kDirectMitigationSentence);

  m.def(
      "parse_score",
      [](const std::string& raw, double rubric_min, double rubric_max, const std::string& marker) {
        return parse_score(raw, Rubric{rubric_min, rubric_max, marker});
      },
      py::arg("raw"), py::arg("rubric_min") = 0.0, py::arg("rubric_max") = 5.0,
      py::arg("marker") = "Score:");
  m.def("parse_choice", [](const std::string& raw) { return choice_name(parse_choice(raw)); });
  m.def("relative_change", &relative_change, py::arg("orig"), py::arg("biased"));

  m.def(
      "pairwise_percentages_from_counts",
      [](long a_halfwins, long b_halfwins, long tie_halfwins, long pairs) {
        PairwisePercentages pct{a_halfwins, b_halfwins, tie_halfwins, pairs};
        using namespace py::literals;
        return py::dict("a_pct"_a = pct.a_pct(), "b_pct"_a = pct.b_pct(),
                        "tie_pct"_a = pct.tie_pct());
      },
      py::arg("a_halfwins"), py::arg("b_halfwins"), py::arg("tie_halfwins"), py::arg("pairs"));

  // Full pipeline: config in, outcome out, both as JSON strings (the python
  // wrapper turns them into dicts).
  m.def("run_audit_json", [](const std::string& config_json) {
    const RunConfig config = run_config_from_json(json::parse(config_json), "<python config>");
    const AuditOutcome outcome = run_audit(config);
    json node;
    node["exit_code"] = outcome.exit_code;
    node["records_path"] = outcome.records_path.string();
    node["manifest_path"] = outcome.manifest_path.string();
    json reports = json::array();
    for (const auto& path : outcome.report_paths) reports.push_back(path.string());
    node["report_paths"] = reports;
    node["stats"] = {{"trials", outcome.stats.trials},
                     {"completion_calls", outcome.stats.completion_calls},
                     {"cache_hits", outcome.stats.cache_hits},
                     {"invalid_trials", outcome.stats.invalid_trials}};
    node["report"] = outcome.report.to_json();
    return node.dump();
  });

  m.def("fixture_check_json", [](const std::filesystem::path& fixture_path) {
    const auto result = check_reference_fixture(load_fixture(fixture_path));
    json lines = json::array();
    for (const auto& line : result.lines) {
      lines.push_back({{"name", line.name}, {"pass", line.pass}, {"detail", line.detail}});
    }
    return json{{"all_pass", result.all_pass}, {"lines", lines}}.dump();
  });

  m.def("report_markdown_from_records",
        [](const std::filesystem::path& records_path) {
          ReportMeta meta;
          meta.judges = {};
          RecordSet set = load_records(records_path);
          std::set<std::string> judges;
          for (const auto& r : set.scores) judges.insert(r.judge);
          for (const auto& r : set.pairwise) judges.insert(r.judge);
          meta.judges.assign(judges.begin(), judges.end());
          return report_markdown(report_from_records(records_path, meta));
        },
        py::arg("records_path"));

  m.def("sha256_hex", [](const std::string& data) { return sha256_hex(data); });
}
