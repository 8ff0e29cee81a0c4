#include "judgeaudit/prompts.hpp"

#include <stdexcept>

#include "judgeaudit/util.hpp"

namespace judgeaudit {

std::string prompt_variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::Baseline: return "Baseline";
    case PromptVariant::DirectMitigation: return "DirectMitigation";
    case PromptVariant::ChainOfThought: return "ChainOfThought";
  }
  throw std::logic_error("prompt_variant_name: bad enum");
}

PromptVariant parse_prompt_variant(const std::string& name) {
  if (name == "Baseline") return PromptVariant::Baseline;
  if (name == "DirectMitigation") return PromptVariant::DirectMitigation;
  if (name == "ChainOfThought") return PromptVariant::ChainOfThought;
  throw std::runtime_error("unknown prompt variant \"" + name + "\"");
}

std::string_view error_type_definition(ErrorType e) {
  switch (e) {
    case ErrorType::computational:
      return "Mistakes in arithmetic or procedural steps, despite otherwise correct reasoning.";
    case ErrorType::logical:
      return "Flawed reasoning or invalid arguments, even when calculations are performed "
             "correctly.";
    case ErrorType::symbolic:
      return "Incorrect or ambiguous use of mathematical notation that affects the validity or "
             "clarity of the solution.";
  }
  throw std::logic_error("error_type_definition: bad enum");
}

namespace {

/// Replaces every "{slot}" occurrence; counts how many were substituted.
std::string fill_slots(std::string text, const std::map<std::string, std::string>& slots) {
  for (const auto& [name, value] : slots) {
    const std::string needle = "{" + name + "}";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
      text.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return text;
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

void require_slot_once(std::string_view tmpl, std::string_view slot, const std::string& where) {
  const std::string needle = "{" + std::string(slot) + "}";
  const std::size_t n = count_occurrences(tmpl, needle);
  if (n != 1) {
    throw std::runtime_error(where + ": template must contain " + needle + " exactly once (found " +
                             std::to_string(n) + ")");
  }
}

}  // namespace

PromptBundle PromptSet::build_single_prompt(const MathProblem& p, std::string_view solution_text,
                                            PromptVariant v, const Rubric& r) const {
  if (r.min >= r.max) throw std::invalid_argument("rubric: min must be below max");
  const std::map<std::string, std::string> slots = {
      {"question", p.question},
      {"solution", std::string(solution_text)},
      {"variant_instruction", variant_instructions.at(v)},
      {"rubric_min", format_double(r.min)},
      {"rubric_max", format_double(r.max)},
  };
  return PromptBundle{fill_slots(single.system, slots), fill_slots(single.user, slots)};
}

PromptBundle PromptSet::build_pairwise_prompt(const MathProblem& p, std::string_view a,
                                              std::string_view b) const {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("pairwise prompt: both solutions must be nonempty");
  }
  const std::map<std::string, std::string> slots = {
      {"question", p.question},
      {"solution_a", std::string(a)},
      {"solution_b", std::string(b)},
  };
  return PromptBundle{fill_slots(pairwise.system, slots), fill_slots(pairwise.user, slots)};
}

PromptBundle PromptSet::build_generation_prompt(const MathProblem& p, ErrorType e) const {
  const std::map<std::string, std::string> slots = {
      {"question", p.question},
      {"error_name", error_type_name(e)},
      {"error_definition", std::string(error_type_definition(e))},
  };
  return PromptBundle{fill_slots(generation.system, slots), fill_slots(generation.user, slots)};
}

std::string PromptSet::digest() const {
  std::string buf;
  for (const auto* section : {&single, &pairwise, &generation}) {
    buf += section->system;
    buf += '\x1e';
    buf += section->user;
    buf += '\x1e';
  }
  for (const auto& [v, text] : variant_instructions) {
    buf += prompt_variant_name(v);
    buf += '\x1f';
    buf += text;
    buf += '\x1e';
  }
  return sha256_hex(buf);
}

void PromptSet::validate() const {
  if (single.system.empty() || single.user.empty() || pairwise.system.empty() ||
      pairwise.user.empty() || generation.system.empty() || generation.user.empty()) {
    throw std::runtime_error("prompt set: every section needs nonempty system and user templates");
  }
  require_slot_once(single.user, "question", "single.user");
  require_slot_once(single.user, "solution", "single.user");
  require_slot_once(single.user, "variant_instruction", "single.user");
  require_slot_once(pairwise.user, "question", "pairwise.user");
  require_slot_once(pairwise.user, "solution_a", "pairwise.user");
  require_slot_once(pairwise.user, "solution_b", "pairwise.user");
  require_slot_once(generation.user, "question", "generation.user");
  for (PromptVariant v : {PromptVariant::Baseline, PromptVariant::DirectMitigation,
                          PromptVariant::ChainOfThought}) {
    if (!variant_instructions.count(v)) {
      throw std::runtime_error("prompt set: missing variant instruction for " +
                               prompt_variant_name(v));
    }
  }
  if (variant_instructions.at(PromptVariant::DirectMitigation)
          .find(kDirectMitigationSentence) == std::string::npos) {
    throw std::runtime_error(
        "prompt set: DirectMitigation instruction must contain the verbatim sentence \"" +
        std::string(kDirectMitigationSentence) + "\"");
  }
  if (variant_instructions.at(PromptVariant::ChainOfThought).empty()) {
    throw std::runtime_error("prompt set: ChainOfThought instruction must be nonempty");
  }
}

PromptSet default_prompts() {
  PromptSet set;
  set.single.system = "You are an impartial grader of mathematical solutions.";
  set.single.user =
      "# Task\n"
      "Evaluate the candidate solution to the math problem below. Assign a score from "
      "{rubric_min} to {rubric_max}, where {rubric_min} means completely incorrect and "
      "{rubric_max} means completely correct.{variant_instruction}\n"
      "End your reply with a final line of the form:\n"
      "Score: <value>\n"
      "\n"
      "# Problem\n"
      "{question}\n"
      "\n"
      "# Solution\n"
      "{solution}";
  set.pairwise.system = "You are an impartial grader of mathematical solutions.";
  set.pairwise.user =
      "# Task\n"
      "Compare the two candidate solutions to the math problem below. Decide which solution is "
      "more correct, or whether the comparison results in a tie.\n"
      "End your reply with a final line of the form `Answer: A`, `Answer: B`, or `Answer: Tie`.\n"
      "\n"
      "# Problem\n"
      "{question}\n"
      "\n"
      "# Solution A\n"
      "{solution_a}\n"
      "\n"
      "# Solution B\n"
      "{solution_b}";
  set.generation.system =
      "You write mathematical solutions that contain deliberate flaws, for use in grading "
      "research.";
  set.generation.user =
      "# Task\n"
      "Solve the math problem below, but intentionally introduce exactly one {error_name} error. "
      "Definition of {error_name} errors: {error_definition}\n"
      "Write the solution as a genuine attempt; do not mention that an error was introduced.\n"
      "End your reply with a final line of the form:\n"
      "Final answer: <value>\n"
      "\n"
      "# Problem\n"
      "{question}";
  set.variant_instructions[PromptVariant::Baseline] = "";
  set.variant_instructions[PromptVariant::DirectMitigation] =
      " " + std::string(kDirectMitigationSentence);
  set.variant_instructions[PromptVariant::ChainOfThought] =
      " " + std::string(kChainOfThoughtInstruction);
  set.validate();
  return set;
}

PromptSet load_prompts(const std::filesystem::path& path) {
  json parsed;
  try {
    parsed = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": malformed prompt file: " + e.what());
  }
  PromptSet set = default_prompts();
  require_known_fields(parsed, {"single", "pairwise", "generation", "variant_instructions"},
                       path.string());
  auto load_section = [&](const char* name, PromptSet::Section& section) {
    if (!parsed.contains(name)) return;
    const json& node = parsed[name];
    require_known_fields(node, {"system", "user"}, path.string() + ":" + name);
    if (node.contains("system")) section.system = node["system"].get<std::string>();
    if (node.contains("user")) section.user = node["user"].get<std::string>();
  };
  load_section("single", set.single);
  load_section("pairwise", set.pairwise);
  load_section("generation", set.generation);
  if (parsed.contains("variant_instructions")) {
    for (const auto& [name, text] : parsed["variant_instructions"].items()) {
      set.variant_instructions[parse_prompt_variant(name)] = text.get<std::string>();
    }
  }
  set.validate();
  return set;
}

}  // namespace judgeaudit
