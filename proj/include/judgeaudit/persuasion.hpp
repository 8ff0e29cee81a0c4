#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "judgeaudit/corpus.hpp"

namespace judgeaudit {

/// The seven persuasion techniques, grouped by Aristotle's modes of appeal.
enum class Technique { Consistency, Majority, Flattery, Reciprocity, Pity, Authority, Identity };
enum class Mode { logos, pathos, ethos };

inline constexpr std::array<Technique, 7> kAllTechniques = {
    Technique::Consistency, Technique::Majority,   Technique::Flattery, Technique::Reciprocity,
    Technique::Pity,        Technique::Authority,  Technique::Identity};

/// Fixed mapping: logos {Consistency, Majority}, pathos {Flattery,
/// Reciprocity, Pity}, ethos {Authority, Identity}.
Mode mode_of(Technique t);

std::string technique_name(Technique t);
Technique parse_technique(const std::string& name);  // throws on unknown name
std::string mode_name(Mode m);

/// Abbreviated row label: "Cons.", "Major.", "Flat.", "Reci.", "Pity.",
/// "Auth.", "Iden.". The cue-free condition is labeled "Orig.".
std::string technique_label(Technique t);
inline constexpr std::string_view kOriginalLabel = "Orig.";

inline constexpr int kCuesPerTechnique = 5;

/// Five cue sentences per technique. Cue 0 is the canonical exemplar; the
/// rest are shipped paraphrases that preserve the technique's definition.
class TemplateBank {
 public:
  TemplateBank() = default;
  explicit TemplateBank(std::map<Technique, std::vector<std::string>> cues);

  const std::vector<std::string>& cues(Technique t) const;

  /// Replaces whole per-technique lists with the override's; every override
  /// list must hold exactly five distinct nonempty cues.
  TemplateBank merged_with(const std::map<Technique, std::vector<std::string>>& overrides) const;

  std::string digest() const;

  bool operator==(const TemplateBank&) const = default;

 private:
  void validate() const;
  std::map<Technique, std::vector<std::string>> cues_;
};

TemplateBank builtin_bank();

/// Builtin bank with the file's per-technique lists merged over it.
/// File format: {"Authority": ["cue", ...5], ...}; names must be technique names.
TemplateBank load_bank_with_overrides(const std::filesystem::path& path);

enum class TemplatePolicy { fixed_first, hashed };

/// Deterministic cue selection. `hashed` picks
/// stable_hash(item_id, technique_name) mod 5; `fixed_first` picks cue 0.
const std::string& select_template(const TemplateBank& bank, Technique t,
                                   std::string_view item_id, TemplatePolicy policy);

enum class Placement { append, prepend };
std::string placement_name(Placement p);
Placement parse_placement(const std::string& name);

/// A solution with 0-2 persuasion cues attached. The rendered text with the
/// cue block removed equals the base text byte-exactly.
struct PersuadedSolution {
  CandidateSolution base;
  std::vector<std::pair<Technique, std::string>> cues;
  Placement placement = Placement::append;

  std::string rendered() const;
};

/// Pure: cues joined by blank lines, attached to the solution text with a
/// blank-line separator. Rejects more than two cues.
PersuadedSolution inject(const CandidateSolution& solution,
                         std::vector<std::pair<Technique, std::string>> cues,
                         Placement placement);

/// Removes the injected cue block from the rendered text, recovering the
/// base solution byte-exactly. Throws if the rendered text does not carry
/// the expected block.
std::string strip_cues(const PersuadedSolution& persuaded);

/// All 21 unordered technique pairs, each once, in canonical (taxonomy)
/// order. Cue order in rendered text follows pair order.
std::vector<std::pair<Technique, Technique>> stacked_condition_pairs();

/// "Cons. + Iden." style label for a stacked pair.
std::string pair_label(Technique a, Technique b);

}  // namespace judgeaudit
