#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "judgeaudit/judge.hpp"

namespace judgeaudit {

/// Content-addressed response store: one file per key digest, written
/// temp-then-rename so concurrent writers never expose partial entries.
/// A warm cache replays raw responses; parsing reruns on every load, so
/// warm results equal cold results.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  /// digest over (judge name, model id, system, user, repeat_index).
  static std::string key_digest(const std::string& judge_name, const std::string& model_id,
                                const PromptBundle& bundle, int repeat_index);

  /// Stored raw text, or nullopt on miss. A corrupt entry reads as a miss
  /// (the caller re-fetches and overwrites).
  std::optional<std::string> lookup(const std::string& key) const;

  void store(const std::string& key, const std::string& judge_name, const std::string& model_id,
             const std::string& raw_text);

  struct Entry {
    std::string key;
    std::string judge;
    std::string model_id;
  };
  std::vector<Entry> entries() const;
  std::size_t count() const;
  void clear();

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const;
  std::filesystem::path dir_;
};

/// Cache-through evaluation: hit → stored response, re-parsed; miss →
/// evaluate then persist. Transport failures are never cached, so
/// interrupted audits resume where they stopped.
JudgeResponse cached_evaluate(Judge& judge, const PromptBundle& bundle, TaskKind kind,
                              ResponseCache& cache, int repeat_index, const Rubric& rubric = {});

}  // namespace judgeaudit
