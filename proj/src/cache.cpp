#include "judgeaudit/cache.hpp"

#include <chrono>

namespace judgeaudit {

namespace fs = std::filesystem;

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string ResponseCache::key_digest(const std::string& judge_name, const std::string& model_id,
                                      const PromptBundle& bundle, int repeat_index) {
  std::string buf;
  buf.reserve(judge_name.size() + model_id.size() + bundle.system.size() + bundle.user.size() + 16);
  buf += judge_name;
  buf += '\x1f';
  buf += model_id;
  buf += '\x1f';
  buf += bundle.system;
  buf += '\x1f';
  buf += bundle.user;
  buf += '\x1f';
  buf += std::to_string(repeat_index);
  return sha256_hex(buf);
}

fs::path ResponseCache::entry_path(const std::string& key) const {
  return dir_ / (key + ".json");
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  const fs::path path = entry_path(key);
  if (!fs::exists(path)) return std::nullopt;
  try {
    const json entry = json::parse(read_text_file(path));
    if (!entry.contains("raw_text") || !entry["raw_text"].is_string() ||
        !entry.contains("key") || entry["key"].get<std::string>() != key) {
      return std::nullopt;  // corrupt entry: treat as miss, caller overwrites
    }
    return entry["raw_text"].get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::store(const std::string& key, const std::string& judge_name,
                          const std::string& model_id, const std::string& raw_text) {
  json entry;
  entry["key"] = key;
  entry["judge"] = judge_name;
  entry["model_id"] = model_id;
  entry["raw_text"] = raw_text;
  entry["stored_at_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  write_text_atomic(entry_path(key), entry.dump(2) + "\n");
}

std::vector<ResponseCache::Entry> ResponseCache::entries() const {
  std::vector<Entry> out;
  if (!fs::exists(dir_)) return out;
  for (const auto& file : fs::directory_iterator(dir_)) {
    if (file.path().extension() != ".json") continue;
    try {
      const json entry = json::parse(read_text_file(file.path()));
      out.push_back(Entry{entry.value("key", ""), entry.value("judge", ""),
                          entry.value("model_id", "")});
    } catch (const std::exception&) {
      out.push_back(Entry{file.path().stem().string(), "<corrupt>", "<corrupt>"});
    }
  }
  std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
  return out;
}

std::size_t ResponseCache::count() const {
  std::size_t n = 0;
  if (!fs::exists(dir_)) return n;
  for (const auto& file : fs::directory_iterator(dir_)) {
    if (file.path().extension() == ".json") ++n;
  }
  return n;
}

void ResponseCache::clear() {
  if (!fs::exists(dir_)) return;
  for (const auto& file : fs::directory_iterator(dir_)) {
    if (file.path().extension() == ".json") fs::remove(file.path());
  }
}

JudgeResponse cached_evaluate(Judge& judge, const PromptBundle& bundle, TaskKind kind,
                              ResponseCache& cache, int repeat_index, const Rubric& rubric) {
  const std::string key = ResponseCache::key_digest(judge.config().name, judge.config().model_id,
                                                    bundle, repeat_index);
  if (auto raw = cache.lookup(key)) {
    JudgeResponse response;
    response.raw_text = *raw;
    try {
      switch (kind) {
        case TaskKind::score: response.score = parse_score(*raw, rubric); break;
        case TaskKind::choice: response.choice = parse_choice(*raw); break;
        case TaskKind::freeform:
          if (trim(*raw).empty()) throw ScoreParseError("empty model output");
          break;
      }
      response.status = ResponseStatus::ok;
    } catch (const std::runtime_error& e) {
      response.status = ResponseStatus::parse_error;
      response.error = e.what();
    }
    return response;
  }
  JudgeResponse response = judge.evaluate(bundle, kind, repeat_index, rubric);
  if (response.status != ResponseStatus::transport_error) {
    cache.store(key, judge.config().name, judge.config().model_id, response.raw_text);
  }
  return response;
}

}  // namespace judgeaudit
