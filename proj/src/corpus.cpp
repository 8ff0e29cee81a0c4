#include "judgeaudit/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "judgeaudit/util.hpp"

namespace judgeaudit {

std::string benchmark_name(Benchmark b) {
  switch (b) {
    case Benchmark::MATH: return "MATH";
    case Benchmark::MATHQA: return "MATHQA";
    case Benchmark::MMLU: return "MMLU";
    case Benchmark::AMC: return "AMC";
    case Benchmark::GSM8K: return "GSM8K";
    case Benchmark::SVAMP: return "SVAMP";
  }
  throw std::logic_error("benchmark_name: bad enum");
}

Benchmark parse_benchmark(const std::string& name) {
  for (Benchmark b : kAllBenchmarks) {
    if (benchmark_name(b) == name) return b;
  }
  throw std::runtime_error("unknown benchmark \"" + name + "\"");
}

std::string error_type_name(ErrorType e) {
  switch (e) {
    case ErrorType::computational: return "computational";
    case ErrorType::logical: return "logical";
    case ErrorType::symbolic: return "symbolic";
  }
  throw std::logic_error("error_type_name: bad enum");
}

ErrorType parse_error_type(const std::string& name) {
  for (ErrorType e : kAllErrorTypes) {
    if (error_type_name(e) == name) return e;
  }
  throw std::runtime_error("unknown error_type \"" + name + "\"");
}

const CorpusItem* Corpus::find(const std::string& id) const {
  for (const auto& item : items) {
    if (item.problem.id == id) return &item;
  }
  return nullptr;
}

namespace {

const std::vector<std::string> kCorpusFields = {
    "id", "benchmark", "question", "reference_answer", "solution", "error_type", "final_answer"};

std::string require_nonempty_string(const json& record, const char* field, const std::string& where) {
  if (!record.contains(field) || !record[field].is_string() ||
      record[field].get<std::string>().empty()) {
    throw std::runtime_error(where + ": field \"" + std::string(field) +
                             "\" missing or not a nonempty string");
  }
  return record[field].get<std::string>();
}

CorpusItem parse_item(const json& record, const std::string& where) {
  require_known_fields(record, kCorpusFields, where);
  CorpusItem item;
  item.problem.id = require_nonempty_string(record, "id", where);
  try {
    item.problem.benchmark = parse_benchmark(require_nonempty_string(record, "benchmark", where));
    item.solution.error_type = parse_error_type(require_nonempty_string(record, "error_type", where));
  } catch (const std::exception& e) {
    throw std::runtime_error(where + ": " + e.what());
  }
  item.problem.question = require_nonempty_string(record, "question", where);
  if (record.contains("reference_answer")) {
    if (!record["reference_answer"].is_string()) {
      throw std::runtime_error(where + ": reference_answer must be a string");
    }
    item.problem.reference_answer = record["reference_answer"].get<std::string>();
  }
  item.solution.problem_id = item.problem.id;
  item.solution.text = require_nonempty_string(record, "solution", where);
  if (!record.contains("final_answer") || !record["final_answer"].is_string()) {
    throw std::runtime_error(where + ": field \"final_answer\" missing or not a string");
  }
  item.solution.final_answer = record["final_answer"].get<std::string>();
  return item;
}

json item_to_json(const CorpusItem& item) {
  json record;
  record["id"] = item.problem.id;
  record["benchmark"] = benchmark_name(item.problem.benchmark);
  record["question"] = item.problem.question;
  if (item.problem.reference_answer) record["reference_answer"] = *item.problem.reference_answer;
  record["solution"] = item.solution.text;
  record["error_type"] = error_type_name(item.solution.error_type);
  record["final_answer"] = item.solution.final_answer;
  return record;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  Corpus corpus;
  std::set<std::string> seen;
  for_each_jsonl_line(path, [&](const json& record, std::size_t line_no, std::size_t) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    CorpusItem item = parse_item(record, where);
    if (!seen.insert(item.problem.id).second) {
      throw std::runtime_error(where + ": duplicate id \"" + item.problem.id + "\"");
    }
    corpus.items.push_back(std::move(item));
  });
  return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& item : corpus.items) {
    out << item_to_json(item).dump() << "\n";
  }
  return out.str();
}

Corpus parse_corpus(const std::string& text, const std::string& where) {
  Corpus corpus;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string at = where + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(at + ": malformed record: " + e.what());
    }
    CorpusItem item = parse_item(record, at);
    if (!seen.insert(item.problem.id).second) {
      throw std::runtime_error(at + ": duplicate id \"" + item.problem.id + "\"");
    }
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_text_atomic(path, serialize_corpus(corpus));
}

Corpus sample_balanced(const Corpus& corpus, const std::map<Benchmark, int>& per_benchmark,
                       std::uint64_t seed) {
  Corpus out;
  for (const auto& [bench, want] : per_benchmark) {
    if (want < 0) throw std::invalid_argument("sample_balanced: negative count");
    std::map<ErrorType, std::vector<const CorpusItem*>> pools;
    for (const auto& item : corpus.items) {
      if (item.problem.benchmark == bench) pools[item.solution.error_type].push_back(&item);
    }
    int available = 0;
    for (const auto& [et, pool] : pools) available += static_cast<int>(pool.size());
    if (available < want) {
      throw std::runtime_error("sample_balanced: benchmark " + benchmark_name(bench) + " has " +
                               std::to_string(available) + " items, " + std::to_string(want) +
                               " requested");
    }
    Rng rng(derive_seed(seed, "sample_balanced/" + benchmark_name(bench)));
    for (ErrorType et : kAllErrorTypes) rng.shuffle(pools[et]);

    // Round-robin across error types in fixed order; exhausted types are
    // skipped so the total is always met.
    std::map<ErrorType, std::size_t> cursor;
    int taken = 0;
    std::vector<const CorpusItem*> picked;
    while (taken < want) {
      bool progressed = false;
      for (ErrorType et : kAllErrorTypes) {
        if (taken >= want) break;
        auto& pool = pools[et];
        auto& idx = cursor[et];
        if (idx < pool.size()) {
          picked.push_back(pool[idx++]);
          ++taken;
          progressed = true;
        }
      }
      if (!progressed) break;
    }
    // Keep input (file) order within the sampled subset so reloads are stable.
    std::sort(picked.begin(), picked.end(), [&](const CorpusItem* a, const CorpusItem* b) {
      return a - corpus.items.data() < b - corpus.items.data();
    });
    for (const CorpusItem* item : picked) out.items.push_back(*item);
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  for (Benchmark b : kAllBenchmarks) stats.per_benchmark[b] = 0;
  for (ErrorType e : kAllErrorTypes) stats.per_error_type[e] = 0;
  for (const auto& item : corpus.items) {
    ++stats.per_benchmark[item.problem.benchmark];
    ++stats.per_error_type[item.solution.error_type];
    ++stats.total;
  }
  return stats;
}

}  // namespace judgeaudit
