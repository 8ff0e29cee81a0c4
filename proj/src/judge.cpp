#include "judgeaudit/judge.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <condition_variable>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace judgeaudit {

std::string choice_name(Choice c) {
  switch (c) {
    case Choice::A: return "A";
    case Choice::B: return "B";
    case Choice::Tie: return "Tie";
  }
  throw std::logic_error("choice_name: bad enum");
}

Choice parse_choice_name(const std::string& name) {
  if (name == "A") return Choice::A;
  if (name == "B") return Choice::B;
  if (name == "Tie") return Choice::Tie;
  throw std::runtime_error("unknown choice \"" + name + "\"");
}

// ---------------------------------------------------------------------------
// config parsing

MockJudgeSpec mock_spec_from_json(const json& node, const std::string& where) {
  require_known_fields(node,
                       {"default_base", "base_scores", "cue_bonus", "noise_seed",
                        "noise_amplitude", "pairwise_policy", "tie_margin", "generation_text",
                        "scripted_reply"},
                       where);
  MockJudgeSpec spec;
  if (node.contains("default_base")) spec.default_base = node["default_base"].get<double>();
  if (node.contains("base_scores")) {
    for (const auto& [id, v] : node["base_scores"].items()) {
      spec.base_scores[id] = v.get<double>();
    }
  }
  if (node.contains("cue_bonus")) {
    for (const auto& [name, v] : node["cue_bonus"].items()) {
      spec.cue_bonus[parse_technique(name)] = v.get<double>();
    }
  }
  if (node.contains("noise_seed") && !node["noise_seed"].is_null()) {
    spec.noise_seed = node["noise_seed"].get<std::uint64_t>();
  }
  if (node.contains("noise_amplitude")) spec.noise_amplitude = node["noise_amplitude"].get<double>();
  if (node.contains("tie_margin")) spec.tie_margin = node["tie_margin"].get<double>();
  if (node.contains("generation_text")) spec.generation_text = node["generation_text"].get<std::string>();
  if (node.contains("scripted_reply")) spec.scripted_reply = node["scripted_reply"].get<std::string>();
  if (node.contains("pairwise_policy")) {
    const std::string p = node["pairwise_policy"].get<std::string>();
    using PP = MockJudgeSpec::PairwisePolicy;
    if (p == "prefer_higher_score") spec.pairwise_policy = PP::prefer_higher_score;
    else if (p == "always_slot_a") spec.pairwise_policy = PP::always_slot_a;
    else if (p == "always_slot_b") spec.pairwise_policy = PP::always_slot_b;
    else if (p == "always_tie") spec.pairwise_policy = PP::always_tie;
    else if (p == "content_hash") spec.pairwise_policy = PP::content_hash;
    else throw std::runtime_error(where + ": unknown pairwise_policy \"" + p + "\"");
  }
  return spec;
}

json mock_spec_to_json(const MockJudgeSpec& spec) {
  json node;
  node["default_base"] = spec.default_base;
  json bases = json::object();
  for (const auto& [id, v] : spec.base_scores) bases[id] = v;
  node["base_scores"] = bases;
  json bonus = json::object();
  for (const auto& [t, v] : spec.cue_bonus) bonus[technique_name(t)] = v;
  node["cue_bonus"] = bonus;
  if (spec.noise_seed) node["noise_seed"] = *spec.noise_seed;
  node["noise_amplitude"] = spec.noise_amplitude;
  using PP = MockJudgeSpec::PairwisePolicy;
  switch (spec.pairwise_policy) {
    case PP::prefer_higher_score: node["pairwise_policy"] = "prefer_higher_score"; break;
    case PP::always_slot_a: node["pairwise_policy"] = "always_slot_a"; break;
    case PP::always_slot_b: node["pairwise_policy"] = "always_slot_b"; break;
    case PP::always_tie: node["pairwise_policy"] = "always_tie"; break;
    case PP::content_hash: node["pairwise_policy"] = "content_hash"; break;
  }
  node["tie_margin"] = spec.tie_margin;
  if (!spec.generation_text.empty()) node["generation_text"] = spec.generation_text;
  if (!spec.scripted_reply.empty()) node["scripted_reply"] = spec.scripted_reply;
  return node;
}

JudgeConfig judge_config_from_json(const json& node, const std::string& where) {
  require_known_fields(node,
                       {"name", "backend", "model_id", "temperature", "deterministic", "repeats",
                        "max_in_flight", "timeout_ms", "retry", "requests_per_minute", "endpoint",
                        "url_path", "api_key_env", "mock"},
                       where);
  JudgeConfig config;
  if (!node.contains("name") || node["name"].get<std::string>().empty()) {
    throw std::runtime_error(where + ": judge needs a nonempty name");
  }
  config.name = node["name"].get<std::string>();
  if (node.contains("backend")) {
    const std::string b = node["backend"].get<std::string>();
    if (b == "remote") config.backend = JudgeConfig::Backend::remote;
    else if (b == "mock") config.backend = JudgeConfig::Backend::mock;
    else throw std::runtime_error(where + ": unknown backend \"" + b + "\"");
  }
  if (node.contains("model_id")) config.model_id = node["model_id"].get<std::string>();
  if (config.model_id.empty()) config.model_id = config.name;
  if (node.contains("temperature")) {
    config.temperature = node["temperature"].get<double>();
    if (config.temperature != 0.0) {
      throw std::runtime_error(where + ": temperature is pinned at 0.0");
    }
  }
  if (node.contains("deterministic")) config.deterministic = node["deterministic"].get<bool>();
  if (node.contains("repeats")) {
    config.repeats = node["repeats"].get<int>();
    if (config.repeats < 1) throw std::runtime_error(where + ": repeats must be >= 1");
  }
  if (node.contains("max_in_flight")) {
    config.max_in_flight = node["max_in_flight"].get<int>();
    if (config.max_in_flight < 1) throw std::runtime_error(where + ": max_in_flight must be >= 1");
  }
  if (node.contains("timeout_ms")) {
    config.timeout = std::chrono::milliseconds(node["timeout_ms"].get<long>());
  }
  if (node.contains("retry")) {
    const json& r = node["retry"];
    require_known_fields(r, {"max_attempts", "backoff_ms"}, where + ":retry");
    if (r.contains("max_attempts")) config.retry.max_attempts = r["max_attempts"].get<int>();
    if (r.contains("backoff_ms")) {
      config.retry.backoff_base = std::chrono::milliseconds(r["backoff_ms"].get<long>());
    }
    if (config.retry.max_attempts < 1) {
      throw std::runtime_error(where + ": retry.max_attempts must be >= 1");
    }
  }
  if (node.contains("requests_per_minute")) {
    config.requests_per_minute = node["requests_per_minute"].get<int>();
  }
  if (node.contains("endpoint")) config.endpoint = node["endpoint"].get<std::string>();
  if (node.contains("url_path")) config.url_path = node["url_path"].get<std::string>();
  if (node.contains("api_key_env")) config.api_key_env = node["api_key_env"].get<std::string>();
  if (node.contains("mock")) config.mock = mock_spec_from_json(node["mock"], where + ":mock");
  if (config.backend == JudgeConfig::Backend::remote && config.endpoint.empty()) {
    throw std::runtime_error(where + ": remote judge needs an endpoint");
  }
  return config;
}

JudgeConfig load_judge_config(const std::filesystem::path& path) {
  json parsed;
  try {
    parsed = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": malformed judge config: " + e.what());
  }
  return judge_config_from_json(parsed, path.string());
}

// ---------------------------------------------------------------------------
// response parsing

namespace {

bool is_number_start(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct NumberToken {
  double value = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;  // one past
};

std::optional<NumberToken> scan_number(std::string_view text, std::size_t pos) {
  std::size_t begin = pos;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
    negative = text[pos] == '-';
    ++pos;
  }
  std::size_t digits_start = pos;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  if (pos == digits_start) return std::nullopt;
  double value = 0.0;
  auto res = std::from_chars(text.data() + digits_start, text.data() + pos, value);
  if (res.ec != std::errc{}) return std::nullopt;
  return NumberToken{negative ? -value : value, begin, pos};
}

std::optional<double> number_after_marker(std::string_view text, const std::string& marker_lower) {
  const std::string lower = to_lower(text);
  std::size_t found = lower.rfind(marker_lower);
  if (found == std::string::npos) return std::nullopt;
  std::size_t pos = found + marker_lower.size();
  while (pos < text.size() &&
         (text[pos] == ' ' || text[pos] == '*' || text[pos] == '`' || text[pos] == '\t')) {
    ++pos;
  }
  auto token = scan_number(text, pos);
  if (!token) return std::nullopt;
  return token->value;
}

}  // namespace

double parse_score(std::string_view raw, const Rubric& rubric) {
  const std::string marker_lower = to_lower(rubric.marker);
  if (auto v = number_after_marker(raw, marker_lower)) {
    if (*v < rubric.min || *v > rubric.max) {
      throw ScoreParseError("score " + format_double(*v) + " outside [" +
                            format_double(rubric.min) + ", " + format_double(rubric.max) + "]");
    }
    return *v;
  }
  // Fallback: the last standalone in-range number; "<n>/<max>" counts as n.
  std::optional<double> best;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    if (!is_number_start(raw[pos]) && raw[pos] != '-' && raw[pos] != '+') {
      ++pos;
      continue;
    }
    auto token = scan_number(raw, pos);
    if (!token) {
      ++pos;
      continue;
    }
    double candidate = token->value;
    std::size_t next = token->end;
    bool fraction_ok = true;
    if (next < raw.size() && raw[next] == '/') {
      auto denom = scan_number(raw, next + 1);
      if (denom) {
        fraction_ok = denom->value == rubric.max;
        next = denom->end;
      }
    }
    if (fraction_ok && candidate >= rubric.min && candidate <= rubric.max) best = candidate;
    pos = next;
  }
  if (!best) throw ScoreParseError("no score found in response");
  return *best;
}

namespace {

std::optional<Choice> choice_token(std::string_view token, bool allow_lowercase_ab) {
  if (token == "A" || (allow_lowercase_ab && (token == "a"))) return Choice::A;
  if (token == "B" || (allow_lowercase_ab && (token == "b"))) return Choice::B;
  if (to_lower(token) == "tie") return Choice::Tie;
  return std::nullopt;
}

std::optional<Choice> choice_from_marker_line(const std::string& line) {
  static const std::vector<std::string> kMarkers = {"final answer", "answer", "choice",
                                                    "verdict", "winner", "decision"};
  const std::string lower = to_lower(line);
  for (const auto& marker : kMarkers) {
    std::size_t at = lower.find(marker);
    if (at == std::string::npos) continue;
    std::size_t pos = at + marker.size();
    while (pos < line.size() &&
           (line[pos] == ':' || line[pos] == '-' || line[pos] == ' ' || line[pos] == '*' ||
            line[pos] == '`' || line[pos] == '\t')) {
      ++pos;
    }
    std::size_t end = pos;
    while (end < line.size() && std::isalpha(static_cast<unsigned char>(line[end]))) ++end;
    if (end > pos) {
      if (auto c = choice_token(std::string_view(line).substr(pos, end - pos), true)) return c;
    }
  }
  // A line that is exactly the verdict.
  const std::string t = trim(line);
  std::string stripped;
  for (char c : t) {
    if (c != '*' && c != '`' && c != '.' && c != '!') stripped.push_back(c);
  }
  if (auto c = choice_token(stripped, true)) return c;
  return std::nullopt;
}

}  // namespace

Choice parse_choice(std::string_view raw) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t nl = raw.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(raw.substr(start));
      break;
    }
    lines.emplace_back(raw.substr(start, nl - start));
    start = nl + 1;
  }
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (trim(*it).empty()) continue;
    if (auto c = choice_from_marker_line(*it)) return *c;
  }
  // Token scan: uppercase A/B only, "tie" case-insensitive.
  bool saw_a = false, saw_b = false, saw_tie = false;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    if (!std::isalnum(static_cast<unsigned char>(raw[pos]))) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < raw.size() && std::isalnum(static_cast<unsigned char>(raw[end]))) ++end;
    const std::string_view token = raw.substr(pos, end - pos);
    if (token == "A") saw_a = true;
    else if (token == "B") saw_b = true;
    else if (to_lower(token) == "tie") saw_tie = true;
    pos = end;
  }
  const int outcomes = int(saw_a) + int(saw_b) + int(saw_tie);
  if (outcomes == 0) throw ChoiceParseError("no choice found in response");
  if (outcomes > 1) throw ChoiceParseError("ambiguous response: multiple outcomes asserted");
  if (saw_a) return Choice::A;
  if (saw_b) return Choice::B;
  return Choice::Tie;
}

// ---------------------------------------------------------------------------
// rate limiting

RateLimiter::RateLimiter(int per_minute)
    : RateLimiter(per_minute, [] { return std::chrono::steady_clock::now(); },
                  [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

RateLimiter::RateLimiter(int per_minute, ClockFn clock, SleepFn sleep)
    : clock_(std::move(clock)), sleep_(std::move(sleep)) {
  if (per_minute > 0) {
    interval_ = std::chrono::milliseconds(60000 / per_minute);
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::milliseconds wait{0};
  {
    std::lock_guard lock(mutex_);
    const TimePoint now = clock_();
    if (!primed_ || next_allowed_ < now) {
      next_allowed_ = now;
      primed_ = true;
    } else {
      wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_allowed_ - now);
    }
    next_allowed_ += interval_;
  }
  if (wait.count() > 0) sleep_(wait);
}

// ---------------------------------------------------------------------------
// backends

RemoteBackend::RemoteBackend(const JudgeConfig& config) : config_(config) {}

std::string RemoteBackend::complete(const PromptBundle& bundle, TaskKind, int) {
  httplib::Client client(config_.endpoint);
  const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  client.set_connection_timeout(timeout.count() > 0 ? timeout : std::chrono::seconds(1));
  client.set_read_timeout(timeout.count() > 0 ? timeout : std::chrono::seconds(1));
  client.set_write_timeout(timeout.count() > 0 ? timeout : std::chrono::seconds(1));

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw TransportError("credential env var " + config_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  json body;
  body["model"] = config_.model_id;
  body["messages"] = json::array({
      json{{"role", "system"}, {"content", bundle.system}},
      json{{"role", "user"}, {"content", bundle.user}},
  });
  body["temperature"] = config_.temperature;

  auto res = client.Post(config_.url_path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + config_.endpoint);
  }
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("malformed response body: ") + e.what());
  }
  if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty()) {
    throw TransportError("response carries no choices");
  }
  const json& message = parsed["choices"][0]["message"];
  if (!message.contains("content") || !message["content"].is_string()) {
    throw TransportError("response carries no message content");
  }
  return message["content"].get<std::string>();
}

MockBackend::MockBackend(MockJudgeSpec spec, std::shared_ptr<const Corpus> corpus,
                         std::shared_ptr<const TemplateBank> bank,
                         std::shared_ptr<const PromptSet> prompts)
    : spec_(std::move(spec)),
      corpus_(std::move(corpus)),
      bank_(std::move(bank)),
      prompts_(std::move(prompts)) {}

std::string MockBackend::item_id_for(std::string_view user) const {
  if (corpus_) {
    for (const auto& item : corpus_->items) {
      if (user.find(item.problem.question) != std::string_view::npos) return item.problem.id;
    }
  }
  return {};
}

double MockBackend::block_score(const std::string& user, std::string_view block,
                                int repeat_index) const {
  const std::string id = item_id_for(user);
  double score = spec_.default_base;
  if (auto it = spec_.base_scores.find(id); it != spec_.base_scores.end()) score = it->second;
  if (bank_) {
    for (const auto& [technique, bonus] : spec_.cue_bonus) {
      for (const auto& cue : bank_->cues(technique)) {
        if (block.find(cue) != std::string_view::npos) {
          score += bonus;
          break;  // a technique counts once per block
        }
      }
    }
  }
  if (spec_.noise_seed) {
    const std::uint64_t h = stable_hash(
        format_double(static_cast<double>(*spec_.noise_seed)) + "\x1f" + std::string(block),
        std::to_string(repeat_index));
    const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
    score += spec_.noise_amplitude * (2.0 * unit - 1.0);
  }
  return std::clamp(score, 0.0, 5.0);
}

std::string MockBackend::complete(const PromptBundle& bundle, TaskKind kind, int repeat_index) {
  if (!spec_.scripted_reply.empty() && kind != TaskKind::freeform) {
    return spec_.scripted_reply;
  }
  if (kind == TaskKind::score) {
    return "Score: " + format_double(block_score(bundle.user, bundle.user, repeat_index));
  }
  if (kind == TaskKind::freeform) {
    if (!spec_.generation_text.empty()) return spec_.generation_text;
    return "Assume the quantities combine additively, so the intermediate total is 17 + 5 = 21.\n"
           "Dividing by 3 gives 7.\n"
           "Final answer: 7";
  }
  using PP = MockJudgeSpec::PairwisePolicy;
  switch (spec_.pairwise_policy) {
    case PP::always_slot_a: return "Answer: A";
    case PP::always_slot_b: return "Answer: B";
    case PP::always_tie: return "Answer: Tie";
    case PP::content_hash: {
      const std::uint64_t h = stable_hash(
          bundle.user, std::to_string(spec_.noise_seed.value_or(0)) + "/" +
                           std::to_string(repeat_index));
      switch (h % 3) {
        case 0: return "Answer: A";
        case 1: return "Answer: B";
        default: return "Answer: Tie";
      }
    }
    case PP::prefer_higher_score: break;
  }
  if (!prompts_) throw std::runtime_error("mock: pairwise scoring needs a prompt set");
  // Recover the slot contents using the static template text around the
  // slots; assumes solutions do not themselves contain the section markers.
  const std::string& tmpl = prompts_->pairwise.user;
  const std::size_t slot_q = tmpl.find("{question}");
  const std::size_t slot_a = tmpl.find("{solution_a}");
  const std::size_t slot_b = tmpl.find("{solution_b}");
  if (slot_q == std::string::npos || slot_a == std::string::npos ||
      slot_b == std::string::npos || !(slot_q < slot_a && slot_a < slot_b)) {
    throw std::runtime_error("mock: pairwise template lacks the expected slot order");
  }
  const std::string head = tmpl.substr(slot_q + 10, slot_a - (slot_q + 10));
  const std::string between = tmpl.substr(slot_a + 12, slot_b - (slot_a + 12));
  const std::string tail = tmpl.substr(slot_b + 12);
  const std::string& user = bundle.user;
  std::size_t a_begin = user.find(head);
  if (a_begin == std::string::npos) {
    throw std::runtime_error("mock: pairwise prompt does not match the configured template");
  }
  a_begin += head.size();
  const std::size_t a_end = user.find(between, a_begin);
  if (a_end == std::string::npos) {
    throw std::runtime_error("mock: pairwise prompt does not match the configured template");
  }
  const std::size_t b_begin = a_end + between.size();
  const std::size_t b_end = tail.empty() ? user.size() : user.rfind(tail);
  if (b_end == std::string::npos || b_end < b_begin) {
    throw std::runtime_error("mock: pairwise prompt does not match the configured template");
  }
  const std::string_view block_a = std::string_view(user).substr(a_begin, a_end - a_begin);
  const std::string_view block_b = std::string_view(user).substr(b_begin, b_end - b_begin);
  const double sa = block_score(user, block_a, repeat_index);
  const double sb = block_score(user, block_b, repeat_index);
  if (std::abs(sa - sb) <= spec_.tie_margin) return "Answer: Tie";
  return sa > sb ? "Answer: A" : "Answer: B";
}

// ---------------------------------------------------------------------------
// the judge

/// Counting gate for the per-judge in-flight bound.
class InFlightGate {
 public:
  explicit InFlightGate(int limit) : available_(limit) {}

  void enter() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void leave() {
    {
      std::lock_guard lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

namespace {
struct GateGuard {
  InFlightGate& gate;
  explicit GateGuard(InFlightGate& g) : gate(g) { gate.enter(); }
  ~GateGuard() { gate.leave(); }
};
}  // namespace

Judge::Judge(JudgeConfig config, std::shared_ptr<CompletionBackend> backend)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      limiter_(config_.requests_per_minute),
      gate_(std::make_unique<InFlightGate>(config_.max_in_flight)) {}

Judge::~Judge() = default;

std::shared_ptr<Judge> Judge::make(const JudgeConfig& config,
                                   std::shared_ptr<const Corpus> corpus,
                                   std::shared_ptr<const TemplateBank> bank,
                                   std::shared_ptr<const PromptSet> prompts) {
  std::shared_ptr<CompletionBackend> backend;
  if (config.backend == JudgeConfig::Backend::remote) {
    backend = std::make_shared<RemoteBackend>(config);
  } else {
    backend = std::make_shared<MockBackend>(config.mock, std::move(corpus), std::move(bank),
                                            std::move(prompts));
  }
  return std::make_shared<Judge>(config, std::move(backend));
}

std::string Judge::complete_bounded(const PromptBundle& bundle, TaskKind kind, int repeat_index) {
  limiter_.acquire();
  calls_.fetch_add(1);
  return backend_->complete(bundle, kind, repeat_index);
}

JudgeResponse Judge::evaluate(const PromptBundle& bundle, TaskKind kind, int repeat_index,
                              const Rubric& rubric) {
  GateGuard guard(*gate_);
  JudgeResponse response;
  const auto started = std::chrono::steady_clock::now();

  auto finish = [&]() {
    response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return response;
  };

  auto complete_with_retries = [&](const PromptBundle& b) -> std::optional<std::string> {
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
      ++response.attempt_count;
      try {
        return complete_bounded(b, kind, repeat_index);
      } catch (const TransportError& e) {
        response.error = e.what();
        if (attempt == config_.retry.max_attempts) return std::nullopt;
        const auto backoff = config_.retry.backoff_base * (1 << (attempt - 1));
        std::this_thread::sleep_for(backoff);
      }
    }
    return std::nullopt;
  };

  auto try_parse = [&](const std::string& raw) -> bool {
    response.raw_text = raw;
    response.score.reset();
    response.choice.reset();
    try {
      switch (kind) {
        case TaskKind::score: response.score = parse_score(raw, rubric); break;
        case TaskKind::choice: response.choice = parse_choice(raw); break;
        case TaskKind::freeform:
          if (trim(raw).empty()) throw ScoreParseError("empty model output");
          break;
      }
      response.status = ResponseStatus::ok;
      response.error.clear();
      return true;
    } catch (const std::runtime_error& e) {
      response.status = ResponseStatus::parse_error;
      response.error = e.what();
      return false;
    }
  };

  auto raw = complete_with_retries(bundle);
  if (!raw) {
    response.status = ResponseStatus::transport_error;
    return finish();
  }
  if (try_parse(*raw)) return finish();

  // One re-ask with an explicit format nudge before the trial goes invalid.
  PromptBundle nudged = bundle;
  switch (kind) {
    case TaskKind::score:
      nudged.user += "\n\nReply with only `" + rubric.marker + " <value>`.";
      break;
    case TaskKind::choice:
      nudged.user += "\n\nReply with only `Answer: A`, `Answer: B`, or `Answer: Tie`.";
      break;
    case TaskKind::freeform:
      nudged.user += "\n\nYour previous reply was empty. Write the full solution.";
      break;
  }
  auto retry_raw = complete_with_retries(nudged);
  if (retry_raw) try_parse(*retry_raw);
  return finish();
}

}  // namespace judgeaudit
