#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "judgeaudit/corpus.hpp"
#include "judgeaudit/persuasion.hpp"
#include "judgeaudit/prompts.hpp"
#include "judgeaudit/util.hpp"

namespace judgeaudit {

enum class Choice { A, B, Tie };
std::string choice_name(Choice c);
Choice parse_choice_name(const std::string& name);

/// What the judge is being asked to produce: a 0-5 score, an A/B/Tie
/// verdict, or free text (solution generation).
enum class TaskKind { score, choice, freeform };

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{200};
};

/// Deterministic offline judge: per-item base scores plus additive bonuses
/// for every technique whose cue appears in the prompt, clamped to [0, 5].
struct MockJudgeSpec {
  enum class PairwisePolicy {
    prefer_higher_score,  // score both slots, answer the higher one
    always_slot_a,
    always_slot_b,
    always_tie,
    content_hash  // verdict keyed on a stable hash of the prompt
  };

  double default_base = 3.0;
  std::map<std::string, double> base_scores;  // item id -> base score
  std::map<Technique, double> cue_bonus;
  std::optional<std::uint64_t> noise_seed;
  double noise_amplitude = 0.0;
  PairwisePolicy pairwise_policy = PairwisePolicy::prefer_higher_score;
  double tie_margin = 1e-9;
  std::string generation_text;  // freeform reply; a canned default if empty
  std::string scripted_reply;   // when set, returned verbatim for every score/choice task
};

MockJudgeSpec mock_spec_from_json(const json& node, const std::string& where);
json mock_spec_to_json(const MockJudgeSpec& spec);

struct JudgeConfig {
  enum class Backend { remote, mock };

  std::string name;
  Backend backend = Backend::mock;
  std::string model_id;
  double temperature = 0.0;  // pinned; configs with any other value are rejected
  bool deterministic = true;
  int repeats = 0;  // 0 = derived: 1 when deterministic, 3 otherwise
  int max_in_flight = 2;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  int requests_per_minute = 0;  // 0 = unlimited

  // remote backend
  std::string endpoint;  // e.g. "https://api.openai.com"
  std::string url_path = "/v1/chat/completions";
  std::string api_key_env;

  MockJudgeSpec mock;

  int effective_repeats() const { return repeats > 0 ? repeats : (deterministic ? 1 : 3); }
};

JudgeConfig judge_config_from_json(const json& node, const std::string& where);
JudgeConfig load_judge_config(const std::filesystem::path& path);

enum class ResponseStatus { ok, parse_error, transport_error };

struct JudgeResponse {
  std::string raw_text;
  std::optional<double> score;
  std::optional<Choice> choice;
  ResponseStatus status = ResponseStatus::transport_error;
  std::string error;
  std::chrono::milliseconds latency{0};
  int attempt_count = 0;

  bool ok() const { return status == ResponseStatus::ok; }
};

struct ScoreParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ChoiceParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Extracts a score: first the last "Score: <number>" marker, else the last
/// standalone number within the rubric bounds (a "<n>/<max>" form counts as
/// its numerator). An asserted number outside the bounds is an error, never
/// clamped.
double parse_score(std::string_view raw, const Rubric& rubric);

/// Extracts an A/B/Tie verdict. Marker lines ("Answer: B", a bare "Tie")
/// are scanned last-to-first; otherwise standalone tokens decide: uppercase
/// A/B only (a lowercase "a" is an article), "tie" case-insensitive.
/// Multiple distinct outcomes asserted is an ambiguity error.
Choice parse_choice(std::string_view raw);

/// Paces requests to a fixed per-minute budget. Clock and sleep are
/// injectable so the pacing math is testable without wall-clock waits.
class RateLimiter {
 public:
  using TimePoint = std::chrono::steady_clock::time_point;
  using ClockFn = std::function<TimePoint()>;
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  explicit RateLimiter(int per_minute);
  RateLimiter(int per_minute, ClockFn clock, SleepFn sleep);

  void acquire();

 private:
  std::chrono::milliseconds interval_{0};
  ClockFn clock_;
  SleepFn sleep_;
  std::mutex mutex_;
  TimePoint next_allowed_{};
  bool primed_ = false;
};

/// A completion transport. Implementations: RemoteBackend (chat-completions
/// wire protocol), MockBackend (offline deterministic judge), and
/// test-scripted backends.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  /// Returns the model's raw text; throws TransportError on failure.
  virtual std::string complete(const PromptBundle& bundle, TaskKind kind, int repeat_index) = 0;
};

class RemoteBackend : public CompletionBackend {
 public:
  explicit RemoteBackend(const JudgeConfig& config);
  std::string complete(const PromptBundle& bundle, TaskKind kind, int repeat_index) override;

 private:
  JudgeConfig config_;
};

class MockBackend : public CompletionBackend {
 public:
  /// corpus maps question text back to item ids; bank supplies the cue
  /// strings to detect; prompts supplies the pairwise section markers.
  MockBackend(MockJudgeSpec spec, std::shared_ptr<const Corpus> corpus,
              std::shared_ptr<const TemplateBank> bank, std::shared_ptr<const PromptSet> prompts);
  std::string complete(const PromptBundle& bundle, TaskKind kind, int repeat_index) override;

 private:
  double block_score(const std::string& user, std::string_view block, int repeat_index) const;
  std::string item_id_for(std::string_view user) const;

  MockJudgeSpec spec_;
  std::shared_ptr<const Corpus> corpus_;
  std::shared_ptr<const TemplateBank> bank_;
  std::shared_ptr<const PromptSet> prompts_;
};

class ScriptedBackend : public CompletionBackend {
 public:
  using Fn = std::function<std::string(const PromptBundle&, TaskKind, int)>;
  explicit ScriptedBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const PromptBundle& bundle, TaskKind kind, int repeat_index) override {
    return fn_(bundle, kind, repeat_index);
  }

 private:
  Fn fn_;
};

/// One judge: a backend plus retry, backoff, rate limiting, in-flight
/// bounding, and response parsing. Thread-safe up to max_in_flight
/// concurrent evaluate calls.
class Judge {
 public:
  Judge(JudgeConfig config, std::shared_ptr<CompletionBackend> backend);
  ~Judge();

  /// Builds the default backend for the config (remote or mock).
  static std::shared_ptr<Judge> make(const JudgeConfig& config,
                                     std::shared_ptr<const Corpus> corpus,
                                     std::shared_ptr<const TemplateBank> bank,
                                     std::shared_ptr<const PromptSet> prompts);

  /// Transport errors retry up to retry.max_attempts with exponential
  /// backoff; a parse failure earns one re-ask before the trial is marked
  /// invalid. Never throws for per-trial failures; the status says.
  JudgeResponse evaluate(const PromptBundle& bundle, TaskKind kind, int repeat_index = 0,
                         const Rubric& rubric = {});

  const JudgeConfig& config() const { return config_; }

  /// Completions actually issued (cache hits bypass this counter).
  long completion_calls() const { return calls_.load(); }

 private:
  std::string complete_bounded(const PromptBundle& bundle, TaskKind kind, int repeat_index);

  JudgeConfig config_;
  std::shared_ptr<CompletionBackend> backend_;
  RateLimiter limiter_;
  std::atomic<long> calls_{0};
  std::unique_ptr<class InFlightGate> gate_;
};

}  // namespace judgeaudit
