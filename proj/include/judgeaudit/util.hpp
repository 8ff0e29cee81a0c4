#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace judgeaudit {

using json = nlohmann::ordered_json;

/// SHA-256 of the input, lowercase hex.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's bytes, lowercase hex. Throws if the file is unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// 64-bit FNV-1a. Stable across platforms and runs; used wherever a
/// reproducible hash feeds a decision (template selection, seed derivation).
std::uint64_t stable_hash(std::string_view data);
std::uint64_t stable_hash(std::string_view a, std::string_view b);

/// Deterministic RNG: mt19937_64 engine with a hand-rolled bounded draw so
/// results do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform draw in [0, n). n must be > 0.
  std::uint64_t bounded(std::uint64_t n);

  /// Uniform double in [0, 1).
  double unit();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[bounded(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives a per-purpose seed from one top-level seed, so a single knob
/// controls all randomized stages independently.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view purpose);

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temp file in the same directory, then renames into place.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

/// Calls fn(parsed, line_number, byte_offset) for every nonblank line.
/// line_number is 1-based; byte_offset is the offset of the line start.
/// Malformed JSON raises with both coordinates in the message.
void for_each_jsonl_line(
    const std::filesystem::path& path,
    const std::function<void(const json&, std::size_t, std::size_t)>& fn);

/// Rejects records whose keys are not in `allowed`; message names the key.
void require_known_fields(const json& record, const std::vector<std::string>& allowed,
                          const std::string& where);

/// Shortest round-trip decimal form of v ("3.5", "4", "0.8999999999999999").
std::string format_double(double v);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

}  // namespace judgeaudit
