#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pforge {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_lines(std::string_view text);

// UTF-8 <-> code points. Invalid byte sequences decode to U+FFFD so that
// metrics never crash on garbage model output.
std::vector<char32_t> utf8_decode(std::string_view s);
std::string utf8_encode(const std::vector<char32_t>& cps);
std::size_t codepoint_count(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);
// Stable combination of a base seed with a string key (used to derive
// per-item seeds that do not depend on processing order).
std::uint64_t mix_seed(std::uint64_t seed, std::string_view key);

std::string read_file(const std::filesystem::path& path);
std::optional<std::string> read_file_if_exists(const std::filesystem::path& path);
// Writes via a temp file + rename; a crash never leaves a torn file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// "YYYY-MM-DDThh:mm:ssZ" in UTC.
std::string iso8601_utc_now();

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::string now() const = 0;
};

class SystemClock final : public Clock {
 public:
  std::string now() const override { return iso8601_utc_now(); }
};

class FixedClock final : public Clock {
 public:
  explicit FixedClock(std::string stamp = "1970-01-01T00:00:00Z") : stamp_(std::move(stamp)) {}
  std::string now() const override { return stamp_; }

 private:
  std::string stamp_;
};

}  // namespace pforge
