#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eventcast {

/// A required upstream artifact or input path does not exist.
class MissingArtifact : public std::runtime_error {
 public:
  explicit MissingArtifact(const std::filesystem::path& path)
      : std::runtime_error("missing artifact: " + path.string()), path_(path) {}
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// An input file or directory exists but cannot be read.
class UnreadableInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "2022-02-04T12:00:00Z"
std::string format_iso8601(std::int64_t epoch_seconds);

/// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM)", "YYYY-MM-DD HH:MM:SS" (UTC)
/// and the legacy Twitter form "Wed Oct 10 20:19:24 +0000 2018".
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Shortest decimal form that round-trips; NaN renders as an empty string.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Splits one CSV line. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
/// Writes atomically through a temporary sibling file.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string to_hex(const unsigned char* data, std::size_t size);
std::vector<unsigned char> from_hex(std::string_view hex);

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Exceptions from workers
/// are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body);

std::size_t default_jobs();

}  // namespace eventcast
