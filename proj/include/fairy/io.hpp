#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fairy {

using Json = nlohmann::json;

/// Calls `fn(object, line_number)` for every non-blank line of a JSON Lines
/// file. Parse failures are reported as IoError naming the line.
void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(const Json&, std::size_t)>& fn);

std::vector<Json> read_json_lines(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

/// Output file that only appears at its final path after commit().
/// Uncommitted output is removed on destruction, so a failing command never
/// leaves a partial file behind.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path target);
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile();

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

/// 64-bit FNV-1a, used for stable content identifiers.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  void update_u64(std::uint64_t v);
  /// Field separator that cannot occur inside UTF-8 text.
  void separator() { update(std::string_view("\xff", 1)); }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t value);
std::uint64_t from_hex(std::string_view text);

}  // namespace fairy
