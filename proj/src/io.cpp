#include "fairy/io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "fairy/error.hpp"

namespace fairy {

void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json value;
    try {
      value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": invalid JSON: " + e.what());
    }
    fn(value, line_no);
  }
}

std::vector<Json> read_json_lines(const std::filesystem::path& path) {
  std::vector<Json> out;
  for_each_json_line(path, [&](const Json& j, std::size_t) { out.push_back(j); });
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

AtomicFile::AtomicFile(std::filesystem::path target)
    : target_(std::move(target)), temp_(target_) {
  temp_ += ".partial";
  if (target_.has_parent_path()) {
    std::filesystem::create_directories(target_.parent_path());
  }
  out_.open(temp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot write " + temp_.string());
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw IoError("write failed for " + target_.string());
  out_.close();
  std::filesystem::rename(temp_, target_);
  committed_ = true;
}

void Fnv1a::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    const char byte = static_cast<char>((v >> (8 * i)) & 0xff);
    update(std::string_view(&byte, 1));
  }
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t from_hex(std::string_view text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, 16);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("invalid hex identifier '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace fairy
