#include "handeye/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "handeye/common.hpp"

namespace handeye {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("cannot format double");
  return std::string(buf, end);
}

void Manifest::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

bool Manifest::contains(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return true;
  }
  return false;
}

const std::string& Manifest::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw DataError("manifest " + source_ + " is missing key '" + std::string(key) + "'");
}

double Manifest::get_double(std::string_view key) const { return parse_double(get(key)); }
long long Manifest::get_int(std::string_view key) const { return parse_int(get(key)); }

void Manifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write manifest");
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  if (!out) throw IoError(path, "write failed");
}

Manifest Manifest::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot read manifest");
  Manifest m;
  m.source_ = path;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw DataError("malformed manifest line in " + path + ": " + line);
    m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return m;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec || !std::filesystem::is_directory(path)) {
    throw IoError(path, "cannot create directory");
  }
}

bool path_exists(const std::string& path) { return std::filesystem::exists(path); }

std::string join_path(const std::string& a, const std::string& b) {
  return (std::filesystem::path(a) / b).string();
}

std::vector<std::string> split(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

long long parse_int(std::string_view text) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ',')) out.push_back(static_cast<int>(parse_int(item)));
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item));
  return out;
}

std::string content_hash(const std::vector<std::string>& paths) {
  std::string payload;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot read for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    payload += buf.str();
  }
  const std::string header = "blob " + std::to_string(payload.size()) + '\0';

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), payload.data(), payload.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error("SHA-1 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

}  // namespace handeye
