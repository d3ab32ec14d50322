#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace handeye {

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

// Ordered key = value text file.
class Manifest {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, double value) { set(std::move(key), format_double(value)); }
  void set(std::string key, int value) { set(std::move(key), std::to_string(value)); }
  void set(std::string key, unsigned long long value) {
    set(std::move(key), std::to_string(value));
  }

  bool contains(std::string_view key) const;
  // Throws DataError naming the file when the key is missing.
  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  long long get_int(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  void write(const std::string& path) const;
  static Manifest read(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string source_;
};

void ensure_directory(const std::string& path);
bool path_exists(const std::string& path);
std::string join_path(const std::string& a, const std::string& b);

std::vector<std::string> split(std::string_view line, char delimiter);
std::vector<int> parse_int_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

// Git blob-style SHA-1 over the concatenated bytes of `paths`, in order.
std::string content_hash(const std::vector<std::string>& paths);

}  // namespace handeye
