#pragma once

// Ordered "key = value" text files used for manifests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace povmnet {

class KeyValueFile {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }

  bool contains(const std::string& key) const { return index_.count(key) != 0; }
  /// Throws DataError when the key is missing or does not parse.
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void save(const std::filesystem::path& path) const;
  static KeyValueFile load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);
std::vector<double> parse_double_list(const std::string& s, char sep = ' ');

/// Raw little-endian I/O for doubles.
void append_le(std::vector<unsigned char>& out, double v);
double read_le_double(const unsigned char* p);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace povmnet
