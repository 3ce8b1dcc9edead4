#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcslab/errors.hpp"

namespace mcs {

// Flat keyed configuration with [section] headers.  Lines are
//   key = value [value ...]
// with '#' comments; repeated keys accumulate in order.  Keys are addressed
// as "section.key".
class Config {
 public:
  struct Entry {
    std::string raw;
    int line = 0;
  };

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;  // from one entry
  const std::vector<Entry>& get_all(const std::string& key) const;

  [[noreturn]] void fail(const std::string& key, const std::string& message) const;
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::vector<Entry>> entries_;
  std::string origin_;
};

}  // namespace mcs
