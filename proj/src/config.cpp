#include "mcslab/config.hpp"

#include <fstream>
#include <sstream>

namespace mcs {

Config Config::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigInvalid(path + ": cannot open");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigInvalid(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigInvalid(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigInvalid(origin + ":" + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    cfg.entries_[full].push_back({val, lineno});
  }
  return cfg;
}

void Config::fail(const std::string& key, const std::string& message) const {
  auto it = entries_.find(key);
  const int line = (it != entries_.end() && !it->second.empty()) ? it->second.front().line : 0;
  throw ConfigInvalid(origin_ + ":" + std::to_string(line) + ": field '" + key + "': " + message);
}

std::string Config::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.empty()) fail(key, "missing");
  return it->second.back().raw;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) fail(key, "trailing characters in number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(key, "not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(key, "number out of range: '" + s + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int i = (int)v;
  if ((double)i != v) fail(key, "expected an integer");
  return i;
}

int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::istringstream ss(get_string(key));
  std::vector<double> out;
  double v;
  while (ss >> v) out.push_back(v);
  if (!ss.eof()) fail(key, "expected a list of numbers");
  if (out.empty()) fail(key, "empty list");
  return out;
}

const std::vector<Config::Entry>& Config::get_all(const std::string& key) const {
  static const std::vector<Entry> empty;
  auto it = entries_.find(key);
  return it == entries_.end() ? empty : it->second;
}

}  // namespace mcs
