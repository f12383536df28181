#include "rcdemand/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rcdemand/common.hpp"

namespace rcd {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      return false;
  return true;
}

}  // namespace

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require_config(line.back() == ']',
                     "config: unterminated section header at line " +
                         std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      require_config(valid_name(section),
                     "config: invalid section name '" + section + "' at line " +
                         std::to_string(lineno));
      continue;
    }
    const std::size_t eq = line.find('=');
    require_config(eq != std::string::npos,
                   "config: expected key=value at line " +
                       std::to_string(lineno) + ": '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require_config(valid_name(key), "config: invalid key '" + key +
                                        "' at line " + std::to_string(lineno));
    const std::string full = section.empty() ? key : section + "." + key;
    require_config(cfg.kv_.count(full) == 0,
                   "config: duplicate key '" + full + "'");
    cfg.kv_[full] = value;
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  require_config(is.good(), "config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_string(buf.str());
}

const std::string* RunConfig::find(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return nullptr;
  touched_.insert(key);
  return &it->second;
}

const std::string& RunConfig::need(const std::string& key) const {
  const std::string* v = find(key);
  require_config(v != nullptr, "config: missing required key '" + key + "'");
  return *v;
}

bool RunConfig::has(const std::string& key) const {
  return find(key) != nullptr;
}

std::string RunConfig::get_string(const std::string& key) const {
  return need(key);
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& s = need(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require_config(end != s.c_str() && *end == '\0',
                 "config: key '" + key + "' is not a number: '" + s + "'");
  return v;
}

long RunConfig::get_int(const std::string& key) const {
  const std::string& s = need(key);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  require_config(end != s.c_str() && *end == '\0',
                 "config: key '" + key + "' is not an integer: '" + s + "'");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = need(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw_config("config: key '" + key + "' is not a boolean: '" + s + "'");
}

std::uint64_t RunConfig::get_seed(const std::string& key) const {
  const std::string& s = need(key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  require_config(end != s.c_str() && *end == '\0' && s[0] != '-',
                 "config: key '" + key + "' is not a seed: '" + s + "'");
  return v;
}

std::string RunConfig::get_string(const std::string& key,
                                  const std::string& fb) const {
  const std::string* v = find(key);
  return v ? *v : fb;
}
double RunConfig::get_double(const std::string& key, double fb) const {
  return find(key) ? get_double(key) : fb;
}
long RunConfig::get_int(const std::string& key, long fb) const {
  return find(key) ? get_int(key) : fb;
}
bool RunConfig::get_bool(const std::string& key, bool fb) const {
  return find(key) ? get_bool(key) : fb;
}
std::uint64_t RunConfig::get_seed(const std::string& key,
                                  std::uint64_t fb) const {
  return find(key) ? get_seed(key) : fb;
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& f : get_strings(key)) {
    char* end = nullptr;
    const double v = std::strtod(f.c_str(), &end);
    require_config(end != f.c_str() && *end == '\0',
                   "config: key '" + key + "' has a non-numeric entry '" + f +
                       "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> RunConfig::get_strings(const std::string& key) const {
  const std::string& s = need(key);
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  require_config(!out.empty() && !out.front().empty(),
                 "config: key '" + key + "' is an empty list");
  return out;
}

void RunConfig::reject_unknown() const {
  for (const auto& [key, value] : kv_)
    require_config(touched_.count(key) == 1,
                   "config: unknown key '" + key + "'");
}

}  // namespace rcd
