// Flat key=value run configuration with INI-style sections.  A line
// "[model]" opens a section; "kind = blp" inside it defines the key
// "model.kind".  '#' and ';' start comments; whitespace around keys and
// values is trimmed; no environment variables are consulted.
//
// Typed getters record every key they touch, so a driver can reject typos by
// calling reject_unknown() after reading its options: any key present in the
// file but never requested raises a config error naming that key.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace rcd {

class RunConfig {
 public:
  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  bool has(const std::string& key) const;

  // Required getters: error when the key is missing or malformed.
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;         // true/false/1/0
  std::uint64_t get_seed(const std::string& key) const;

  // Fallback getters: return the fallback when the key is absent.
  std::string get_string(const std::string& key, const std::string& fb) const;
  double get_double(const std::string& key, double fb) const;
  long get_int(const std::string& key, long fb) const;
  bool get_bool(const std::string& key, bool fb) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fb) const;

  // Comma-separated list of numbers / strings.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  // Error on the first key that was present but never requested.
  void reject_unknown() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> touched_;

  const std::string* find(const std::string& key) const;
  const std::string& need(const std::string& key) const;
};

}  // namespace rcd
