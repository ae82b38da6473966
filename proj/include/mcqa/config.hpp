#pragma once

// Flat key-value configuration files:
//
//   # comment
//   key = value
//
// Keys are unique; later flags override file values at the call site.

#include <charconv>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "mcqa/error.hpp"
#include "mcqa/util.hpp"

namespace mcqa {

using KeyValues = std::map<std::string, std::string, std::less<>>;

inline KeyValues parse_key_values(std::string_view content, std::string_view origin = "config") {
  KeyValues kv;
  std::istringstream in{std::string(content)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = line;
    if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key(trim(l.substr(0, eq)));
    std::string value(trim(l.substr(eq + 1)));
    if (key.empty())
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
  }
  return kv;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto s = trim(value);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(std::string(key) + ": not a number: '" + std::string(value) + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
  auto v = to_lower(trim(value));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key) + ": not a boolean: '" + std::string(value) + "'");
}

}  // namespace mcqa
