#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace aesust {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses line-oriented `key = value` text. `#` starts a comment; blank lines
/// are skipped. Malformed lines and repeated keys raise FormatError.
std::vector<ConfigEntry> parse_config(std::string_view text);

bool parse_bool(const ConfigEntry& entry);
double parse_double(const ConfigEntry& entry);
long long parse_integer(const ConfigEntry& entry);

}  // namespace aesust
