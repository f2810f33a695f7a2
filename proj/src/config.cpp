#include "aesust/config.hpp"

#include <charconv>
#include <set>

#include "aesust/errors.hpp"

namespace aesust {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const ConfigEntry& e, const char* expected) {
  throw FormatError("config line " + std::to_string(e.line) + ": '" + e.key + "' expects " + expected + ", got '" +
                    e.value + "'");
}

}  // namespace

std::vector<ConfigEntry> parse_config(std::string_view text) {
  std::vector<ConfigEntry> entries;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw FormatError("config line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) {
      throw FormatError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    entries.push_back({key, value, line_no});
  }
  return entries;
}

bool parse_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  bad_value(e, "true or false");
}

double parse_double(const ConfigEntry& e) {
  double out = 0;
  const auto* end = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(e.value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(e, "a number");
  return out;
}

long long parse_integer(const ConfigEntry& e) {
  long long out = 0;
  const auto* end = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(e.value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(e, "an integer");
  return out;
}

}  // namespace aesust
