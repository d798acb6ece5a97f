// Copyright 2026 The residue Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "residue/artifacts.hpp"
#include "residue/digest.hpp"

namespace residue::art {

std::string_view to_string(MatchKind k) { return k == MatchKind::ExactHash ? "exact_hash" : "signature"; }

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t'; }
bool is_letter(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
char upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 32) : c; }

/// Consumes [-+]?digits[.digits] or [-+]?.digits; false if no digit was read.
bool number(std::string_view s, std::size_t& i) {
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
  bool any = false;
  while (i < s.size() && is_digit(s[i])) {
    ++i;
    any = true;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && is_digit(s[i])) {
      ++i;
      any = true;
    }
  }
  return any;
}

enum class LineClass { Gcode, Neutral, Other };

LineClass classify(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && is_space(line[i])) ++i;
  if (i == line.size() || line[i] == ';') return LineClass::Neutral;
  return is_gcode_line(line) ? LineClass::Gcode : LineClass::Other;
}

}  // namespace

bool is_gcode_line(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  std::size_t i = 0;
  while (i < s.size() && is_space(s[i])) ++i;
  if (i < s.size() && upper(s[i]) == 'N') {
    ++i;
    if (!number(s, i)) return false;
    while (i < s.size() && is_space(s[i])) ++i;
  }
  if (i >= s.size() || (upper(s[i]) != 'G' && upper(s[i]) != 'M')) return false;
  ++i;
  if (i >= s.size() || !is_digit(s[i])) return false;
  if (!number(s, i)) return false;
  while (true) {
    const std::size_t before = i;
    while (i < s.size() && is_space(s[i])) ++i;
    if (i == s.size() || s[i] == ';') return true;
    if (s[i] == '*') {
      ++i;
      return number(s, i) && i == s.size();
    }
    if (i == before || !is_letter(s[i])) return false;
    ++i;
    const std::size_t start = i;
    if (!number(s, i) && i != start) return false;
  }
}

std::size_t longest_gcode_run(std::string_view bytes) {
  std::size_t best = 0;
  std::size_t run = 0;
  std::size_t pos = 0;
  while (pos <= bytes.size()) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    switch (classify(bytes.substr(pos, nl - pos))) {
      case LineClass::Gcode:
        best = std::max(best, ++run);
        break;
      case LineClass::Neutral:
        break;
      case LineClass::Other:
        run = 0;
        break;
    }
    pos = nl + 1;
  }
  return best;
}

std::optional<CacheHit> scan_cache_file(std::string_view path, ByteView content,
                                        const std::set<std::string>& known_md5, std::size_t min_run) {
  CacheHit hit;
  hit.path = std::string(path);
  const std::string md5 = md5_hex(content);
  if (known_md5.count(md5)) {
    hit.match_kind = MatchKind::ExactHash;
    hit.matched_md5 = md5;
    return hit;
  }
  const std::size_t run = longest_gcode_run(residue::to_string(content));
  if (min_run > 0 && run >= min_run) {
    hit.match_kind = MatchKind::Signature;
    hit.run_length = run;
    return hit;
  }
  return std::nullopt;
}

}  // namespace residue::art
