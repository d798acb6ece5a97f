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

#include <charconv>
#include <set>

#include "residue/artifacts.hpp"

namespace residue::art {

namespace {

[[noreturn]] void violation(std::size_t line, const std::string& why) {
  throw Error(Errc::YamlSubsetViolation, "line " + std::to_string(line) + ": " + why);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

/// Reads a key or scalar starting at `s[0]`. Quoted forms consume up to the
/// closing quote and report the rest through `rest`.
std::string read_quoted(std::string_view s, std::size_t line, std::string_view& rest) {
  const char q = s[0];
  std::string out;
  std::size_t i = 1;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (q == '\'' && c == '\'') {
      if (i + 1 < s.size() && s[i + 1] == '\'') {
        out += '\'';
        ++i;
        continue;
      }
      break;
    }
    if (q == '"' && c == '\\') {
      if (i + 1 >= s.size()) violation(line, "dangling escape");
      const char e = s[++i];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '\\': out += '\\'; break;
        case '"': out += '"'; break;
        case '/': out += '/'; break;
        default: violation(line, std::string("unsupported escape \\") + e);
      }
      continue;
    }
    if (q == '"' && c == '"') break;
    out += c;
  }
  if (i >= s.size()) violation(line, "unterminated quoted string");
  rest = s.substr(i + 1);
  return out;
}

void reject_special(std::string_view v, std::size_t line) {
  if (v.empty()) return;
  switch (v[0]) {
    case '&': violation(line, "anchors are not supported");
    case '*': violation(line, "aliases are not supported");
    case '{':
    case '[': violation(line, "flow collections are not supported");
    case '|':
    case '>': violation(line, "block scalars are not supported");
    case '!': violation(line, "tags are not supported");
    default: break;
  }
  if (v == "-" || v.starts_with("- ")) violation(line, "sequences are not supported");
}

struct KeyValue {
  std::string key;
  std::optional<std::string> value;  // nullopt: nothing after the colon
};

KeyValue split_line(std::string_view s, std::size_t line) {
  KeyValue kv;
  std::string_view rest;
  if (s[0] == '"' || s[0] == '\'') {
    kv.key = read_quoted(s, line, rest);
    rest = trim(rest);
    if (rest.empty() || rest[0] != ':') violation(line, "expected ':' after key");
    rest.remove_prefix(1);
  } else {
    reject_special(s, line);
    std::size_t colon = std::string_view::npos;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == ':' && (i + 1 == s.size() || s[i + 1] == ' ')) {
        colon = i;
        break;
      }
    }
    if (colon == std::string_view::npos) violation(line, "expected 'key: value'");
    kv.key = std::string(trim(s.substr(0, colon)));
    rest = s.substr(colon + 1);
  }
  if (kv.key.empty()) violation(line, "empty key");
  if (!rest.empty() && rest[0] != ' ') violation(line, "expected a space after ':'");
  rest = trim(rest);
  if (rest.empty() || rest[0] == '#') return kv;
  reject_special(rest, line);
  if (rest[0] == '"' || rest[0] == '\'') {
    std::string_view after;
    kv.value = read_quoted(rest, line, after);
    after = trim(after);
    if (!after.empty() && after[0] != '#') violation(line, "text after quoted scalar");
    return kv;
  }
  const auto hash = rest.find(" #");
  kv.value = std::string(trim(rest.substr(0, hash)));
  return kv;
}

bool is_null(std::string_view v) { return v.empty() || v == "null" || v == "~" || v == "Null" || v == "NULL"; }

double non_negative(const std::string& v, std::size_t line, const char* what) {
  double d = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), d);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    violation(line, std::string(what) + " is not a number");
  }
  if (!(d >= 0)) violation(line, std::string(what) + " is negative");
  return d;
}

void assign(MetadataEntry& e, const std::string& key, const std::string& v, std::size_t line) {
  if (key == "hash") {
    const std::string h = to_lower(v);
    if (!is_lower_hex(h, 40)) violation(line, "hash is not a 40-hex SHA1");
    e.sha1 = h;
  } else if (key == "estimated_print_time") {
    e.estimated_print_time_s = non_negative(v, line, "estimated_print_time");
  } else if (key == "filament_used_mm") {
    e.filament_mm = non_negative(v, line, "filament_used_mm");
  } else if (key == "numeric_id") {
    if (!is_null(v)) e.numeric_id = v;
  } else if (key == "last_print_time") {
    if (is_null(v)) return;
    const auto t = parse_utc(v);
    if (!t) violation(line, "last_print_time is not an ISO-8601 UTC time");
    e.last_print_time = *t;
  } else if (key == "last_print_success") {
    if (is_null(v)) return;
    if (v == "true" || v == "True" || v == "TRUE") {
      e.last_print_success = true;
    } else if (v == "false" || v == "False" || v == "FALSE") {
      e.last_print_success = false;
    } else {
      violation(line, "last_print_success is not a boolean");
    }
  } else {
    e.raw[key] = v;
  }
}

std::string number(double d) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

bool needs_quotes(std::string_view s) {
  if (s.empty()) return true;
  if (s.find(": ") != std::string_view::npos || s.find(" #") != std::string_view::npos) return true;
  if (s.back() == ':' || s.front() == ' ' || s.back() == ' ') return true;
  static constexpr std::string_view kLead = "&*{[|>!-'\"#%@`";
  if (kLead.find(s.front()) != std::string_view::npos) return true;
  for (unsigned char c : s) {
    if (c < 0x20 || c == 0x7F) return true;
  }
  return false;
}

std::string quote(std::string_view s) {
  if (!needs_quotes(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

}  // namespace

std::vector<MetadataEntry> parse_metadata_yaml(std::string_view text) {
  std::vector<MetadataEntry> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::size_t child_indent = 0;
  bool first_content = true;
  while (pos < text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t indent = 0;
    while (indent < line.size() && (line[indent] == ' ' || line[indent] == '\t')) {
      if (line[indent] == '\t') violation(line_no, "tab in indentation");
      ++indent;
    }
    const std::string_view body = trim(line.substr(indent));
    if (body.empty() || body[0] == '#') continue;
    if (first_content && indent == 0 && (body == "---" || body == "--- {}")) {
      if (body == "--- {}") return out;
      first_content = false;
      continue;
    }
    first_content = false;
    if (body == "...") continue;
    if (body == "{}" && indent == 0 && out.empty()) continue;

    const KeyValue kv = split_line(body, line_no);
    if (indent == 0) {
      if (kv.value) violation(line_no, "top-level value must be a mapping");
      if (!seen.insert(kv.key).second) violation(line_no, "duplicate entry '" + kv.key + "'");
      MetadataEntry e;
      e.file_name = kv.key;
      out.push_back(std::move(e));
      child_indent = 0;
      continue;
    }
    if (out.empty()) violation(line_no, "indented line before any entry");
    if (child_indent == 0) child_indent = indent;
    if (indent > child_indent) violation(line_no, "nesting deeper than two levels");
    if (indent != child_indent) violation(line_no, "inconsistent indentation");
    if (!kv.value) violation(line_no, "nested mappings below an entry are not supported");
    assign(out.back(), kv.key, *kv.value, line_no);
  }
  return out;
}

std::string render_metadata_yaml(const std::vector<MetadataEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += quote(e.file_name) + ":\n";
    if (!e.sha1.empty()) out += "  hash: " + e.sha1 + "\n";
    out += "  estimated_print_time: " + number(e.estimated_print_time_s) + "\n";
    out += "  filament_used_mm: " + number(e.filament_mm) + "\n";
    if (e.numeric_id) out += "  numeric_id: " + quote(*e.numeric_id) + "\n";
    if (e.last_print_time) out += "  last_print_time: " + format_utc(*e.last_print_time) + "\n";
    if (e.last_print_success) {
      out += std::string("  last_print_success: ") + (*e.last_print_success ? "true" : "false") + "\n";
    }
    for (const auto& [k, v] : e.raw) out += "  " + quote(k) + ": " + quote(v) + "\n";
  }
  return out;
}

}  // namespace residue::art
