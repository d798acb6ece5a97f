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
#include <regex>

#include "residue/artifacts.hpp"

namespace residue::art {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(std::size_t line, const std::string& why) {
  throw Error(Errc::BadConfig, "line " + std::to_string(line) + ": " + why);
}

std::string absolute_path(std::string_view v, std::size_t line) {
  if (v.empty() || v[0] != '/') bad(line, "path must be absolute: '" + std::string(v) + "'");
  std::string s(v);
  while (s.size() > 1 && s.back() == '/') s.pop_back();
  return s;
}

}  // namespace

ArtifactConfig parse_config(std::string_view text) {
  ArtifactConfig cfg;
  bool dirs_reset = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) bad(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));

    if (key == "uploads_dir") {
      cfg.uploads_dir = absolute_path(value, line_no);
    } else if (key == "metadata_file") {
      cfg.metadata_file = absolute_path(value, line_no);
    } else if (key == "log_dir") {
      cfg.log_dir = absolute_path(value, line_no);
    } else if (key == "log_basename") {
      if (value.empty() || value.find('/') != std::string_view::npos) bad(line_no, "bad log_basename");
      cfg.log_basename = std::string(value);
    } else if (key == "cache_dir") {
      cfg.cache_dir = absolute_path(value, line_no);
    } else if (key == "history_file") {
      cfg.history_file = absolute_path(value, line_no);
    } else if (key == "session_file") {
      cfg.session_file = absolute_path(value, line_no);
    } else if (key == "signature_min_lines") {
      std::size_t n = 0;
      const auto r = std::from_chars(value.data(), value.data() + value.size(), n);
      if (r.ec != std::errc() || r.ptr != value.data() + value.size() || n == 0) {
        bad(line_no, "signature_min_lines must be a positive integer");
      }
      cfg.signature_min_lines = n;
    } else if (key == "pattern.client_connect") {
      cfg.patterns.client_connect = std::string(value);
    } else if (key == "pattern.upload") {
      cfg.patterns.upload = std::string(value);
    } else if (key == "pattern.system_command") {
      cfg.patterns.system_command = std::string(value);
    } else if (key == "dir_of_interest") {
      if (!dirs_reset) {
        cfg.dirs_of_interest.clear();
        dirs_reset = true;
      }
      cfg.dirs_of_interest.push_back(absolute_path(value, line_no));
    } else {
      bad(line_no, "unknown key '" + key + "'");
    }
    if (key.starts_with("pattern.")) {
      try {
        const std::regex probe(std::string(value), std::regex::ECMAScript | std::regex::icase);
      } catch (const std::regex_error& e) {
        bad(line_no, key + " is not a valid regex: " + e.what());
      }
    }
  }
  return cfg;
}

ArtifactConfig load_config(const std::filesystem::path& path) { return parse_config(snap::read_text_file(path)); }

}  // namespace residue::art
