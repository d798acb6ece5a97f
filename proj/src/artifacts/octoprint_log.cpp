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

#include <arpa/inet.h>

#include <algorithm>
#include <regex>

#include "residue/artifacts.hpp"

namespace residue::art {

std::string_view to_string(LogKind k) {
  switch (k) {
    case LogKind::ClientConnect: return "client_connect";
    case LogKind::Upload: return "upload";
    case LogKind::SystemCommand: return "system_command";
    case LogKind::Other: return "other";
  }
  return "other";
}

namespace {

bool valid_ip(const std::string& s) {
  unsigned char buf[16];
  return inet_pton(AF_INET, s.c_str(), buf) == 1 || inet_pton(AF_INET6, s.c_str(), buf) == 1;
}

// "2018-01-02 03:04:05,006 - logger - LEVEL - message"
bool parse_line(std::string_view line, LogEvent& ev) {
  if (line.size() < 23) return false;
  std::string iso(line.substr(0, 23));
  if (iso[10] != ' ' || iso[19] != ',') return false;
  iso[10] = 'T';
  iso[19] = '.';
  const auto t = parse_utc(iso + "Z");
  if (!t) return false;
  std::string_view rest = line.substr(23);
  if (!rest.starts_with(" - ")) return false;
  rest.remove_prefix(3);
  const auto a = rest.find(" - ");
  if (a == std::string_view::npos) return false;
  const auto b = rest.find(" - ", a + 3);
  if (b == std::string_view::npos) return false;
  ev.timestamp = std::chrono::floor<std::chrono::milliseconds>(*t);
  ev.logger = std::string(rest.substr(0, a));
  ev.level = std::string(rest.substr(a + 3, b - a - 3));
  ev.message = std::string(rest.substr(b + 3));
  return !ev.logger.empty() && !ev.level.empty();
}

std::string design_from_token(const std::string& token) {
  if (auto parts = parse_upload_name(token)) return parts->design_name;
  return token.substr(0, token.size() - 6);  // strip ".gcode"
}

}  // namespace

std::vector<LogEvent> parse_octoprint_log(const std::vector<std::string>& files, const LogPatterns& patterns) {
  const auto flags = std::regex::ECMAScript | std::regex::icase;
  const std::regex connect(patterns.client_connect, flags);
  const std::regex upload(patterns.upload, flags);
  const std::regex command(patterns.system_command, flags);

  std::vector<LogEvent> out;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const std::string_view text = files[f];
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
      ++line_no;
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;

      LogEvent ev;
      ev.file_index = f;
      ev.line = line_no;
      if (!parse_line(line, ev)) {
        ev.message = std::string(line);
        out.push_back(std::move(ev));
        continue;
      }
      std::smatch m;
      if (std::regex_search(ev.message, m, connect) && m.size() > 1 && valid_ip(m[1].str())) {
        ev.kind = LogKind::ClientConnect;
        ev.detail = m[1].str();
      } else if (std::regex_search(ev.message, m, upload) && m.size() > 1) {
        ev.kind = LogKind::Upload;
        ev.detail = design_from_token(m[1].str());
      } else if (std::regex_search(ev.message, m, command) && m.size() > 1) {
        ev.kind = LogKind::SystemCommand;
        ev.detail = m[1].str();
      }
      out.push_back(std::move(ev));
    }
  }
  return out;
}

std::vector<std::string> order_log_files(std::vector<std::string> names, std::string_view base) {
  auto rank = [&](const std::string& n) -> std::pair<int, std::string> {
    if (n == base) return {3, ""};
    const std::string_view suffix = std::string_view(n).substr(base.size() + 1);
    const bool numeric = !suffix.empty() && std::all_of(suffix.begin(), suffix.end(),
                                                         [](char c) { return c >= '0' && c <= '9'; });
    if (numeric) {
      // Higher rotation numbers are older; pad so string order matches.
      std::string key(20 - std::min<std::size_t>(20, suffix.size()), '0');
      key += suffix;
      std::string inverted;
      for (char c : key) inverted += static_cast<char>('9' - (c - '0'));
      return {2, inverted};
    }
    return {1, std::string(suffix)};
  };
  std::vector<std::string> keep;
  for (auto& n : names) {
    if (n == base || (n.size() > base.size() + 1 && n.starts_with(base) && n[base.size()] == '.')) {
      keep.push_back(std::move(n));
    }
  }
  std::sort(keep.begin(), keep.end(), [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
  return keep;
}

}  // namespace residue::art
