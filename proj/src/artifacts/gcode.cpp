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
#include <cmath>

#include "residue/artifacts.hpp"

namespace residue::art {

namespace {

struct Word {
  char letter;
  double value;
  bool has_value;
};

std::string_view strip_line(std::string_view line) {
  const auto semi = line.find(';');
  if (semi != std::string_view::npos) line = line.substr(0, semi);
  const auto star = line.find('*');
  if (star != std::string_view::npos) line = line.substr(0, star);
  const auto b = line.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = line.find_last_not_of(" \t\r");
  return line.substr(b, e - b + 1);
}

bool split_words(std::string_view s, std::vector<Word>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i == s.size()) break;
    char c = s[i];
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
    if (c < 'A' || c > 'Z') return false;
    ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && !((s[j] >= 'A' && s[j] <= 'Z') || (s[j] >= 'a' && s[j] <= 'z'))) ++j;
    std::string_view num = s.substr(i, j - i);
    Word w{c, 0.0, false};
    if (!num.empty()) {
      if (num[0] == '+') num.remove_prefix(1);
      const auto r = std::from_chars(num.data(), num.data() + num.size(), w.value);
      if (r.ec != std::errc() || r.ptr != num.data() + num.size() || !std::isfinite(w.value)) return false;
      w.has_value = true;
    }
    out.push_back(w);
    i = j;
  }
  return true;
}

int axis_index(char c) {
  switch (c) {
    case 'X': return 0;
    case 'Y': return 1;
    case 'Z': return 2;
    case 'E': return 3;
    default: return -1;
  }
}

}  // namespace

GcodeStats gcode_stats(std::string_view bytes) {
  GcodeStats st;
  double pos[4] = {0, 0, 0, 0};
  bool abs_xyz = true;
  bool abs_e = true;
  std::optional<double> feed;
  bool any_command = false;
  std::vector<Word> words;

  std::size_t p = 0;
  while (p < bytes.size()) {
    auto nl = bytes.find('\n', p);
    if (nl == std::string_view::npos) nl = bytes.size();
    const std::string_view line = strip_line(bytes.substr(p, nl - p));
    p = nl + 1;
    if (line.empty()) continue;
    if (!split_words(line, words) || words.empty()) {
      ++st.malformed_lines;
      continue;
    }
    std::size_t k = 0;
    if (words[0].letter == 'N') k = 1;
    if (k >= words.size()) continue;
    const Word cmd = words[k];
    if ((cmd.letter != 'G' && cmd.letter != 'M' && cmd.letter != 'T') || !cmd.has_value) {
      ++st.malformed_lines;
      continue;
    }
    any_command = true;
    const int code = static_cast<int>(cmd.value);
    if (cmd.letter == 'M') {
      if (code == 82) abs_e = true;
      if (code == 83) abs_e = false;
      continue;
    }
    if (cmd.letter != 'G' || cmd.value != code) continue;
    switch (code) {
      case 90: abs_xyz = true; continue;
      case 91: abs_xyz = false; continue;
      case 92: {
        bool any = false;
        for (std::size_t i = k + 1; i < words.size(); ++i) {
          const int a = axis_index(words[i].letter);
          if (a >= 0) {
            pos[a] = words[i].has_value ? words[i].value : 0.0;
            any = true;
          }
        }
        if (!any) std::fill(std::begin(pos), std::end(pos), 0.0);
        continue;
      }
      case 28: {
        bool any = false;
        for (std::size_t i = k + 1; i < words.size(); ++i) {
          const int a = axis_index(words[i].letter);
          if (a >= 0 && a < 3) {
            pos[a] = 0.0;
            any = true;
          }
        }
        if (!any) pos[0] = pos[1] = pos[2] = 0.0;
        continue;
      }
      case 0:
      case 1: break;
      default: continue;
    }

    double target[4] = {pos[0], pos[1], pos[2], pos[3]};
    bool bad = false;
    for (std::size_t i = k + 1; i < words.size(); ++i) {
      const Word& w = words[i];
      if (w.letter == 'F') {
        if (!w.has_value || w.value <= 0) {
          bad = true;
          break;
        }
        feed = w.value;
        continue;
      }
      const int a = axis_index(w.letter);
      if (a < 0) continue;
      if (!w.has_value) {
        bad = true;
        break;
      }
      const bool absolute = a == 3 ? abs_e : abs_xyz;
      target[a] = absolute ? w.value : pos[a] + w.value;
    }
    if (bad) {
      ++st.malformed_lines;
      continue;
    }
    const double dx = target[0] - pos[0];
    const double dy = target[1] - pos[1];
    const double dz = target[2] - pos[2];
    const double de = target[3] - pos[3];
    if (de > 0) st.filament_mm += de;
    double length = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (length == 0.0) length = std::fabs(de);
    if (length > 0.0) {
      if (feed) {
        st.estimated_print_time_s += length * 60.0 / *feed;
      } else {
        ++st.moves_without_feedrate;
      }
    }
    std::copy(std::begin(target), std::end(target), std::begin(pos));
  }

  if (!bytes.empty() && !any_command) st.warnings.push_back("no G-code commands found");
  if (st.moves_without_feedrate) {
    st.warnings.push_back(std::to_string(st.moves_without_feedrate) +
                          " moves before any feedrate were not timed");
  }
  if (st.malformed_lines) st.warnings.push_back(std::to_string(st.malformed_lines) + " malformed lines skipped");
  return st;
}

}  // namespace residue::art
