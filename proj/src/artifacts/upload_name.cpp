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

#include <cstdio>

#include "residue/artifacts.hpp"

namespace residue::art {

namespace {

constexpr std::string_view kSuffix = ".gcode";
// 2017-09-11T21-27-35.303Z
constexpr std::size_t kStampLen = 24;

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

std::optional<UploadNameParts> parse_upload_name(std::string_view name) {
  if (!name.ends_with(kSuffix)) return std::nullopt;
  name.remove_suffix(kSuffix.size());
  if (name.size() < kStampLen + 1) return std::nullopt;
  const std::string_view stamp = name.substr(name.size() - kStampLen);
  name.remove_suffix(kStampLen);
  if (name.back() != '-') return std::nullopt;
  name.remove_suffix(1);
  if (stamp[13] != '-' || stamp[16] != '-' || stamp[19] != '.') return std::nullopt;
  std::string iso(stamp);
  iso[13] = ':';
  iso[16] = ':';
  const auto t = parse_utc(iso);
  if (!t) return std::nullopt;

  const auto dash = name.rfind('-');
  if (dash == std::string_view::npos || dash == 0) return std::nullopt;
  const std::string_view id = name.substr(dash + 1);
  if (!all_digits(id)) return std::nullopt;
  return UploadNameParts{std::string(name.substr(0, dash)), std::string(id),
                         std::chrono::floor<std::chrono::milliseconds>(*t)};
}

std::string render_upload_name(const UploadNameParts& p) {
  using namespace std::chrono;
  const auto day = floor<days>(p.timestamp);
  const year_month_day ymd{day};
  const hh_mm_ss tod{p.timestamp - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d-%02d-%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()), static_cast<int>(tod.subseconds().count()));
  return p.design_name + "-" + p.numeric_id + "-" + buf + std::string(kSuffix);
}

}  // namespace residue::art
