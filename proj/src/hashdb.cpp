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

#include "residue/hashdb.hpp"

namespace residue::hashdb {

std::string_view to_string(Role r) { return r == Role::Alert ? "alert" : "ignore"; }

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::Alert: return "alert";
    case Classification::Known: return "known";
    case Classification::Unknown: return "unknown";
  }
  return "unknown";
}

HashSetDb parse_hashset(std::string_view text, std::string name, Role role) {
  HashSetDb db;
  db.name = std::move(name);
  db.role = role;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    line.remove_prefix(first);
    if (line[0] == '#') continue;
    const auto end = line.find_first_of(" \t");
    const std::string digest = to_lower(line.substr(0, end));
    if (!is_lower_hex(digest, 32)) {
      throw Error(Errc::BadDigestLine,
                  "line " + std::to_string(line_no) + ": '" + std::string(line) + "' is not an MD5 digest");
    }
    db.md5_values.insert(digest);
  }
  return db;
}

HashSetDb load_hashset(const std::filesystem::path& path, Role role) {
  return parse_hashset(snap::read_text_file(path), path.stem().string(), role);
}

Classification classify_md5(const std::optional<std::string>& md5, const HashSetDb* alert,
                            const HashSetDb* ignore) {
  if (!md5) return Classification::Unknown;
  if (alert && alert->contains(*md5)) return Classification::Alert;
  if (ignore && ignore->contains(*md5)) return Classification::Known;
  return Classification::Unknown;
}

Classification classify(const snap::FileRecord& record, const HashSetDb* alert,
                        const HashSetDb* ignore) {
  return classify_md5(record.md5, alert, ignore);
}

std::string make_ignore(const snap::Snapshot& snapshot) {
  std::set<std::string> values;
  for (const auto& [key, r] : snapshot.records) {
    if (r.md5) values.insert(*r.md5);
  }
  std::string out = "# ignore set from snapshot '" + escape_bytes(snapshot.label) + "'\n";
  for (const auto& v : values) out += v + "\n";
  return out;
}

}  // namespace residue::hashdb
