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

#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "residue/snapshot.hpp"

namespace residue::hashdb {

enum class Role { Alert, Ignore };
enum class Classification { Alert, Known, Unknown };

std::string_view to_string(Role r);
std::string_view to_string(Classification c);

struct HashSetDb {
  std::string name;
  Role role = Role::Ignore;
  std::set<std::string> md5_values;

  bool contains(std::string_view md5) const { return md5_values.count(std::string(md5)) != 0; }
  std::size_t size() const { return md5_values.size(); }
};

/// One digest per line; blank lines and '#' comments are skipped, anything
/// after the first whitespace on a line is ignored (md5sum output loads
/// as-is), uppercase hex is normalised. Throws Error{BadDigestLine}.
HashSetDb parse_hashset(std::string_view text, std::string name, Role role);
HashSetDb load_hashset(const std::filesystem::path& path, Role role);

/// Alert membership wins over ignore; records without an MD5 are unknown.
Classification classify(const snap::FileRecord& record, const HashSetDb* alert,
                        const HashSetDb* ignore);
Classification classify_md5(const std::optional<std::string>& md5, const HashSetDb* alert,
                            const HashSetDb* ignore);

/// Sorted, de-duplicated MD5 values of every hashed record, one per line.
std::string make_ignore(const snap::Snapshot& snapshot);

}  // namespace residue::hashdb
