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

#include <map>
#include <string>
#include <vector>

#include "residue/hashdb.hpp"
#include "residue/snapshot.hpp"

namespace residue::diff {

enum class ChangeKind { Created, Deleted, Modified, Unchanged, Indeterminate };

std::string_view to_string(ChangeKind k);
std::optional<ChangeKind> change_kind_from_string(std::string_view s);

struct ChangeRecord {
  std::string volume_id;
  std::string path;
  ChangeKind kind = ChangeKind::Unchanged;
  snap::Kind entry_kind = snap::Kind::File;
  std::optional<std::string> before_md5;
  std::optional<std::string> after_md5;
  hashdb::Classification classification = hashdb::Classification::Unknown;
  /// Same content, different modification time. Never counted as a change.
  bool touched = false;

  bool operator==(const ChangeRecord&) const = default;
};

struct DiffOptions {
  bool allocated_only = true;
  bool include_unchanged = false;
  /// Drop records classified `known` (the ignore set hides them).
  bool hide_known = false;
  const hashdb::HashSetDb* alert = nullptr;
  const hashdb::HashSetDb* ignore = nullptr;
};

struct DiffReport {
  std::string baseline_label;
  std::string after_label;
  std::vector<ChangeRecord> changes;
  std::map<ChangeKind, std::size_t> counts;
  std::string filter_applied;
  std::size_t hidden_known = 0;

  std::size_t count(ChangeKind k) const {
    auto it = counts.find(k);
    return it == counts.end() ? 0 : it->second;
  }
  /// Created + deleted + modified + indeterminate.
  std::size_t change_count() const;
  std::size_t alert_count() const;
  bool operator==(const DiffReport&) const = default;
};

/// Keyed join of two snapshots on (volume_id, path); changes come out in
/// canonical key order.
DiffReport diff(const snap::Snapshot& baseline, const snap::Snapshot& after,
                const DiffOptions& options = {});

/// Keys of every record whose MD5 equals `md5`. Throws Error{BadDigest}.
std::vector<snap::RecordKey> find_hash_matches(const snap::Snapshot& snapshot, std::string_view md5);

/// Tab-separated change list with a header row.
std::string to_tsv(const DiffReport& report);

}  // namespace residue::diff
