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

#include "residue/diff.hpp"

#include <sstream>

namespace residue::diff {

std::string_view to_string(ChangeKind k) {
  switch (k) {
    case ChangeKind::Created: return "created";
    case ChangeKind::Deleted: return "deleted";
    case ChangeKind::Modified: return "modified";
    case ChangeKind::Unchanged: return "unchanged";
    case ChangeKind::Indeterminate: return "indeterminate";
  }
  return "unchanged";
}

std::optional<ChangeKind> change_kind_from_string(std::string_view s) {
  for (auto k : {ChangeKind::Created, ChangeKind::Deleted, ChangeKind::Modified,
                 ChangeKind::Unchanged, ChangeKind::Indeterminate}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::size_t DiffReport::change_count() const {
  return count(ChangeKind::Created) + count(ChangeKind::Deleted) + count(ChangeKind::Modified) +
         count(ChangeKind::Indeterminate);
}

std::size_t DiffReport::alert_count() const {
  std::size_t n = 0;
  for (const auto& c : changes) {
    if (c.classification == hashdb::Classification::Alert) ++n;
  }
  return n;
}

namespace {

ChangeKind compare(const snap::FileRecord& b, const snap::FileRecord& a) {
  if (b.kind != a.kind) return ChangeKind::Modified;
  switch (a.kind) {
    case snap::Kind::Dir:
      return ChangeKind::Unchanged;
    case snap::Kind::Symlink:
      return b.size_bytes == a.size_bytes ? ChangeKind::Unchanged : ChangeKind::Modified;
    case snap::Kind::File:
      break;
  }
  if (b.md5 && a.md5) return *b.md5 == *a.md5 ? ChangeKind::Unchanged : ChangeKind::Modified;
  return b.size_bytes != a.size_bytes ? ChangeKind::Modified : ChangeKind::Indeterminate;
}

}  // namespace

DiffReport diff(const snap::Snapshot& baseline, const snap::Snapshot& after, const DiffOptions& options) {
  DiffReport report;
  report.baseline_label = baseline.label;
  report.after_label = after.label;

  std::string filter;
  filter += options.allocated_only ? "allocated_only" : "all_allocation_states";
  if (options.include_unchanged) filter += "; include_unchanged";
  if (options.alert) filter += "; alert=" + options.alert->name;
  if (options.ignore) filter += "; ignore=" + options.ignore->name;
  if (options.hide_known) filter += "; hide_known";
  report.filter_applied = filter;

  auto skip = [&](const snap::FileRecord& r) {
    return options.allocated_only && r.allocation != Allocation::Allocated;
  };

  auto emit = [&](ChangeRecord c) {
    const auto& md5 = c.after_md5 ? c.after_md5 : c.before_md5;
    c.classification = hashdb::classify_md5(md5, options.alert, options.ignore);
    if (c.kind == ChangeKind::Unchanged && !options.include_unchanged) return;
    if (options.hide_known && c.classification == hashdb::Classification::Known) {
      ++report.hidden_known;
      return;
    }
    ++report.counts[c.kind];
    report.changes.push_back(std::move(c));
  };

  auto bi = baseline.records.begin();
  auto ai = after.records.begin();
  const auto be = baseline.records.end();
  const auto ae = after.records.end();
  while (bi != be || ai != ae) {
    if (bi != be && skip(bi->second)) {
      ++bi;
      continue;
    }
    if (ai != ae && skip(ai->second)) {
      ++ai;
      continue;
    }
    ChangeRecord c;
    if (ai == ae || (bi != be && bi->first < ai->first)) {
      const auto& b = bi->second;
      c.volume_id = b.volume_id;
      c.path = b.path;
      c.kind = ChangeKind::Deleted;
      c.entry_kind = b.kind;
      c.before_md5 = b.md5;
      ++bi;
    } else if (bi == be || ai->first < bi->first) {
      const auto& a = ai->second;
      c.volume_id = a.volume_id;
      c.path = a.path;
      c.kind = ChangeKind::Created;
      c.entry_kind = a.kind;
      c.after_md5 = a.md5;
      ++ai;
    } else {
      const auto& b = bi->second;
      const auto& a = ai->second;
      c.volume_id = a.volume_id;
      c.path = a.path;
      c.kind = compare(b, a);
      c.entry_kind = a.kind;
      c.before_md5 = b.md5;
      c.after_md5 = a.md5;
      c.touched = c.kind == ChangeKind::Unchanged && b.mtime && a.mtime && *b.mtime != *a.mtime;
      ++bi;
      ++ai;
    }
    emit(std::move(c));
  }
  return report;
}

std::vector<snap::RecordKey> find_hash_matches(const snap::Snapshot& snapshot, std::string_view md5) {
  const std::string needle = to_lower(md5);
  if (!is_lower_hex(needle, 32)) {
    throw Error(Errc::BadDigest, "'" + std::string(md5) + "' is not an MD5 digest");
  }
  std::vector<snap::RecordKey> out;
  for (const auto& [key, r] : snapshot.records) {
    if (r.md5 && *r.md5 == needle) out.push_back(key);
  }
  return out;
}

std::string to_tsv(const DiffReport& report) {
  std::ostringstream os;
  os << "# baseline " << escape_bytes(report.baseline_label) << "\n";
  os << "# after " << escape_bytes(report.after_label) << "\n";
  os << "# filter " << report.filter_applied << "\n";
  os << "volume_id\tpath\tchange\tentry\tbefore_md5\tafter_md5\tclassification\ttouched\n";
  for (const auto& c : report.changes) {
    os << escape_bytes(c.volume_id) << '\t' << escape_bytes(c.path) << '\t' << to_string(c.kind)
       << '\t' << snap::to_string(c.entry_kind) << '\t' << c.before_md5.value_or("-") << '\t'
       << c.after_md5.value_or("-") << '\t' << hashdb::to_string(c.classification) << '\t'
       << (c.touched ? "touched" : "-") << "\n";
  }
  return os.str();
}

}  // namespace residue::diff
