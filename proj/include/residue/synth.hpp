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
#include <map>
#include <random>
#include <string>
#include <vector>

#include "residue/artifacts.hpp"
#include "residue/diff.hpp"
#include "residue/sqlite.hpp"

namespace residue::synth {

struct Node {
  snap::Kind kind = snap::Kind::File;
  std::string content;  // file bytes or symlink target
  std::int64_t mtime = 0;

  bool operator==(const Node&) const = default;
};

/// In-memory directory tree keyed by absolute path ("/a/b"). The root is
/// implicit; parents of every node exist as Dir nodes.
class Tree {
 public:
  const std::map<std::string, Node>& nodes() const { return nodes_; }
  const Node* find(const std::string& path) const;
  bool contains(const std::string& path) const { return nodes_.count(path) != 0; }

  /// Creates missing parents with the same mtime.
  void put(const std::string& path, Node node);
  void remove(const std::string& path);
  std::size_t file_count() const;
  bool operator==(const Tree&) const = default;

 private:
  std::map<std::string, Node> nodes_;
};

struct Design {
  std::string title;
  std::string gcode;
  std::string md5;
  std::string sha1;
  art::UploadNameParts upload;
  std::string file_name() const { return art::render_upload_name(upload); }
};

struct SynthOptions {
  /// Upload sequences leave F_000017 and an intermixed copy in data_3.
  bool plant_cache = true;
  /// Baseline cache holds F_000016, a copy of the pre-existing design.
  bool baseline_cache_copy = true;
};

struct DeviceModel {
  std::uint64_t seed = 0;
  std::map<std::string, Tree> volumes;  // "boot", "rootfs"
  Design forensics;    // uploaded during the sequences
  Design rectangular;  // already on the device
  UtcMillis event_time;

  bool operator==(const DeviceModel& o) const { return seed == o.seed && volumes == o.volumes; }
};

enum class Cause { Action, Noise };
std::string_view to_string(Cause c);

struct TruthEvent {
  std::string volume;
  std::string path;
  diff::ChangeKind kind = diff::ChangeKind::Modified;
  Cause cause = Cause::Action;

  bool operator==(const TruthEvent&) const = default;
};

struct GroundTruth {
  int sequence_id = 0;
  std::uint64_t seed = 0;
  bool noise = false;
  std::vector<TruthEvent> events;  // sorted by (volume, path)
};

inline constexpr int kSequenceCount = 10;
std::string_view sequence_name(int id);
/// Whether the sequence deletes a design.
bool sequence_deletes(int id);

DeviceModel build_baseline(std::uint64_t seed, const SynthOptions& options = {});

struct SequenceResult {
  DeviceModel after;
  GroundTruth truth;
};
/// Applies one manipulation sequence to a copy of `before`. Throws
/// Error{UnknownSequence}.
SequenceResult apply_sequence(const DeviceModel& before, int sequence_id, bool noise,
                              const SynthOptions& options = {});

/// `<md5>  <volume>:<path>` for every regular file, sorted.
std::string manifest(const DeviceModel& model);
/// MD5 of both test designs, in hash-set format.
std::string alert_set(const DeviceModel& model);
std::string ground_truth_tsv(const GroundTruth& truth);

/// Materialises a tree under `root` (must not exist), with mtimes set.
void write_tree(const Tree& tree, const std::filesystem::path& root);

/// Writes baseline/, after/, ground_truth.tsv, manifest.md5 and alert.md5
/// into a temporary sibling of `out` and renames it into place.
void write_corpus(const std::filesystem::path& out, std::uint64_t seed, int sequence_id, bool noise,
                  const SynthOptions& options = {});

// ---- minimal SQLite writer ---------------------------------------------------

struct SqlRow {
  std::int64_t rowid = 0;
  std::vector<sqlite::Value> values;
};

/// A two-page database: sqlite_master on page 1, one table leaf on page 2.
/// Every row must fit on that leaf without overflow. Throws Error{BadUsage}.
Bytes write_single_table_db(std::string_view table, std::string_view create_sql,
                            const std::vector<SqlRow>& rows);

/// Minimal Chromium `urls` schema used for History files.
extern const std::string_view kUrlsSchema;

}  // namespace residue::synth
