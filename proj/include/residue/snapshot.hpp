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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "residue/common.hpp"
#include "residue/image.hpp"

namespace residue::snap {

enum class Kind { File, Dir, Symlink };

std::string_view to_string(Kind k);
std::optional<Kind> kind_from_string(std::string_view s);

struct RecordKey {
  std::string volume_id;
  std::string path;
  auto operator<=>(const RecordKey&) const = default;
};

struct FileRecord {
  std::string volume_id;
  std::string path;
  std::uint64_t size_bytes = 0;
  std::optional<std::int64_t> mtime;
  Allocation allocation = Allocation::Allocated;
  std::optional<std::string> md5;
  std::optional<std::string> sha1;
  Kind kind = Kind::File;
  std::optional<std::string> warning;

  RecordKey key() const { return {volume_id, path}; }
  bool operator==(const FileRecord&) const = default;
};

struct Snapshot {
  std::string label = "unlabeled";
  std::int64_t created_at = 0;  // unix seconds, UTC
  std::map<RecordKey, FileRecord> records;

  bool operator==(const Snapshot&) const = default;
};

/// One object a source can enumerate.
struct SourceEntry {
  std::string path;
  Kind kind = Kind::File;
  std::uint64_t size_bytes = 0;
  std::optional<std::int64_t> mtime;
  Allocation allocation = Allocation::Allocated;
  std::optional<std::string> note;
};

/// A readable file-system view: a mounted volume or a plain directory tree.
/// `read` must be safe to call concurrently for distinct entries.
class Source {
 public:
  virtual ~Source() = default;
  virtual const std::string& volume_id() const = 0;
  virtual const std::vector<SourceEntry>& entries() const = 0;
  virtual ReadResult read(std::size_t index) const = 0;
  virtual const std::vector<std::string>& warnings() const = 0;

  /// Index of the allocated entry at `path`, if any.
  std::optional<std::size_t> find(std::string_view path) const;
  /// Convenience: content of the allocated entry at `path`.
  std::optional<ReadResult> read_path(std::string_view path) const;
};

/// Directory tree rooted at `root`; paths are rendered relative to it with a
/// leading '/'. Symlinks are recorded with their target as content and
/// never followed.
std::unique_ptr<Source> open_directory(const std::filesystem::path& root,
                                       std::string volume_id = "tree");

/// Every supported volume in a raw image. Flat FAT or ext images are
/// recognised directly; otherwise the MBR is parsed and each partition is
/// probed (FAT first, then ext). Volume ids are "fat<N>"/"ext<N>" by
/// partition index, or "fat"/"ext" for flat images.
struct ImageSources {
  std::vector<std::unique_ptr<Source>> sources;
  std::vector<std::string> warnings;
};
ImageSources open_image_sources(const img::RawImage& image, bool include_deleted = true);

/// Opens a directory or an image file.
ImageSources open_sources(const std::filesystem::path& path, bool include_deleted = true);

struct BuildOptions {
  unsigned threads = 1;
  std::int64_t created_at = 0;
};

Snapshot build_snapshot(const std::vector<const Source*>& sources, const std::string& label,
                        const BuildOptions& options = {});
Snapshot build_snapshot(const Source& source, const std::string& label,
                        const BuildOptions& options = {});

/// Line-oriented serialization (see docs/formats.md).
std::string serialize(const Snapshot& s);
/// Throws Error{MalformedLine} or Error{DuplicateKey}, with line numbers.
Snapshot parse_snapshot(std::string_view text);

void save_snapshot(const Snapshot& s, const std::filesystem::path& path);
Snapshot load_snapshot(const std::filesystem::path& path);

/// Writes `content` to a temporary sibling and renames it into place.
/// Throws Error{WriteFailure}.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
/// Throws Error{NotFound} or Error{Unreadable}.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace residue::snap
