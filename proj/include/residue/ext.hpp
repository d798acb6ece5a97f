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

#include <array>
#include <string>
#include <vector>

#include "residue/common.hpp"
#include "residue/image.hpp"

namespace residue::ext {

inline constexpr std::uint16_t kMagic = 0xEF53;
inline constexpr std::uint32_t kRootInode = 2;

namespace feature {
inline constexpr std::uint32_t kCompatHasJournal = 0x0004;
inline constexpr std::uint32_t kCompatDirIndex = 0x0020;
inline constexpr std::uint32_t kIncompatCompression = 0x0001;
inline constexpr std::uint32_t kIncompatFiletype = 0x0002;
inline constexpr std::uint32_t kIncompatRecover = 0x0004;
inline constexpr std::uint32_t kIncompatJournalDev = 0x0008;
inline constexpr std::uint32_t kIncompatMetaBg = 0x0010;
inline constexpr std::uint32_t kIncompatExtents = 0x0040;
inline constexpr std::uint32_t kIncompat64Bit = 0x0080;
inline constexpr std::uint32_t kIncompatMmp = 0x0100;
inline constexpr std::uint32_t kIncompatFlexBg = 0x0200;
inline constexpr std::uint32_t kIncompatEaInode = 0x0400;
inline constexpr std::uint32_t kIncompatDirData = 0x1000;
inline constexpr std::uint32_t kIncompatCsumSeed = 0x2000;
inline constexpr std::uint32_t kIncompatLargeDir = 0x4000;
inline constexpr std::uint32_t kIncompatInlineData = 0x8000;
inline constexpr std::uint32_t kIncompatEncrypt = 0x10000;
inline constexpr std::uint32_t kRoCompatSparseSuper = 0x0001;
}  // namespace feature

/// Names of the incompat bits, for error messages and feature reports.
std::vector<std::string> incompat_names(std::uint32_t bits);
std::vector<std::string> compat_names(std::uint32_t bits);
std::vector<std::string> ro_compat_names(std::uint32_t bits);

struct Superblock {
  std::uint16_t magic = 0;
  std::uint32_t block_size = 0;
  std::uint32_t inode_count = 0;
  std::uint64_t block_count = 0;
  std::uint32_t first_data_block = 0;
  std::uint32_t blocks_per_group = 0;
  std::uint32_t inodes_per_group = 0;
  std::uint16_t inode_size = 128;
  std::uint32_t rev_level = 0;
  std::uint32_t feature_compat = 0;
  std::uint32_t feature_incompat = 0;
  std::uint32_t feature_ro_compat = 0;
  std::uint16_t desc_size = 32;
  std::string volume_name;

  bool has_extents() const { return feature_incompat & feature::kIncompatExtents; }
  bool is_64bit() const { return feature_incompat & feature::kIncompat64Bit; }
  bool has_filetype() const { return feature_incompat & feature::kIncompatFiletype; }
  bool has_journal() const { return feature_compat & feature::kCompatHasJournal; }
};

/// Decodes the 1024-byte superblock image; does not validate features.
Superblock decode_superblock(ByteView raw);

enum class FileType { Regular, Directory, Symlink, CharDevice, BlockDevice, Fifo, Socket, Unknown };

std::string_view to_string(FileType t);

struct Inode {
  std::uint32_t number = 0;
  std::uint16_t mode = 0;
  std::uint64_t size_bytes = 0;
  std::int64_t atime = 0;
  std::int64_t ctime = 0;
  std::int64_t mtime = 0;
  std::int64_t dtime = 0;
  std::uint16_t links = 0;
  std::uint64_t blocks_512 = 0;
  std::uint32_t flags = 0;
  std::uint32_t file_acl = 0;
  std::array<std::uint8_t, 60> block{};

  static constexpr std::uint32_t kExtentsFlag = 0x80000;
  static constexpr std::uint32_t kInlineDataFlag = 0x10000000;

  FileType type() const;
  bool uses_extents() const { return flags & kExtentsFlag; }
  std::uint32_t block_ptr(std::size_t i) const { return le32(block, i * 4); }
};

struct DirEntry {
  std::uint32_t inode = 0;
  std::string name;
  std::optional<std::uint8_t> file_type;
};

/// A walked file-system object. Symlink targets are carried in
/// `symlink_target`; they are never followed.
struct ExtRecord {
  std::string path;
  std::uint32_t inode = 0;
  std::uint64_t size_bytes = 0;
  std::int64_t mtime = 0;
  std::int64_t atime = 0;
  std::int64_t ctime = 0;
  FileType type = FileType::Unknown;
  Allocation allocation = Allocation::Allocated;
  std::uint16_t links = 0;
  std::string symlink_target;
};

struct ExtListing {
  std::vector<ExtRecord> records;
  std::vector<std::string> warnings;
};

/// Parses directory entries from one directory block. Malformed entries end
/// the block and are reported through `corrupt`.
std::vector<DirEntry> parse_dir_block(ByteView block, bool has_filetype, bool& corrupt);

class ExtVolume {
 public:
  /// Throws Error{BadMagic} or Error{UnsupportedFeature}.
  static ExtVolume mount(const img::Region& region);

  const Superblock& superblock() const { return sb_; }
  std::uint32_t group_count() const { return static_cast<std::uint32_t>(inode_tables_.size()); }
  const std::vector<std::string>& warnings() const { return warnings_; }
  /// Human-readable feature names seen in the superblock.
  std::vector<std::string> features() const;

  Inode read_inode(std::uint32_t number) const;

  /// Full content of an inode (regular file, directory or slow symlink).
  /// Holes read as zeros. Errors leave a zero-filled remainder and set
  /// the error field.
  ReadResult read_inode_data(const Inode& inode) const;

  ExtListing walk() const;
  ReadResult read(const ExtRecord& rec) const;

 private:
  explicit ExtVolume(img::Region region) : region_(std::move(region)) {}

  struct Mapping {
    std::uint64_t logical = 0;
    std::uint64_t physical = 0;
    std::uint64_t count = 0;
    bool zero = false;
  };
  void map_extents(ByteView node, std::uint64_t blocks_needed, std::vector<Mapping>& out,
                   int depth_budget, std::optional<Errc>& error, std::string& msg) const;
  void map_indirect(std::uint32_t block, int level, std::uint64_t& logical,
                    std::uint64_t blocks_needed, std::vector<Mapping>& out,
                    std::optional<Errc>& error, std::string& msg) const;
  Bytes read_block(std::uint64_t block) const;
  std::string symlink_target(const Inode& inode, std::optional<Errc>& error) const;
  void walk_dir(std::uint32_t dir_inode, const std::string& parent, ExtListing& out,
                std::vector<std::uint32_t>& ancestry) const;

  img::Region region_;
  Superblock sb_;
  std::vector<std::uint64_t> inode_tables_;
  std::vector<std::string> warnings_;
};

ExtVolume mount_ext(const img::RawImage& image, const img::PartitionEntry& part);
ExtListing walk_ext(const ExtVolume& vol);
ReadResult read_ext_file(const ExtVolume& vol, const ExtRecord& rec);

}  // namespace residue::ext
