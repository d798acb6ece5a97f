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

#include <optional>
#include <string>
#include <vector>

#include "residue/common.hpp"
#include "residue/image.hpp"

namespace residue::fat {

enum class Variant { Fat12, Fat16 };

std::string_view to_string(Variant v);

namespace attr {
inline constexpr std::uint8_t kReadOnly = 0x01;
inline constexpr std::uint8_t kHidden = 0x02;
inline constexpr std::uint8_t kSystem = 0x04;
inline constexpr std::uint8_t kVolumeId = 0x08;
inline constexpr std::uint8_t kDirectory = 0x10;
inline constexpr std::uint8_t kArchive = 0x20;
inline constexpr std::uint8_t kLongName = 0x0F;
}  // namespace attr

/// FAT timestamps carry no zone; seconds are counted as if the wall-clock
/// value were UTC and the record is marked naive.
struct NaiveTime {
  std::int64_t seconds = 0;
  bool naive_local = true;
};

struct FatFileRecord {
  std::string path;
  std::string short_name;
  std::optional<std::string> long_name;
  std::uint32_t size_bytes = 0;
  std::uint8_t attributes = 0;
  NaiveTime mtime;
  std::uint32_t first_cluster = 0;
  Allocation allocation = Allocation::Allocated;

  bool is_directory() const { return (attributes & attr::kDirectory) != 0; }
};

struct FatListing {
  std::vector<FatFileRecord> records;
  std::vector<std::string> warnings;
};

class FatVolume {
 public:
  /// Decodes the BIOS Parameter Block at the start of `region`.
  /// Throws Error{BadBpb} or Error{UnsupportedVariant}.
  static FatVolume mount(const img::Region& region);

  Variant variant() const { return variant_; }
  std::uint16_t bytes_per_sector() const { return bytes_per_sector_; }
  std::uint8_t sectors_per_cluster() const { return sectors_per_cluster_; }
  std::uint8_t fat_count() const { return fat_count_; }
  std::uint16_t root_entry_count() const { return root_entry_count_; }
  std::uint32_t total_sectors() const { return total_sectors_; }
  std::uint32_t cluster_count() const { return cluster_count_; }
  std::uint64_t fat_offset() const { return fat_offset_; }
  std::uint64_t root_dir_offset() const { return root_dir_offset_; }
  std::uint64_t data_offset() const { return data_offset_; }
  std::uint32_t cluster_size() const {
    return static_cast<std::uint32_t>(bytes_per_sector_) * sectors_per_cluster_;
  }
  const std::string& volume_label() const { return volume_label_; }

  /// Recursive listing in bytewise path order.
  FatListing walk(bool include_deleted) const;

  /// Content of a file record. Deleted files are read best-effort as a
  /// contiguous run from their first cluster.
  ReadResult read(const FatFileRecord& rec) const;

  /// Next cluster in the chain, or nullopt for end-of-chain / free / bad.
  std::uint32_t fat_entry(std::uint32_t cluster) const;

 private:
  explicit FatVolume(img::Region region) : region_(std::move(region)) {}

  struct RawEntry;
  void list_directory(const Bytes& dir, const std::string& parent, bool include_deleted,
                      FatListing& out, std::vector<std::uint32_t>& ancestry) const;
  Bytes read_chain(std::uint32_t first, std::uint64_t limit, std::optional<Errc>& error,
                   std::string& message) const;
  bool is_end_of_chain(std::uint32_t value) const;
  bool valid_cluster(std::uint32_t c) const { return c >= 2 && c < cluster_count_ + 2; }

  img::Region region_;
  Variant variant_ = Variant::Fat16;
  std::uint16_t bytes_per_sector_ = 0;
  std::uint8_t sectors_per_cluster_ = 0;
  std::uint16_t reserved_sectors_ = 0;
  std::uint8_t fat_count_ = 0;
  std::uint16_t root_entry_count_ = 0;
  std::uint32_t total_sectors_ = 0;
  std::uint32_t sectors_per_fat_ = 0;
  std::uint32_t cluster_count_ = 0;
  std::uint64_t fat_offset_ = 0;
  std::uint64_t root_dir_offset_ = 0;
  std::uint64_t data_offset_ = 0;
  std::string volume_label_;
  Bytes fat_;
};

FatVolume mount_fat(const img::RawImage& image, const img::PartitionEntry& part);
FatListing walk_fat(const FatVolume& vol, bool include_deleted);
ReadResult read_fat_file(const FatVolume& vol, const FatFileRecord& rec);

/// Checksum of an 11-byte short name, as stored in long-name entries.
std::uint8_t lfn_checksum(ByteView short_name11);

}  // namespace residue::fat
