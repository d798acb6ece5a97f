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
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "residue/common.hpp"

namespace residue::img {

inline constexpr std::uint32_t kSectorSize = 512;

/// Read-only handle to a raw (dd-style) image file. Copies share the
/// underlying descriptor; reads use positional I/O and are safe from any
/// thread.
class RawImage {
 public:
  /// Throws Error{NotFound} or Error{Unreadable}.
  static RawImage open(const std::filesystem::path& path);

  const std::filesystem::path& path() const;
  std::uint64_t size_bytes() const;
  std::uint64_t sector_count() const { return size_bytes() / kSectorSize; }
  const std::vector<std::string>& warnings() const;

  /// Fills `out` from `offset`. Throws Error{OutOfBounds} if the range
  /// extends past the end of the image.
  void read(std::uint64_t offset, std::span<std::uint8_t> out) const;
  Bytes read(std::uint64_t offset, std::size_t length) const;
  Bytes read_sector(std::uint64_t lba) const;

 private:
  struct Handle;
  explicit RawImage(std::shared_ptr<const Handle> h) : handle_(std::move(h)) {}
  std::shared_ptr<const Handle> handle_;
};

/// A bounded window onto an image, typically one partition.
class Region {
 public:
  Region(RawImage image, std::uint64_t offset, std::uint64_t length);
  static Region whole(const RawImage& image) { return Region(image, 0, image.size_bytes()); }

  const RawImage& image() const { return image_; }
  std::uint64_t offset() const { return offset_; }
  std::uint64_t length() const { return length_; }

  void read(std::uint64_t offset, std::span<std::uint8_t> out) const;
  Bytes read(std::uint64_t offset, std::size_t length) const;

 private:
  RawImage image_;
  std::uint64_t offset_;
  std::uint64_t length_;
};

struct PartitionEntry {
  int index = 0;
  bool bootable = false;
  std::uint8_t status = 0;
  std::uint8_t type_code = 0;
  std::uint32_t start_lba = 0;
  std::uint32_t sector_count = 0;
  /// False when the entry's extent runs past the end of the image.
  bool valid = true;

  bool is_extended() const {
    return type_code == 0x05 || type_code == 0x0F || type_code == 0x85;
  }
  bool operator==(const PartitionEntry&) const = default;
};

struct PartitionTable {
  std::vector<PartitionEntry> entries;
  bool boot_code_present = false;
  std::array<std::uint8_t, 4> disk_signature{};

  bool operator==(const PartitionTable&) const = default;

  /// Stable line-oriented rendering used by `img partitions`.
  std::string to_text() const;
};

/// Decodes the four primary entries of sector 0. Zeroed entries are omitted.
/// Throws Error{ShortImage} or Error{BadSignature}.
PartitionTable parse_mbr(const RawImage& image);
PartitionTable parse_mbr(ByteView sector0, std::uint64_t image_sectors);

/// Region covering a partition, clamped to the image for invalid entries.
Region partition_region(const RawImage& image, const PartitionEntry& part);

}  // namespace residue::img
