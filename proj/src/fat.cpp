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

#include "residue/fat.hpp"

#include <algorithm>

namespace residue::fat {

std::string_view to_string(Variant v) { return v == Variant::Fat12 ? "FAT12" : "FAT16"; }

std::uint8_t lfn_checksum(ByteView short_name11) {
  std::uint8_t sum = 0;
  for (std::size_t i = 0; i < 11; ++i) {
    sum = static_cast<std::uint8_t>(((sum & 1) ? 0x80 : 0) + (sum >> 1) + short_name11[i]);
  }
  return sum;
}

namespace {

bool power_of_two(unsigned v) { return v != 0 && (v & (v - 1)) == 0; }

std::string trim_right_spaces(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// UCS-2 code units from one long-name slot, in name order.
void lfn_units(ByteView e, std::vector<std::uint16_t>& units) {
  static constexpr std::size_t offsets[] = {1, 3, 5, 7, 9, 14, 16, 18, 20, 22, 24, 28, 30};
  for (auto off : offsets) units.push_back(le16(e, off));
}

std::string units_to_utf8(const std::vector<std::uint16_t>& units) {
  std::string out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const std::uint16_t u = units[i];
    if (u == 0x0000) break;
    if (u == 0xFFFF) continue;
    if (u >= 0xD800 && u <= 0xDBFF && i + 1 < units.size() && units[i + 1] >= 0xDC00 &&
        units[i + 1] <= 0xDFFF) {
      const std::uint32_t cp = 0x10000 + ((u - 0xD800u) << 10) + (units[i + 1] - 0xDC00u);
      append_utf8(out, cp);
      ++i;
      continue;
    }
    append_utf8(out, u);
  }
  return out;
}

std::string decode_short_name(ByteView e, std::uint8_t first_byte) {
  std::string base(reinterpret_cast<const char*>(e.data()), 8);
  std::string ext(reinterpret_cast<const char*>(e.data() + 8), 3);
  base[0] = static_cast<char>(first_byte);
  base = trim_right_spaces(base);
  ext = trim_right_spaces(ext);
  const std::uint8_t case_flags = e[12];
  if (case_flags & 0x08) base = to_lower(base);
  if (case_flags & 0x10) ext = to_lower(ext);
  return ext.empty() ? base : base + "." + ext;
}

NaiveTime decode_time(std::uint16_t time, std::uint16_t date) {
  NaiveTime t;
  const int year = 1980 + (date >> 9);
  const unsigned month = (date >> 5) & 0x0F;
  const unsigned day = date & 0x1F;
  if (!valid_civil(year, month, day)) return t;
  const unsigned h = time >> 11;
  const unsigned m = (time >> 5) & 0x3F;
  const unsigned s = (time & 0x1F) * 2u;
  t.seconds = days_from_civil(year, month, day) * 86400 + h * 3600 + m * 60 + s;
  return t;
}

struct PendingLfn {
  std::vector<Bytes> slots;  // physical order
  bool deleted = false;
  void clear() {
    slots.clear();
    deleted = false;
  }
};

}  // namespace

FatVolume FatVolume::mount(const img::Region& region) {
  if (region.length() < 512) throw Error(Errc::BadBpb, "partition shorter than one boot sector");
  const Bytes bs = region.read(0, 512);
  FatVolume v(region);
  v.bytes_per_sector_ = le16(bs, 11);
  v.sectors_per_cluster_ = bs[13];
  v.reserved_sectors_ = le16(bs, 14);
  v.fat_count_ = bs[16];
  v.root_entry_count_ = le16(bs, 17);
  const std::uint16_t total16 = le16(bs, 19);
  const std::uint16_t fat_size16 = le16(bs, 22);
  const std::uint32_t total32 = le32(bs, 32);

  const auto bps = v.bytes_per_sector_;
  if (bps != 512 && bps != 1024 && bps != 2048 && bps != 4096) {
    throw Error(Errc::BadBpb, "bytes_per_sector " + std::to_string(bps) + " not in {512,1024,2048,4096}");
  }
  if (!power_of_two(v.sectors_per_cluster_)) {
    throw Error(Errc::BadBpb, "sectors_per_cluster " + std::to_string(v.sectors_per_cluster_) +
                                  " is not a power of two");
  }
  if (v.reserved_sectors_ == 0) throw Error(Errc::BadBpb, "reserved sector count is zero");
  if (v.fat_count_ == 0) throw Error(Errc::BadBpb, "FAT count is zero");
  if (fat_size16 == 0 || v.root_entry_count_ == 0) {
    throw Error(Errc::UnsupportedVariant, "FAT32 volume (16-bit FAT size is zero)");
  }
  v.sectors_per_fat_ = fat_size16;
  v.total_sectors_ = total16 != 0 ? total16 : total32;
  if (v.total_sectors_ == 0) throw Error(Errc::BadBpb, "total sector count is zero");

  const std::uint64_t root_dir_sectors =
      (static_cast<std::uint64_t>(v.root_entry_count_) * 32 + bps - 1) / bps;
  const std::uint64_t meta_sectors = v.reserved_sectors_ +
                                     static_cast<std::uint64_t>(v.fat_count_) * v.sectors_per_fat_ +
                                     root_dir_sectors;
  if (meta_sectors >= v.total_sectors_) {
    throw Error(Errc::BadBpb, "metadata regions exceed the volume's sector count");
  }
  v.cluster_count_ =
      static_cast<std::uint32_t>((v.total_sectors_ - meta_sectors) / v.sectors_per_cluster_);
  if (v.cluster_count_ < 4085) {
    v.variant_ = Variant::Fat12;
  } else if (v.cluster_count_ < 65525) {
    v.variant_ = Variant::Fat16;
  } else {
    throw Error(Errc::UnsupportedVariant,
                "cluster count " + std::to_string(v.cluster_count_) + " implies FAT32");
  }

  v.fat_offset_ = static_cast<std::uint64_t>(v.reserved_sectors_) * bps;
  v.root_dir_offset_ =
      v.fat_offset_ + static_cast<std::uint64_t>(v.fat_count_) * v.sectors_per_fat_ * bps;
  v.data_offset_ = v.root_dir_offset_ + root_dir_sectors * bps;
  if (v.data_offset_ > region.length()) {
    throw Error(Errc::BadBpb, "data region starts beyond the partition end");
  }
  const std::uint64_t fat_bytes = static_cast<std::uint64_t>(v.sectors_per_fat_) * bps;
  const std::uint64_t needed =
      v.variant_ == Variant::Fat12 ? (static_cast<std::uint64_t>(v.cluster_count_) + 2) * 3 / 2 + 1
                                   : (static_cast<std::uint64_t>(v.cluster_count_) + 2) * 2;
  if (fat_bytes < needed) throw Error(Errc::BadBpb, "FAT too small for the cluster count");
  v.fat_ = region.read(v.fat_offset_, static_cast<std::size_t>(fat_bytes));

  if (bs[38] == 0x29) {
    v.volume_label_ = trim_right_spaces(std::string(reinterpret_cast<const char*>(&bs[43]), 11));
  }
  return v;
}

std::uint32_t FatVolume::fat_entry(std::uint32_t cluster) const {
  if (variant_ == Variant::Fat12) {
    const std::size_t off = cluster + cluster / 2;
    if (off + 1 >= fat_.size()) return 0;
    const std::uint16_t v = le16(fat_, off);
    return (cluster & 1) ? (v >> 4) : (v & 0x0FFF);
  }
  const std::size_t off = static_cast<std::size_t>(cluster) * 2;
  if (off + 1 >= fat_.size()) return 0;
  return le16(fat_, off);
}

bool FatVolume::is_end_of_chain(std::uint32_t value) const {
  return variant_ == Variant::Fat12 ? value >= 0xFF8 : value >= 0xFFF8;
}

Bytes FatVolume::read_chain(std::uint32_t first, std::uint64_t limit, std::optional<Errc>& error,
                            std::string& message) const {
  Bytes out;
  const std::uint32_t cs = cluster_size();
  std::vector<bool> seen(cluster_count_ + 2, false);
  std::uint32_t c = first;
  while (out.size() < limit) {
    if (!valid_cluster(c)) {
      error = Errc::BrokenChain;
      message = "cluster chain reached invalid cluster " + std::to_string(c) + " after " +
                std::to_string(out.size()) + " bytes";
      return out;
    }
    if (seen[c]) {
      error = Errc::CycleDetected;
      message = "cluster chain loops back to cluster " + std::to_string(c);
      return out;
    }
    seen[c] = true;
    const std::uint64_t off = data_offset_ + static_cast<std::uint64_t>(c - 2) * cs;
    const std::uint64_t want = std::min<std::uint64_t>(cs, limit - out.size());
    if (off + want > region_.length()) {
      error = Errc::BrokenChain;
      message = "cluster " + std::to_string(c) + " lies beyond the partition end";
      return out;
    }
    const std::size_t old = out.size();
    out.resize(old + static_cast<std::size_t>(want));
    region_.read(off, std::span<std::uint8_t>(out.data() + old, static_cast<std::size_t>(want)));
    if (out.size() >= limit) break;
    const std::uint32_t next = fat_entry(c);
    if (is_end_of_chain(next)) {
      if (limit != UINT64_MAX) {
        error = Errc::BrokenChain;
        message = "chain ended after " + std::to_string(out.size()) + " of " +
                  std::to_string(limit) + " bytes";
      }
      return out;
    }
    c = next;
  }
  return out;
}

void FatVolume::list_directory(const Bytes& dir, const std::string& parent, bool include_deleted,
                               FatListing& out, std::vector<std::uint32_t>& ancestry) const {
  PendingLfn lfn;
  for (std::size_t pos = 0; pos + 32 <= dir.size(); pos += 32) {
    const ByteView e(dir.data() + pos, 32);
    const std::uint8_t b0 = e[0];
    if (b0 == 0x00) break;
    const std::uint8_t attributes = e[11];

    if ((attributes & 0x3F) == attr::kLongName) {
      const bool deleted = b0 == 0xE5;
      if (deleted != lfn.deleted || (!deleted && (b0 & 0x40))) lfn.clear();
      lfn.deleted = deleted;
      lfn.slots.emplace_back(e.begin(), e.end());
      continue;
    }
    if (attributes & attr::kVolumeId) {
      lfn.clear();
      continue;
    }
    if (b0 == '.' && (e[1] == ' ' || e[1] == '.')) {
      lfn.clear();
      continue;
    }

    const bool deleted = b0 == 0xE5;
    if (deleted && !include_deleted) {
      lfn.clear();
      continue;
    }

    FatFileRecord rec;
    rec.attributes = attributes;
    rec.allocation = deleted ? Allocation::Deleted : Allocation::Allocated;
    rec.size_bytes = le32(e, 28);
    rec.first_cluster = le16(e, 26);
    rec.mtime = decode_time(le16(e, 22), le16(e, 24));

    std::uint8_t first_char = b0 == 0x05 ? 0xE5 : b0;
    if (deleted) first_char = '_';

    // Long-name slots are stored last-first; name order is the reverse.
    if (!lfn.slots.empty() && lfn.deleted == deleted) {
      std::vector<std::uint16_t> units;
      bool consistent = true;
      const std::size_t n = lfn.slots.size();
      std::array<std::uint8_t, 11> name11{};
      std::copy_n(e.begin(), 11, name11.begin());
      if (!deleted) {
        const std::uint8_t sum = lfn_checksum(name11);
        for (std::size_t i = 0; i < n; ++i) {
          const auto& slot = lfn.slots[n - 1 - i];
          if ((slot[0] & 0x3F) != i + 1 || slot[13] != sum) consistent = false;
        }
        if (!(lfn.slots.front()[0] & 0x40)) consistent = false;
      } else {
        // The first name byte was overwritten; accept the long name if some
        // first byte reproduces the stored checksum.
        const std::uint8_t stored = lfn.slots.front()[13];
        consistent = false;
        for (int c = 0x20; c < 0x100 && !consistent; ++c) {
          name11[0] = static_cast<std::uint8_t>(c);
          if (lfn_checksum(name11) == stored) {
            consistent = true;
            first_char = static_cast<std::uint8_t>(c);
          }
        }
        for (const auto& slot : lfn.slots) {
          if (slot[13] != stored) consistent = false;
        }
        if (!consistent) first_char = '_';
      }
      rec.short_name = decode_short_name(e, first_char);
      if (consistent) {
        for (std::size_t i = 0; i < n; ++i) lfn_units(lfn.slots[n - 1 - i], units);
        rec.long_name = units_to_utf8(units);
      } else {
        out.warnings.push_back("long-name checksum mismatch for " + parent + "/" +
                               rec.short_name + "; using 8.3 name");
      }
    } else {
      rec.short_name = decode_short_name(e, first_char);
    }
    lfn.clear();

    const std::string& name = rec.long_name && !rec.long_name->empty() ? *rec.long_name
                                                                       : rec.short_name;
    rec.path = parent + "/" + name;
    if (rec.is_directory()) rec.size_bytes = 0;
    out.records.push_back(rec);

    if (rec.is_directory() && !deleted) {
      if (!valid_cluster(rec.first_cluster)) {
        out.warnings.push_back("directory " + rec.path + " has invalid first cluster " +
                               std::to_string(rec.first_cluster));
        continue;
      }
      if (std::find(ancestry.begin(), ancestry.end(), rec.first_cluster) != ancestry.end()) {
        out.warnings.push_back(std::string(errc_name(Errc::CycleDetected)) + ": directory " +
                               rec.path + " refers back to an ancestor; not descended");
        continue;
      }
      std::optional<Errc> err;
      std::string msg;
      const Bytes sub = read_chain(rec.first_cluster, UINT64_MAX, err, msg);
      if (err) {
        out.warnings.push_back(std::string(errc_name(*err)) + " in directory " + rec.path + ": " +
                               msg + "; listing truncated");
      }
      ancestry.push_back(rec.first_cluster);
      list_directory(sub, rec.path, include_deleted, out, ancestry);
      ancestry.pop_back();
    }
  }
}

FatListing FatVolume::walk(bool include_deleted) const {
  FatListing out;
  const Bytes root = region_.read(root_dir_offset_, static_cast<std::size_t>(root_entry_count_) * 32);
  std::vector<std::uint32_t> ancestry;
  list_directory(root, "", include_deleted, out, ancestry);
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const FatFileRecord& a, const FatFileRecord& b) {
                     if (a.path != b.path) return a.path < b.path;
                     return a.allocation < b.allocation;
                   });
  return out;
}

ReadResult FatVolume::read(const FatFileRecord& rec) const {
  ReadResult r;
  if (rec.is_directory()) {
    r.error = Errc::Unreadable;
    r.message = rec.path + " is a directory";
    return r;
  }
  if (rec.size_bytes == 0) return r;
  if (rec.allocation == Allocation::Deleted) {
    r.best_effort = true;
    if (!valid_cluster(rec.first_cluster)) {
      r.error = Errc::BrokenChain;
      r.message = "deleted file has invalid first cluster";
      return r;
    }
    const std::uint64_t cs = cluster_size();
    const std::uint64_t available =
        (static_cast<std::uint64_t>(cluster_count_) + 2 - rec.first_cluster) * cs;
    const std::uint64_t want = std::min<std::uint64_t>(rec.size_bytes, available);
    const std::uint64_t off = data_offset_ + (rec.first_cluster - 2ull) * cs;
    const std::uint64_t readable = off < region_.length() ? std::min(want, region_.length() - off) : 0;
    r.bytes = region_.read(off, static_cast<std::size_t>(readable));
    if (readable < rec.size_bytes) {
      r.error = Errc::BrokenChain;
      r.message = "deleted file extends past the data region";
    }
    return r;
  }
  std::optional<Errc> err;
  std::string msg;
  r.bytes = read_chain(rec.first_cluster, rec.size_bytes, err, msg);
  if (err) {
    r.error = Errc::BrokenChain;
    r.message = msg;
  }
  return r;
}

FatVolume mount_fat(const img::RawImage& image, const img::PartitionEntry& part) {
  return FatVolume::mount(img::partition_region(image, part));
}

FatListing walk_fat(const FatVolume& vol, bool include_deleted) { return vol.walk(include_deleted); }

ReadResult read_fat_file(const FatVolume& vol, const FatFileRecord& rec) { return vol.read(rec); }

}  // namespace residue::fat
