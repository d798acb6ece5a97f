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

#include "residue/ext.hpp"

#include <algorithm>
#include <cstring>

namespace residue::ext {

namespace {

struct FlagName {
  std::uint32_t bit;
  const char* name;
};

constexpr FlagName kIncompatNames[] = {
    {feature::kIncompatCompression, "compression"}, {feature::kIncompatFiletype, "filetype"},
    {feature::kIncompatRecover, "needs_recovery"},  {feature::kIncompatJournalDev, "journal_dev"},
    {feature::kIncompatMetaBg, "meta_bg"},          {feature::kIncompatExtents, "extent"},
    {feature::kIncompat64Bit, "64bit"},             {feature::kIncompatMmp, "mmp"},
    {feature::kIncompatFlexBg, "flex_bg"},          {feature::kIncompatEaInode, "ea_inode"},
    {feature::kIncompatDirData, "dirdata"},         {feature::kIncompatCsumSeed, "metadata_csum_seed"},
    {feature::kIncompatLargeDir, "large_dir"},      {feature::kIncompatInlineData, "inline_data"},
    {feature::kIncompatEncrypt, "encrypt"},
};

constexpr FlagName kCompatNames[] = {
    {0x0001, "dir_prealloc"}, {0x0002, "imagic_inodes"}, {0x0004, "has_journal"},
    {0x0008, "ext_attr"},     {0x0010, "resize_inode"},  {0x0020, "dir_index"},
    {0x0200, "sparse_super2"},
};

constexpr FlagName kRoCompatNames[] = {
    {0x0001, "sparse_super"}, {0x0002, "large_file"},   {0x0008, "huge_file"},
    {0x0010, "uninit_bg"},    {0x0020, "dir_nlink"},    {0x0040, "extra_isize"},
    {0x0100, "quota"},        {0x0200, "bigalloc"},     {0x0400, "metadata_csum"},
    {0x1000, "read-only"},    {0x2000, "project"},
};

template <std::size_t N>
std::vector<std::string> names_of(std::uint32_t bits, const FlagName (&table)[N]) {
  std::vector<std::string> out;
  std::uint32_t known = 0;
  for (const auto& f : table) {
    known |= f.bit;
    if (bits & f.bit) out.emplace_back(f.name);
  }
  for (int i = 0; i < 32; ++i) {
    const std::uint32_t bit = 1u << i;
    if ((bits & bit) && !(known & bit)) {
      char buf[24];
      std::snprintf(buf, sizeof buf, "unknown(0x%x)", bit);
      out.emplace_back(buf);
    }
  }
  return out;
}

// Incompat bits this reader understands. needs_recovery is tolerated with a
// warning because the journal is never replayed; flex_bg only moves
// metadata that the group descriptors already locate.
constexpr std::uint32_t kSupportedIncompat = feature::kIncompatFiletype | feature::kIncompatRecover |
                                             feature::kIncompatExtents | feature::kIncompat64Bit |
                                             feature::kIncompatFlexBg;

constexpr std::uint16_t kExtentMagic = 0xF30A;

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

}  // namespace

std::vector<std::string> incompat_names(std::uint32_t bits) { return names_of(bits, kIncompatNames); }
std::vector<std::string> compat_names(std::uint32_t bits) { return names_of(bits, kCompatNames); }
std::vector<std::string> ro_compat_names(std::uint32_t bits) { return names_of(bits, kRoCompatNames); }

std::string_view to_string(FileType t) {
  switch (t) {
    case FileType::Regular: return "file";
    case FileType::Directory: return "dir";
    case FileType::Symlink: return "symlink";
    case FileType::CharDevice: return "chardev";
    case FileType::BlockDevice: return "blockdev";
    case FileType::Fifo: return "fifo";
    case FileType::Socket: return "socket";
    case FileType::Unknown: break;
  }
  return "unknown";
}

FileType Inode::type() const {
  switch (mode & 0xF000) {
    case 0x8000: return FileType::Regular;
    case 0x4000: return FileType::Directory;
    case 0xA000: return FileType::Symlink;
    case 0x2000: return FileType::CharDevice;
    case 0x6000: return FileType::BlockDevice;
    case 0x1000: return FileType::Fifo;
    case 0xC000: return FileType::Socket;
    default: return FileType::Unknown;
  }
}

Superblock decode_superblock(ByteView raw) {
  Superblock sb;
  sb.inode_count = le32(raw, 0);
  sb.block_count = le32(raw, 4);
  sb.first_data_block = le32(raw, 20);
  const std::uint32_t log_bs = le32(raw, 24);
  sb.block_size = log_bs <= 6 ? (1024u << log_bs) : 0;
  sb.blocks_per_group = le32(raw, 32);
  sb.inodes_per_group = le32(raw, 40);
  sb.magic = le16(raw, 56);
  sb.rev_level = le32(raw, 76);
  if (sb.rev_level >= 1) sb.inode_size = le16(raw, 88);
  sb.feature_compat = le32(raw, 92);
  sb.feature_incompat = le32(raw, 96);
  sb.feature_ro_compat = le32(raw, 100);
  sb.volume_name = std::string(reinterpret_cast<const char*>(raw.data() + 120), 16);
  sb.volume_name.resize(std::strlen(sb.volume_name.c_str()));
  if (sb.is_64bit()) {
    sb.desc_size = le16(raw, 254);
    sb.block_count |= static_cast<std::uint64_t>(le32(raw, 336)) << 32;
  }
  if (!sb.is_64bit() || sb.desc_size < 32) sb.desc_size = 32;
  return sb;
}

std::vector<DirEntry> parse_dir_block(ByteView block, bool has_filetype, bool& corrupt) {
  std::vector<DirEntry> out;
  corrupt = false;
  std::size_t pos = 0;
  while (pos + 8 <= block.size()) {
    const std::uint32_t inode = le32(block, pos);
    const std::uint16_t rec_len = le16(block, pos + 4);
    const std::size_t name_len = has_filetype ? block[pos + 6] : le16(block, pos + 6);
    if (rec_len < 8 || rec_len % 4 != 0 || rec_len < 8 + name_len || pos + rec_len > block.size()) {
      corrupt = true;
      break;
    }
    if (inode != 0) {
      DirEntry e;
      e.inode = inode;
      e.name.assign(reinterpret_cast<const char*>(block.data() + pos + 8), name_len);
      if (has_filetype) e.file_type = block[pos + 7];
      out.push_back(std::move(e));
    }
    pos += rec_len;
  }
  return out;
}

ExtVolume ExtVolume::mount(const img::Region& region) {
  if (region.length() < 2048) throw Error(Errc::BadMagic, "partition shorter than 2048 bytes");
  ExtVolume v(region);
  const Bytes raw = region.read(1024, 1024);
  v.sb_ = decode_superblock(raw);
  auto& sb = v.sb_;
  if (sb.magic != kMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "superblock magic 0x%04x, expected 0xef53", sb.magic);
    throw Error(Errc::BadMagic, buf);
  }
  if (const std::uint32_t unsupported = sb.feature_incompat & ~kSupportedIncompat) {
    throw Error(Errc::UnsupportedFeature,
                "incompatible feature(s) not supported: " + join(incompat_names(unsupported)));
  }
  if (sb.block_size == 0 || sb.blocks_per_group == 0 || sb.inodes_per_group == 0 ||
      sb.inode_size < 128 || (sb.inode_size & (sb.inode_size - 1)) != 0 ||
      sb.inode_size > sb.block_size) {
    throw Error(Errc::BadMagic, "implausible superblock geometry");
  }
  if (sb.has_journal() || (sb.feature_incompat & feature::kIncompatRecover)) {
    v.warnings_.emplace_back(
        std::string("journal present, not replayed") +
        ((sb.feature_incompat & feature::kIncompatRecover) ? " (needs_recovery set)" : ""));
  }
  if (sb.block_count * sb.block_size > region.length()) {
    v.warnings_.emplace_back("file system claims " + std::to_string(sb.block_count) +
                             " blocks but the partition is shorter");
  }

  const std::uint64_t groups =
      (sb.block_count - sb.first_data_block + sb.blocks_per_group - 1) / sb.blocks_per_group;
  const std::uint64_t inode_groups =
      (static_cast<std::uint64_t>(sb.inode_count) + sb.inodes_per_group - 1) / sb.inodes_per_group;
  const std::uint64_t n = std::min(groups, inode_groups);
  if (n == 0 || n > (1u << 24)) throw Error(Errc::BadMagic, "implausible block group count");
  const std::uint64_t gdt_offset = static_cast<std::uint64_t>(sb.first_data_block + 1) * sb.block_size;
  const Bytes gdt = region.read(gdt_offset, static_cast<std::size_t>(n * sb.desc_size));
  v.inode_tables_.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t g = 0; g < n; ++g) {
    const ByteView d(gdt.data() + g * sb.desc_size, sb.desc_size);
    std::uint64_t table = le32(d, 8);
    if (sb.desc_size >= 64) table |= static_cast<std::uint64_t>(le32(d, 0x28)) << 32;
    v.inode_tables_.push_back(table);
  }
  return v;
}

std::vector<std::string> ExtVolume::features() const {
  auto out = compat_names(sb_.feature_compat);
  for (auto& s : incompat_names(sb_.feature_incompat)) out.push_back(s);
  for (auto& s : ro_compat_names(sb_.feature_ro_compat)) out.push_back(s);
  return out;
}

Bytes ExtVolume::read_block(std::uint64_t block) const {
  if (block >= sb_.block_count) {
    throw Error(Errc::BlockOutOfRange, "block " + std::to_string(block) + " beyond block count " +
                                           std::to_string(sb_.block_count));
  }
  return region_.read(block * sb_.block_size, sb_.block_size);
}

Inode ExtVolume::read_inode(std::uint32_t number) const {
  if (number == 0 || number > sb_.inode_count) {
    throw Error(Errc::BlockOutOfRange, "inode " + std::to_string(number) + " out of range");
  }
  const std::uint32_t group = (number - 1) / sb_.inodes_per_group;
  const std::uint32_t index = (number - 1) % sb_.inodes_per_group;
  if (group >= inode_tables_.size()) {
    throw Error(Errc::BlockOutOfRange, "inode " + std::to_string(number) + " in missing group");
  }
  const std::uint64_t off =
      inode_tables_[group] * sb_.block_size + static_cast<std::uint64_t>(index) * sb_.inode_size;
  const Bytes raw = region_.read(off, 128);
  Inode ino;
  ino.number = number;
  ino.mode = le16(raw, 0);
  ino.size_bytes = le32(raw, 4);
  ino.atime = static_cast<std::int32_t>(le32(raw, 8));
  ino.ctime = static_cast<std::int32_t>(le32(raw, 12));
  ino.mtime = static_cast<std::int32_t>(le32(raw, 16));
  ino.dtime = static_cast<std::int32_t>(le32(raw, 20));
  ino.links = le16(raw, 26);
  ino.blocks_512 = le32(raw, 28) | (static_cast<std::uint64_t>(le16(raw, 116)) << 32);
  ino.flags = le32(raw, 32);
  std::copy_n(raw.begin() + 40, 60, ino.block.begin());
  ino.file_acl = le32(raw, 104);
  if (ino.type() == FileType::Regular) {
    ino.size_bytes |= static_cast<std::uint64_t>(le32(raw, 108)) << 32;
  }
  return ino;
}

void ExtVolume::map_extents(ByteView node, std::uint64_t blocks_needed, std::vector<Mapping>& out,
                            int depth_budget, std::optional<Errc>& error, std::string& msg) const {
  if (node.size() < 12 || le16(node, 0) != kExtentMagic) {
    error = Errc::BadExtentNode;
    msg = "extent header magic mismatch";
    return;
  }
  const std::uint16_t entries = le16(node, 2);
  const std::uint16_t max = le16(node, 4);
  const std::uint16_t depth = le16(node, 6);
  if (entries > max || 12 + 12ull * entries > node.size() || depth > depth_budget) {
    error = Errc::BadExtentNode;
    msg = "extent node with " + std::to_string(entries) + " entries (max " + std::to_string(max) +
          ", depth " + std::to_string(depth) + ") is inconsistent";
    return;
  }
  for (std::uint16_t i = 0; i < entries; ++i) {
    const ByteView e = node.subspan(12 + 12 * static_cast<std::size_t>(i), 12);
    if (depth == 0) {
      Mapping m;
      m.logical = le32(e, 0);
      std::uint32_t len = le16(e, 4);
      if (len > 32768) {
        len -= 32768;
        m.zero = true;
      }
      m.count = len;
      m.physical = le32(e, 8) | (static_cast<std::uint64_t>(le16(e, 6)) << 32);
      if (m.logical >= blocks_needed) continue;
      m.count = std::min<std::uint64_t>(m.count, blocks_needed - m.logical);
      out.push_back(m);
    } else {
      const std::uint64_t child = le32(e, 4) | (static_cast<std::uint64_t>(le16(e, 8)) << 32);
      if (le32(e, 0) >= blocks_needed) continue;
      Bytes child_block;
      try {
        child_block = read_block(child);
      } catch (const Error& err) {
        error = err.code();
        msg = err.what();
        return;
      }
      map_extents(child_block, blocks_needed, out, depth - 1, error, msg);
      if (error) return;
    }
  }
}

void ExtVolume::map_indirect(std::uint32_t block, int level, std::uint64_t& logical,
                             std::uint64_t blocks_needed, std::vector<Mapping>& out,
                             std::optional<Errc>& error, std::string& msg) const {
  const std::uint64_t per_block = sb_.block_size / 4;
  std::uint64_t span = 1;
  for (int i = 0; i < level; ++i) span *= per_block;
  if (block == 0) {
    logical += span;
    return;
  }
  Bytes data;
  try {
    data = read_block(block);
  } catch (const Error& err) {
    error = err.code();
    msg = err.what();
    logical += span;
    return;
  }
  for (std::uint64_t i = 0; i < per_block && logical < blocks_needed; ++i) {
    const std::uint32_t ptr = le32(data, static_cast<std::size_t>(i * 4));
    if (level == 1) {
      if (ptr != 0) {
        if (!out.empty() && !out.back().zero && out.back().logical + out.back().count == logical &&
            out.back().physical + out.back().count == ptr) {
          ++out.back().count;
        } else {
          out.push_back(Mapping{logical, ptr, 1, false});
        }
      }
      ++logical;
    } else {
      map_indirect(ptr, level - 1, logical, blocks_needed, out, error, msg);
      if (error) return;
    }
  }
}

ReadResult ExtVolume::read_inode_data(const Inode& inode) const {
  ReadResult r;
  if (inode.flags & Inode::kInlineDataFlag) {
    r.error = Errc::UnsupportedFeature;
    r.message = "inode " + std::to_string(inode.number) + " uses inline data";
    return r;
  }
  const std::uint64_t bs = sb_.block_size;
  const std::uint64_t size_cap = std::max<std::uint64_t>(region_.length() * 4, 1ull << 30);
  if (inode.size_bytes > size_cap) {
    r.error = Errc::Unreadable;
    r.message = "inode " + std::to_string(inode.number) + " claims implausible size " +
                std::to_string(inode.size_bytes);
    return r;
  }
  const std::uint64_t blocks_needed = (inode.size_bytes + bs - 1) / bs;
  std::vector<Mapping> maps;
  if (inode.uses_extents()) {
    map_extents(inode.block, blocks_needed, maps, 5, r.error, r.message);
  } else {
    for (std::uint64_t i = 0; i < 12 && i < blocks_needed; ++i) {
      const std::uint32_t ptr = inode.block_ptr(static_cast<std::size_t>(i));
      if (ptr != 0) maps.push_back(Mapping{i, ptr, 1, false});
    }
    std::uint64_t logical = 12;
    for (int level = 1; level <= 3 && logical < blocks_needed && !r.error; ++level) {
      map_indirect(inode.block_ptr(11 + static_cast<std::size_t>(level)), level, logical,
                   blocks_needed, maps, r.error, r.message);
    }
  }

  r.bytes.assign(static_cast<std::size_t>(inode.size_bytes), 0);
  for (const auto& m : maps) {
    if (m.zero || m.count == 0) continue;
    if (m.physical + m.count > sb_.block_count) {
      if (!r.error) {
        r.error = Errc::BlockOutOfRange;
        r.message = "extent at block " + std::to_string(m.physical) + " runs past block count";
      }
      continue;
    }
    const std::uint64_t start = m.logical * bs;
    const std::uint64_t end = std::min<std::uint64_t>(inode.size_bytes, (m.logical + m.count) * bs);
    if (start >= end) continue;
    region_.read(m.physical * bs,
                 std::span<std::uint8_t>(r.bytes.data() + start, static_cast<std::size_t>(end - start)));
  }
  return r;
}

std::string ExtVolume::symlink_target(const Inode& inode, std::optional<Errc>& error) const {
  const std::uint64_t ea_blocks = inode.file_acl ? sb_.block_size / 512 : 0;
  const bool fast = inode.size_bytes < 60 && !inode.uses_extents() &&
                    !(inode.flags & Inode::kInlineDataFlag) && inode.blocks_512 == ea_blocks;
  if (fast) {
    return std::string(reinterpret_cast<const char*>(inode.block.data()),
                       static_cast<std::size_t>(inode.size_bytes));
  }
  ReadResult r = read_inode_data(inode);
  error = r.error;
  return residue::to_string(r.bytes);
}

void ExtVolume::walk_dir(std::uint32_t dir_inode, const std::string& parent, ExtListing& out,
                         std::vector<std::uint32_t>& ancestry) const {
  Inode dir;
  try {
    dir = read_inode(dir_inode);
  } catch (const Error& e) {
    out.warnings.emplace_back(std::string("cannot read directory inode: ") + e.what());
    return;
  }
  const ReadResult data = read_inode_data(dir);
  if (data.error) {
    out.warnings.push_back(std::string(errc_name(*data.error)) + " reading directory " +
                           (parent.empty() ? "/" : parent) + ": " + data.message);
  }
  const std::size_t bs = sb_.block_size;
  for (std::size_t off = 0; off < data.bytes.size(); off += bs) {
    const ByteView block(data.bytes.data() + off, std::min(bs, data.bytes.size() - off));
    bool corrupt = false;
    const auto entries = parse_dir_block(block, sb_.has_filetype(), corrupt);
    if (corrupt) {
      out.warnings.push_back("CorruptDirBlock: directory " + (parent.empty() ? "/" : parent) +
                             " block " + std::to_string(off / bs) + " has a malformed entry; rest of block skipped");
    }
    for (const auto& e : entries) {
      if (e.name == "." || e.name == "..") continue;
      const std::string path = parent + "/" + e.name;
      if (e.inode > sb_.inode_count) {
        out.warnings.push_back("entry " + path + " references inode " + std::to_string(e.inode) +
                               " beyond inode count");
        continue;
      }
      Inode ino;
      try {
        ino = read_inode(e.inode);
      } catch (const Error& err) {
        out.warnings.push_back("entry " + path + ": " + err.what());
        continue;
      }
      ExtRecord rec;
      rec.path = path;
      rec.inode = e.inode;
      rec.type = ino.type();
      rec.size_bytes = rec.type == FileType::Directory ? 0 : ino.size_bytes;
      rec.mtime = ino.mtime;
      rec.atime = ino.atime;
      rec.ctime = ino.ctime;
      rec.links = ino.links;
      if (rec.type == FileType::Symlink) {
        std::optional<Errc> err;
        rec.symlink_target = symlink_target(ino, err);
        if (err) out.warnings.push_back("symlink " + path + " target unreadable");
      }
      out.records.push_back(rec);
      if (rec.type == FileType::Directory) {
        if (std::find(ancestry.begin(), ancestry.end(), e.inode) != ancestry.end()) {
          out.warnings.push_back("directory " + path + " loops to an ancestor; not descended");
          continue;
        }
        ancestry.push_back(e.inode);
        walk_dir(e.inode, path, out, ancestry);
        ancestry.pop_back();
      }
    }
  }
}

ExtListing ExtVolume::walk() const {
  ExtListing out;
  std::vector<std::uint32_t> ancestry{kRootInode};
  walk_dir(kRootInode, "", out, ancestry);
  std::sort(out.records.begin(), out.records.end(),
            [](const ExtRecord& a, const ExtRecord& b) { return a.path < b.path; });
  return out;
}

ReadResult ExtVolume::read(const ExtRecord& rec) const {
  ReadResult r;
  switch (rec.type) {
    case FileType::Regular:
      try {
        return read_inode_data(read_inode(rec.inode));
      } catch (const Error& e) {
        r.error = e.code();
        r.message = e.what();
        return r;
      }
    case FileType::Symlink:
      r.bytes.assign(rec.symlink_target.begin(), rec.symlink_target.end());
      return r;
    default:
      r.error = Errc::Unreadable;
      r.message = rec.path + " is not a regular file";
      return r;
  }
}

ExtVolume mount_ext(const img::RawImage& image, const img::PartitionEntry& part) {
  return ExtVolume::mount(img::partition_region(image, part));
}

ExtListing walk_ext(const ExtVolume& vol) { return vol.walk(); }

ReadResult read_ext_file(const ExtVolume& vol, const ExtRecord& rec) { return vol.read(rec); }

}  // namespace residue::ext
