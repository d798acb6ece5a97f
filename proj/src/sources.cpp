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

#include <sys/stat.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "residue/ext.hpp"
#include "residue/fat.hpp"
#include "residue/snapshot.hpp"

namespace residue::snap {

std::optional<std::size_t> Source::find(std::string_view path) const {
  const auto& es = entries();
  auto it = std::lower_bound(es.begin(), es.end(), path,
                             [](const SourceEntry& e, std::string_view p) { return e.path < p; });
  for (; it != es.end() && it->path == path; ++it) {
    if (it->allocation == Allocation::Allocated) return static_cast<std::size_t>(it - es.begin());
  }
  return std::nullopt;
}

std::optional<ReadResult> Source::read_path(std::string_view path) const {
  const auto idx = find(path);
  if (!idx) return std::nullopt;
  return read(*idx);
}

namespace {

class FatSource final : public Source {
 public:
  FatSource(std::string id, fat::FatVolume vol, bool include_deleted)
      : id_(std::move(id)), vol_(std::move(vol)) {
    fat::FatListing listing = vol_.walk(include_deleted);
    warnings_ = std::move(listing.warnings);
    records_ = std::move(listing.records);
    std::set<std::string> taken;
    for (const auto& r : records_) {
      if (r.allocation == Allocation::Allocated) taken.insert(r.path);
    }
    for (const auto& r : records_) {
      SourceEntry e;
      e.path = r.path;
      if (r.allocation == Allocation::Deleted) {
        // Deleted entries may reuse a live name; keep keys unique.
        std::string candidate = r.path + " (deleted)";
        for (int n = 2; taken.count(candidate); ++n) {
          candidate = r.path + " (deleted " + std::to_string(n) + ")";
        }
        taken.insert(candidate);
        e.path = candidate;
        e.note = "deleted directory entry; content recovered best-effort";
      }
      e.kind = r.is_directory() ? Kind::Dir : Kind::File;
      e.size_bytes = r.size_bytes;
      e.mtime = r.mtime.seconds;
      e.allocation = r.allocation;
      entries_.push_back(std::move(e));
    }
    // Renamed deleted entries can change the order.
    std::vector<std::size_t> order(entries_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return entries_[a].path < entries_[b].path;
    });
    std::vector<SourceEntry> sorted_entries;
    std::vector<fat::FatFileRecord> sorted_records;
    for (auto i : order) {
      sorted_entries.push_back(entries_[i]);
      sorted_records.push_back(records_[i]);
    }
    entries_ = std::move(sorted_entries);
    records_ = std::move(sorted_records);
  }

  const std::string& volume_id() const override { return id_; }
  const std::vector<SourceEntry>& entries() const override { return entries_; }
  const std::vector<std::string>& warnings() const override { return warnings_; }
  ReadResult read(std::size_t index) const override { return vol_.read(records_.at(index)); }

 private:
  std::string id_;
  fat::FatVolume vol_;
  std::vector<fat::FatFileRecord> records_;
  std::vector<SourceEntry> entries_;
  std::vector<std::string> warnings_;
};

class ExtSource final : public Source {
 public:
  ExtSource(std::string id, ext::ExtVolume vol) : id_(std::move(id)), vol_(std::move(vol)) {
    warnings_ = vol_.warnings();
    ext::ExtListing listing = vol_.walk();
    for (auto& w : listing.warnings) warnings_.push_back(std::move(w));
    records_ = std::move(listing.records);
    for (const auto& r : records_) {
      SourceEntry e;
      e.path = r.path;
      e.size_bytes = r.size_bytes;
      e.mtime = r.mtime;
      switch (r.type) {
        case ext::FileType::Directory: e.kind = Kind::Dir; break;
        case ext::FileType::Symlink: e.kind = Kind::Symlink; break;
        case ext::FileType::Regular: e.kind = Kind::File; break;
        default:
          e.kind = Kind::File;
          e.note = "special file (" + std::string(ext::to_string(r.type)) + ")";
          break;
      }
      entries_.push_back(std::move(e));
    }
  }

  const std::string& volume_id() const override { return id_; }
  const std::vector<SourceEntry>& entries() const override { return entries_; }
  const std::vector<std::string>& warnings() const override { return warnings_; }
  ReadResult read(std::size_t index) const override { return vol_.read(records_.at(index)); }

 private:
  std::string id_;
  ext::ExtVolume vol_;
  std::vector<ext::ExtRecord> records_;
  std::vector<SourceEntry> entries_;
  std::vector<std::string> warnings_;
};

class DirectorySource final : public Source {
 public:
  DirectorySource(std::filesystem::path root, std::string id)
      : root_(std::move(root)), id_(std::move(id)) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) throw Error(Errc::NotFound, root_.string() + " is not a directory");
    auto it = fs::recursive_directory_iterator(root_, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw Error(Errc::Unreadable, root_.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (ec) {
        warnings_.push_back("walk error: " + ec.message());
        ec.clear();
        continue;
      }
      const fs::path& p = it->path();
      SourceEntry e;
      e.path = "/" + p.lexically_relative(root_).generic_string();
      struct stat st {};
      if (::lstat(p.c_str(), &st) != 0) {
        warnings_.push_back("cannot stat " + e.path);
        continue;
      }
      e.mtime = static_cast<std::int64_t>(st.st_mtim.tv_sec);
      if (S_ISLNK(st.st_mode)) {
        e.kind = Kind::Symlink;
        e.size_bytes = static_cast<std::uint64_t>(st.st_size);
        it.disable_recursion_pending();
      } else if (S_ISDIR(st.st_mode)) {
        e.kind = Kind::Dir;
      } else {
        e.kind = Kind::File;
        e.size_bytes = static_cast<std::uint64_t>(st.st_size);
        if (!S_ISREG(st.st_mode)) e.note = "special file";
      }
      paths_.push_back(p);
      entries_.push_back(std::move(e));
    }
    std::vector<std::size_t> order(entries_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return entries_[a].path < entries_[b].path; });
    std::vector<SourceEntry> se;
    std::vector<std::filesystem::path> sp;
    for (auto i : order) {
      se.push_back(entries_[i]);
      sp.push_back(paths_[i]);
    }
    entries_ = std::move(se);
    paths_ = std::move(sp);
  }

  const std::string& volume_id() const override { return id_; }
  const std::vector<SourceEntry>& entries() const override { return entries_; }
  const std::vector<std::string>& warnings() const override { return warnings_; }

  ReadResult read(std::size_t index) const override {
    ReadResult r;
    const auto& e = entries_.at(index);
    const auto& p = paths_.at(index);
    if (e.kind == Kind::Symlink) {
      std::error_code ec;
      const auto target = std::filesystem::read_symlink(p, ec);
      if (ec) {
        r.error = Errc::Unreadable;
        r.message = ec.message();
        return r;
      }
      const std::string t = target.string();
      r.bytes.assign(t.begin(), t.end());
      return r;
    }
    if (e.kind == Kind::Dir || e.note) {
      r.error = Errc::Unreadable;
      r.message = e.path + " is not a regular file";
      return r;
    }
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      r.error = Errc::Unreadable;
      r.message = "cannot open " + e.path;
      return r;
    }
    r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) {
      r.error = Errc::Unreadable;
      r.message = "read error on " + e.path;
    }
    return r;
  }

 private:
  std::filesystem::path root_;
  std::string id_;
  std::vector<std::filesystem::path> paths_;
  std::vector<SourceEntry> entries_;
  std::vector<std::string> warnings_;
};

}  // namespace

std::unique_ptr<Source> open_directory(const std::filesystem::path& root, std::string volume_id) {
  return std::make_unique<DirectorySource>(root, std::move(volume_id));
}

ImageSources open_image_sources(const img::RawImage& image, bool include_deleted) {
  ImageSources out;
  for (const auto& w : image.warnings()) out.warnings.push_back(w);
  const auto whole = img::Region::whole(image);
  try {
    out.sources.push_back(
        std::make_unique<FatSource>("fat", fat::FatVolume::mount(whole), include_deleted));
    return out;
  } catch (const Error& e) {
    // A valid boot sector of an unsupported FAT variant also carries 0x55AA.
    if (e.code() == Errc::UnsupportedVariant) throw;
  }
  try {
    out.sources.push_back(std::make_unique<ExtSource>("ext", ext::ExtVolume::mount(whole)));
    return out;
  } catch (const Error& e) {
    if (e.code() == Errc::UnsupportedFeature) throw;
  }

  const img::PartitionTable table = img::parse_mbr(image);
  for (const auto& part : table.entries) {
    const std::string idx = std::to_string(part.index);
    if (part.is_extended()) {
      out.warnings.push_back("partition " + idx + " is an extended partition; not recursed");
      continue;
    }
    if (!part.valid) out.warnings.push_back("partition " + idx + " extends past the image end");
    const auto region = img::partition_region(image, part);
    std::string fat_err;
    try {
      out.sources.push_back(
          std::make_unique<FatSource>("fat" + idx, fat::FatVolume::mount(region), include_deleted));
      continue;
    } catch (const Error& e) {
      fat_err = e.what();
    }
    try {
      out.sources.push_back(std::make_unique<ExtSource>("ext" + idx, ext::ExtVolume::mount(region)));
    } catch (const Error& e) {
      out.warnings.push_back("partition " + idx + ": no supported file system (" + fat_err + "; " +
                             e.what() + ")");
    }
  }
  return out;
}

ImageSources open_sources(const std::filesystem::path& path, bool include_deleted) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    ImageSources out;
    out.sources.push_back(open_directory(path));
    return out;
  }
  return open_image_sources(img::RawImage::open(path), include_deleted);
}

}  // namespace residue::snap
