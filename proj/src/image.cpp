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

#include "residue/image.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <sstream>

namespace residue::img {

struct RawImage::Handle {
  int fd = -1;
  std::filesystem::path path;
  std::uint64_t size = 0;
  std::vector<std::string> warnings;

  ~Handle() {
    if (fd >= 0) ::close(fd);
  }
};

RawImage RawImage::open(const std::filesystem::path& path) {
  auto h = std::make_shared<Handle>();
  h->path = path;
  h->fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (h->fd < 0) {
    const int err = errno;
    if (err == ENOENT) throw Error(Errc::NotFound, path.string());
    throw Error(Errc::Unreadable, path.string() + ": " + std::strerror(err));
  }
  struct stat st {};
  if (::fstat(h->fd, &st) != 0) {
    throw Error(Errc::Unreadable, path.string() + ": " + std::strerror(errno));
  }
  if (S_ISDIR(st.st_mode)) throw Error(Errc::Unreadable, path.string() + ": is a directory");
  h->size = static_cast<std::uint64_t>(st.st_size);
  if (h->size == 0) {
    h->warnings.emplace_back("no sectors");
  } else if (h->size % kSectorSize != 0) {
    h->warnings.emplace_back("image size " + std::to_string(h->size) +
                             " is not a multiple of 512; trailing bytes ignored for sector access");
  }
  return RawImage(std::move(h));
}

const std::filesystem::path& RawImage::path() const { return handle_->path; }
std::uint64_t RawImage::size_bytes() const { return handle_->size; }
const std::vector<std::string>& RawImage::warnings() const { return handle_->warnings; }

void RawImage::read(std::uint64_t offset, std::span<std::uint8_t> out) const {
  if (offset > handle_->size || out.size() > handle_->size - offset) {
    throw Error(Errc::OutOfBounds, "read of " + std::to_string(out.size()) + " bytes at " +
                                       std::to_string(offset) + " exceeds image size " +
                                       std::to_string(handle_->size));
  }
  std::size_t done = 0;
  while (done < out.size()) {
    const ssize_t n = ::pread(handle_->fd, out.data() + done, out.size() - done,
                              static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::Unreadable, handle_->path.string() + ": " + std::strerror(errno));
    }
    if (n == 0) throw Error(Errc::Unreadable, handle_->path.string() + ": unexpected end of file");
    done += static_cast<std::size_t>(n);
  }
}

Bytes RawImage::read(std::uint64_t offset, std::size_t length) const {
  Bytes out(length);
  read(offset, out);
  return out;
}

Bytes RawImage::read_sector(std::uint64_t lba) const { return read(lba * kSectorSize, kSectorSize); }

Region::Region(RawImage image, std::uint64_t offset, std::uint64_t length)
    : image_(std::move(image)), offset_(offset), length_(length) {
  const auto size = image_.size_bytes();
  if (offset_ > size) offset_ = size;
  if (length_ > size - offset_) length_ = size - offset_;
}

void Region::read(std::uint64_t offset, std::span<std::uint8_t> out) const {
  if (offset > length_ || out.size() > length_ - offset) {
    throw Error(Errc::OutOfBounds, "read of " + std::to_string(out.size()) + " bytes at " +
                                       std::to_string(offset) + " exceeds region length " +
                                       std::to_string(length_));
  }
  image_.read(offset_ + offset, out);
}

Bytes Region::read(std::uint64_t offset, std::size_t length) const {
  Bytes out(length);
  read(offset, out);
  return out;
}

std::string PartitionTable::to_text() const {
  std::ostringstream os;
  char sig[16];
  std::snprintf(sig, sizeof sig, "%02x%02x%02x%02x", disk_signature[0], disk_signature[1],
                disk_signature[2], disk_signature[3]);
  os << "# disk_signature " << sig << "\n";
  os << "# boot_code_present " << (boot_code_present ? "true" : "false") << "\n";
  os << "index\tbootable\ttype\tstart_lba\tsector_count\tend_lba\tvalid\n";
  for (const auto& e : entries) {
    char type[8];
    std::snprintf(type, sizeof type, "0x%02x", e.type_code);
    const std::uint64_t end = static_cast<std::uint64_t>(e.start_lba) + e.sector_count;
    os << e.index << '\t' << (e.bootable ? "yes" : "no") << '\t' << type << '\t' << e.start_lba
       << '\t' << e.sector_count << '\t' << (end == 0 ? 0 : end - 1) << '\t'
       << (e.valid ? "valid" : "invalid") << (e.is_extended() ? "\textended-not-recursed" : "")
       << "\n";
  }
  return os.str();
}

PartitionTable parse_mbr(ByteView sector0, std::uint64_t image_sectors) {
  if (sector0.size() < kSectorSize) {
    throw Error(Errc::ShortImage, "need 512 bytes for a master boot record, have " +
                                      std::to_string(sector0.size()));
  }
  if (sector0[510] != 0x55 || sector0[511] != 0xAA) {
    throw Error(Errc::BadSignature, "missing 0x55AA boot signature at offset 510");
  }
  PartitionTable table;
  table.boot_code_present =
      std::any_of(sector0.begin(), sector0.begin() + 446, [](std::uint8_t b) { return b != 0; });
  std::copy_n(sector0.begin() + 440, 4, table.disk_signature.begin());

  for (int i = 0; i < 4; ++i) {
    const auto raw = sector0.subspan(446 + 16 * static_cast<std::size_t>(i), 16);
    if (std::all_of(raw.begin(), raw.end(), [](std::uint8_t b) { return b == 0; })) continue;
    PartitionEntry e;
    e.index = i;
    e.status = raw[0];
    e.bootable = raw[0] == 0x80;
    e.type_code = raw[4];
    e.start_lba = le32(raw, 8);
    e.sector_count = le32(raw, 12);
    e.valid = static_cast<std::uint64_t>(e.start_lba) + e.sector_count <= image_sectors;
    table.entries.push_back(e);
  }
  return table;
}

PartitionTable parse_mbr(const RawImage& image) {
  if (image.size_bytes() < kSectorSize) {
    throw Error(Errc::ShortImage, "image has " + std::to_string(image.size_bytes()) +
                                      " bytes, fewer than one sector");
  }
  const Bytes s0 = image.read_sector(0);
  return parse_mbr(s0, image.sector_count());
}

Region partition_region(const RawImage& image, const PartitionEntry& part) {
  return Region(image, static_cast<std::uint64_t>(part.start_lba) * kSectorSize,
                static_cast<std::uint64_t>(part.sector_count) * kSectorSize);
}

}  // namespace residue::img
