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

#include <doctest.h>

#include "residue/fat.hpp"
#include "residue/snapshot.hpp"
#include "support.hpp"

using namespace residue;
using testing::fixture;

namespace {

fat::FatVolume mount_flat(const std::string& name) {
  const auto image = img::RawImage::open(fixture(name));
  return fat::FatVolume::mount(img::Region::whole(image));
}

const fat::FatFileRecord& find(const fat::FatListing& l, const std::string& path) {
  for (const auto& r : l.records) {
    if (r.path == path) return r;
  }
  throw std::runtime_error("no record " + path);
}

// Rewrites one 16-bit FAT entry in every FAT copy of a flat image.
void poke_fat16(const std::filesystem::path& path, const fat::FatVolume& vol, std::uint32_t cluster,
                std::uint16_t value) {
  const std::uint64_t fat_bytes = (vol.root_dir_offset() - vol.fat_offset()) / vol.fat_count();
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  for (unsigned i = 0; i < vol.fat_count(); ++i) {
    f.seekp(static_cast<std::streamoff>(vol.fat_offset() + i * fat_bytes + cluster * 2));
    const char b[2] = {static_cast<char>(value & 0xFF), static_cast<char>(value >> 8)};
    f.write(b, 2);
  }
}

}  // namespace

TEST_CASE("flat FAT images match the oracle listing") {
  for (const char* name : {"fat16_boot.img", "fat16_deleted.img", "fat16_empty.img", "fat12_small.img"}) {
    CAPTURE(name);
    auto sources = snap::open_sources(fixture(name));
    REQUIRE(sources.sources.size() == 1);
    CHECK(sources.sources[0]->volume_id() == "fat");
    CHECK(testing::source_rows(*sources.sources[0]) ==
          testing::oracle_rows(testing::oracle()[name]["entries"]));
  }
}

TEST_CASE("partitioned FAT volume matches the oracle listing") {
  for (const char* name : {"octopi_baseline.img", "octopi_after.img"}) {
    auto sources = snap::open_sources(fixture(name));
    REQUIRE(sources.sources.size() == 2);
    CHECK(sources.sources[0]->volume_id() == "fat0");
    const auto& vol = testing::oracle()[name]["volumes"]["fat0"];
    CHECK(vol["offset"].get<std::uint64_t>() == 8192ULL * 512);
    CHECK(testing::source_rows(*sources.sources[0]) == testing::oracle_rows(vol["entries"]));
  }
}

TEST_CASE("BPB geometry") {
  const auto vol = mount_flat("fat16_boot.img");
  CHECK(vol.variant() == fat::Variant::Fat16);
  CHECK(vol.bytes_per_sector() == 512);
  CHECK(vol.cluster_count() >= 4085);
  CHECK(vol.cluster_count() < 65525);
  CHECK(vol.data_offset() > vol.root_dir_offset());

  const auto small = mount_flat("fat12_small.img");
  CHECK(small.variant() == fat::Variant::Fat12);
  CHECK(small.cluster_count() < 4085);
}

TEST_CASE("long names and short names") {
  const auto vol = mount_flat("fat16_boot.img");
  const auto listing = vol.walk(false);
  const auto& rec = find(listing, "/A Long Name With Spaces.txt");
  REQUIRE(rec.long_name.has_value());
  CHECK(*rec.long_name == "A Long Name With Spaces.txt");
  CHECK(rec.short_name.size() <= 12);
  CHECK(listing.warnings.empty());
  for (const auto& r : listing.records) CHECK(r.allocation == Allocation::Allocated);
}

TEST_CASE("lfn checksum vectors") {
  CHECK(fat::lfn_checksum(as_bytes("README  TXT")) == 115);
  CHECK(fat::lfn_checksum(as_bytes("ALONGN~1TXT")) == 66);
  CHECK(fat::lfn_checksum(as_bytes("KERNEL7 IMG")) == 137);
}

TEST_CASE("deleted entries are listed only on request") {
  const auto vol = mount_flat("fat16_deleted.img");
  const auto live = vol.walk(false);
  CHECK(live.records.size() == 3);
  const auto all = vol.walk(true);
  REQUIRE(all.records.size() == 5);
  const auto& gone = find(all, "/_ONE.TXT");
  CHECK(gone.allocation == Allocation::Deleted);
  CHECK(gone.short_name.front() == '_');
  const auto r = vol.read(gone);
  CHECK(r.best_effort);
  CHECK(r.ok());
  CHECK(md5_hex(r.bytes) == "b3c77452e4a10907b2d1363001134cf2");

  const auto& design = find(all, "/removed-design.gcode");
  CHECK(design.allocation == Allocation::Deleted);

  auto src = snap::open_sources(fixture("fat16_deleted.img"));
  bool saw_suffix = false;
  for (const auto& e : src.sources[0]->entries()) {
    if (e.path == "/_ONE.TXT (deleted)") saw_suffix = true;
  }
  CHECK(saw_suffix);
  auto live_src = snap::open_sources(fixture("fat16_deleted.img"), false);
  CHECK(live_src.sources[0]->entries().size() == 3);
}

TEST_CASE("chain damage is reported, not fatal") {
  testing::TempDir tmp;
  const auto copy = tmp / "boot.img";
  std::filesystem::copy_file(fixture("fat16_boot.img"), copy);
  const auto vol0 = fat::FatVolume::mount(img::Region::whole(img::RawImage::open(copy)));
  const auto rec0 = find(vol0.walk(false), "/kernel7.img");
  const std::uint32_t first = rec0.first_cluster;
  const std::uint32_t second = vol0.fat_entry(first);
  REQUIRE(second >= 2);

  SUBCASE("free cluster in the middle of a chain") {
    poke_fat16(copy, vol0, first, 0);
    const auto vol = fat::FatVolume::mount(img::Region::whole(img::RawImage::open(copy)));
    const auto r = vol.read(find(vol.walk(false), "/kernel7.img"));
    CHECK(r.error == Errc::BrokenChain);
    CHECK(r.bytes.size() == vol.cluster_size());
  }
  SUBCASE("chain that loops") {
    poke_fat16(copy, vol0, second, static_cast<std::uint16_t>(first));
    const auto vol = fat::FatVolume::mount(img::Region::whole(img::RawImage::open(copy)));
    const auto r = vol.read(find(vol.walk(false), "/kernel7.img"));
    REQUIRE_FALSE(r.ok());
    CHECK(r.message.find("loops") != std::string::npos);
    CHECK(r.bytes.size() == 2u * vol.cluster_size());
  }
  SUBCASE("early end of chain") {
    poke_fat16(copy, vol0, second, 0xFFFF);
    const auto vol = fat::FatVolume::mount(img::Region::whole(img::RawImage::open(copy)));
    const auto r = vol.read(find(vol.walk(false), "/kernel7.img"));
    CHECK(r.error == Errc::BrokenChain);
    CHECK(r.bytes.size() == 2u * vol.cluster_size());
  }
}

TEST_CASE("unsupported and malformed boot sectors") {
  try {
    mount_flat("fat32.img");
    FAIL("expected UnsupportedVariant");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedVariant);
  }
  try {
    mount_flat("zeroed.img");
    FAIL("expected BadBpb");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadBpb);
  }
  try {
    snap::open_sources(fixture("fat32.img"));
    FAIL("expected UnsupportedVariant");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedVariant);
  }
}
