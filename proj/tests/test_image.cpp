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

#include <random>

#include "residue/image.hpp"
#include "support.hpp"

using namespace residue;
using testing::fixture;

namespace {

void put_entry(Bytes& s, int slot, std::uint8_t status, std::uint8_t type, std::uint32_t start,
               std::uint32_t count) {
  const std::size_t o = 446 + 16 * static_cast<std::size_t>(slot);
  s[o] = status;
  s[o + 4] = type;
  for (int i = 0; i < 4; ++i) {
    s[o + 8 + i] = static_cast<std::uint8_t>(start >> (8 * i));
    s[o + 12 + i] = static_cast<std::uint8_t>(count >> (8 * i));
  }
}

Bytes blank_mbr() {
  Bytes s(512, 0);
  s[510] = 0x55;
  s[511] = 0xAA;
  return s;
}

}  // namespace

TEST_CASE("octopi-layout image partitions match the oracle table") {
  for (const char* name : {"octopi_baseline.img", "octopi_after.img"}) {
    const auto image = img::RawImage::open(fixture(name));
    const auto table = img::parse_mbr(image);
    const auto& expected = testing::oracle()[name]["partitions"];
    REQUIRE(table.entries.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto& e = table.entries[i];
      CHECK(e.index == expected[i]["slot"].get<int>());
      CHECK(e.start_lba == expected[i]["start_lba"].get<std::uint32_t>());
      CHECK(e.sector_count == expected[i]["sector_count"].get<std::uint32_t>());
      CHECK(e.type_code == expected[i]["type_code"].get<int>());
      CHECK(e.valid);
    }
    // 4 MiB gap, 60 MiB FAT partition, Linux partition after it.
    CHECK(table.entries[0].start_lba * 512ULL == 4ULL << 20);
    CHECK(table.entries[0].sector_count * 512ULL == 60ULL << 20);
    CHECK(table.entries[1].type_code == 0x83);
    CHECK_FALSE(table.boot_code_present);
  }
}

TEST_CASE("partition text rendering") {
  const auto table = img::parse_mbr(img::RawImage::open(fixture("octopi_baseline.img")));
  CHECK(table.to_text() ==
        "# disk_signature 00000000\n"
        "# boot_code_present false\n"
        "index\tbootable\ttype\tstart_lba\tsector_count\tend_lba\tvalid\n"
        "0\tno\t0x0c\t8192\t122880\t131071\tvalid\n"
        "1\tno\t0x83\t131072\t32768\t163839\tvalid\n");
}

TEST_CASE("random tables decode to what was encoded") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 500; ++round) {
    Bytes s = blank_mbr();
    const std::uint64_t sectors = 1 + rng() % 1000000;
    std::vector<img::PartitionEntry> want;
    for (int slot = 0; slot < 4; ++slot) {
      if (rng() % 3 == 0) continue;
      img::PartitionEntry e;
      e.index = slot;
      e.status = (rng() & 1) ? 0x80 : 0x00;
      e.bootable = e.status == 0x80;
      e.type_code = static_cast<std::uint8_t>(1 + rng() % 255);
      e.start_lba = static_cast<std::uint32_t>(rng() % 1200000);
      e.sector_count = static_cast<std::uint32_t>(1 + rng() % 600000);
      e.valid = std::uint64_t{e.start_lba} + e.sector_count <= sectors;
      put_entry(s, slot, e.status, e.type_code, e.start_lba, e.sector_count);
      want.push_back(e);
    }
    const auto table = img::parse_mbr(s, sectors);
    CHECK(table.entries == want);
  }
}

TEST_CASE("boot code and disk signature") {
  Bytes s = blank_mbr();
  CHECK_FALSE(img::parse_mbr(s, 100).boot_code_present);
  s[0] = 0xFA;
  s[440] = 0x12;
  s[443] = 0x34;
  const auto t = img::parse_mbr(s, 100);
  CHECK(t.boot_code_present);
  CHECK(t.disk_signature == std::array<std::uint8_t, 4>{0x12, 0, 0, 0x34});
}

TEST_CASE("mbr errors") {
  Bytes s = blank_mbr();
  s[511] = 0;
  CHECK_THROWS_AS(img::parse_mbr(s, 1), Error);
  try {
    img::parse_mbr(s, 1);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadSignature);
  }
  try {
    img::parse_mbr(ByteView(s.data(), 100), 1);
    FAIL("expected ShortImage");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ShortImage);
  }
  try {
    img::parse_mbr(img::RawImage::open(fixture("zeroed.img")));
    FAIL("expected BadSignature");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadSignature);
  }
}

TEST_CASE("entries past the end are flagged and clamped") {
  Bytes s = blank_mbr();
  put_entry(s, 2, 0, 0x83, 50, 100);
  put_entry(s, 3, 0, 0x05, 10, 10);
  const auto t = img::parse_mbr(s, 120);
  REQUIRE(t.entries.size() == 2);
  CHECK(t.entries[0].index == 2);
  CHECK_FALSE(t.entries[0].valid);
  CHECK(t.entries[1].is_extended());
  CHECK(t.to_text().find("extended-not-recursed") != std::string::npos);

  const auto image = img::RawImage::open(fixture("zeroed.img"));
  img::PartitionEntry e;
  e.start_lba = 2000;
  e.sector_count = 100;
  const auto r = img::partition_region(image, e);
  CHECK(r.length() == image.size_bytes() - 2000 * 512ULL);
  CHECK_THROWS(r.read(0, r.length() + 1));
}

TEST_CASE("raw image errors") {
  try {
    img::RawImage::open(fixture("does-not-exist.img"));
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotFound);
  }
  const auto image = img::RawImage::open(fixture("zeroed.img"));
  CHECK(image.size_bytes() == 1u << 20);
  try {
    image.read(image.size_bytes() - 10, 11);
    FAIL("expected OutOfBounds");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OutOfBounds);
  }
}
