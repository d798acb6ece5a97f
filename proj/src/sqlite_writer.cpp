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

#include <bit>
#include <cstring>
#include <limits>

#include "residue/synth.hpp"

namespace residue::synth {

const std::string_view kUrlsSchema =
    "CREATE TABLE urls(id INTEGER PRIMARY KEY,url LONGVARCHAR,title LONGVARCHAR,"
    "visit_count INTEGER DEFAULT 0 NOT NULL,typed_count INTEGER DEFAULT 0 NOT NULL,"
    "last_visit_time INTEGER NOT NULL,hidden INTEGER DEFAULT 0 NOT NULL)";

namespace {

constexpr std::uint32_t kPageSize = 4096;

void put_varint(std::string& out, std::uint64_t v) {
  if (v > 0x00FFFFFFFFFFFFFFull) {
    std::uint8_t buf[9];
    buf[8] = static_cast<std::uint8_t>(v);
    v >>= 8;
    for (int i = 7; i >= 0; --i) {
      buf[i] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
      v >>= 7;
    }
    out.append(reinterpret_cast<const char*>(buf), 9);
    return;
  }
  std::uint8_t buf[9];
  int n = 0;
  do {
    buf[n++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
    v >>= 7;
  } while (v != 0);
  buf[0] &= 0x7F;
  for (int i = n - 1; i >= 0; --i) out += static_cast<char>(buf[i]);
}

std::size_t varint_len(std::uint64_t v) {
  std::string tmp;
  put_varint(tmp, v);
  return tmp.size();
}

void put_be(std::string& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::string encode_record(const std::vector<sqlite::Value>& values) {
  std::string types;
  std::string body;
  for (const auto& v : values) {
    switch (v.type) {
      case sqlite::Value::Type::Null:
        put_varint(types, 0);
        break;
      case sqlite::Value::Type::Integer: {
        const std::int64_t i = v.integer;
        if (i == 0 || i == 1) {
          put_varint(types, i == 0 ? 8 : 9);
        } else {
          static constexpr int kWidths[] = {1, 2, 3, 4, 6, 8};
          for (int t = 0; t < 6; ++t) {
            const int w = kWidths[t];
            const std::int64_t lim = w == 8 ? 0 : (std::int64_t{1} << (8 * w - 1));
            if (w == 8 || (i >= -lim && i < lim)) {
              put_varint(types, static_cast<std::uint64_t>(t + 1));
              put_be(body, static_cast<std::uint64_t>(i), w);
              break;
            }
          }
        }
        break;
      }
      case sqlite::Value::Type::Real:
        put_varint(types, 7);
        put_be(body, std::bit_cast<std::uint64_t>(v.real), 8);
        break;
      case sqlite::Value::Type::Text:
        put_varint(types, 13 + 2 * v.bytes.size());
        body += v.bytes;
        break;
      case sqlite::Value::Type::Blob:
        put_varint(types, 12 + 2 * v.bytes.size());
        body += v.bytes;
        break;
    }
  }
  std::size_t header = types.size() + 1;
  while (varint_len(header) + types.size() != header) header = varint_len(header) + types.size();
  std::string out;
  put_varint(out, header);
  return out + types + body;
}

/// Table-leaf page image. `offset` is 100 for page 1.
std::string leaf_page(const std::vector<std::pair<std::int64_t, std::string>>& cells, std::size_t offset) {
  std::string page(kPageSize, '\0');
  const std::size_t max_local = kPageSize - 35;
  std::vector<std::string> encoded;
  for (const auto& [rowid, payload] : cells) {
    if (payload.size() > max_local) throw Error(Errc::BadUsage, "row too large for a single-page table");
    std::string cell;
    put_varint(cell, payload.size());
    put_varint(cell, static_cast<std::uint64_t>(rowid));
    cell += payload;
    encoded.push_back(std::move(cell));
  }
  std::size_t content = kPageSize;
  std::vector<std::size_t> offsets;
  for (const auto& c : encoded) {
    if (content < c.size()) throw Error(Errc::BadUsage, "rows do not fit on one page");
    content -= c.size();
    std::memcpy(page.data() + content, c.data(), c.size());
    offsets.push_back(content);
  }
  const std::size_t ptrs = offset + 8;
  if (ptrs + 2 * offsets.size() > content) throw Error(Errc::BadUsage, "rows do not fit on one page");
  page[offset] = 13;
  std::string hdr;
  put_be(hdr, 0, 2);                      // first freeblock
  put_be(hdr, offsets.size(), 2);         // cell count
  put_be(hdr, content == kPageSize ? 0 : content, 2);
  hdr += '\0';                            // fragmented bytes
  std::memcpy(page.data() + offset + 1, hdr.data(), hdr.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    page[ptrs + 2 * i] = static_cast<char>(offsets[i] >> 8);
    page[ptrs + 2 * i + 1] = static_cast<char>(offsets[i] & 0xFF);
  }
  return page;
}

}  // namespace

Bytes write_single_table_db(std::string_view table, std::string_view create_sql, const std::vector<SqlRow>& rows) {
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  std::vector<std::pair<std::int64_t, std::string>> cells;
  for (const auto& r : rows) {
    if (r.rowid <= last) throw Error(Errc::BadUsage, "rowids must be strictly increasing");
    last = r.rowid;
    cells.emplace_back(r.rowid, encode_record(r.values));
  }
  const std::vector<sqlite::Value> master = {
      sqlite::Value::of_text("table"), sqlite::Value::of_text(std::string(table)),
      sqlite::Value::of_text(std::string(table)), sqlite::Value::of_int(2),
      sqlite::Value::of_text(std::string(create_sql))};
  std::string page1 = leaf_page({{1, encode_record(master)}}, 100);
  const std::string page2 = leaf_page(cells, 0);

  std::string h;
  h.append("SQLite format 3\0", 16);
  put_be(h, kPageSize, 2);
  h += '\x01';  // write version: legacy
  h += '\x01';  // read version: legacy
  h += '\0';    // reserved bytes per page
  h += '\x40';  // max embedded payload fraction
  h += '\x20';  // min embedded payload fraction
  h += '\x20';  // leaf payload fraction
  put_be(h, 1, 4);   // file change counter
  put_be(h, 2, 4);   // database size in pages
  put_be(h, 0, 4);   // first freelist trunk page
  put_be(h, 0, 4);   // freelist page count
  put_be(h, 1, 4);   // schema cookie
  put_be(h, 4, 4);   // schema format
  put_be(h, 0, 4);   // default page cache size
  put_be(h, 0, 4);   // largest root b-tree page (no auto-vacuum)
  put_be(h, 1, 4);   // text encoding: UTF-8
  put_be(h, 0, 4);   // user version
  put_be(h, 0, 4);   // incremental vacuum
  put_be(h, 0, 4);   // application id
  h.append(20, '\0');
  put_be(h, 1, 4);        // version-valid-for
  put_be(h, 3037002, 4);  // SQLITE_VERSION_NUMBER
  std::memcpy(page1.data(), h.data(), h.size());

  Bytes out(page1.begin(), page1.end());
  out.insert(out.end(), page2.begin(), page2.end());
  return out;
}

}  // namespace residue::synth
