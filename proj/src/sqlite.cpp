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

#include "residue/sqlite.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <set>

namespace residue::sqlite {

namespace {

constexpr std::string_view kMagic{"SQLite format 3\0", 16};

struct CellError {
  std::string what;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) { return upper(a) == upper(b); }

std::int64_t be_signed(ByteView b, std::size_t off, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v = (v << 8) | b[off + i];
  if (n < 8 && (b[off] & 0x80)) v |= ~std::uint64_t{0} << (8 * n);
  return static_cast<std::int64_t>(v);
}

std::vector<Value> decode_record(ByteView payload) {
  auto [header_size, hlen] = read_varint(payload, 0);
  if (hlen == 0 || header_size > payload.size() || header_size < hlen) {
    throw CellError{"bad record header"};
  }
  std::vector<std::uint64_t> types;
  std::size_t off = hlen;
  while (off < header_size) {
    auto [t, n] = read_varint(payload, off);
    if (n == 0 || off + n > header_size) throw CellError{"bad serial type"};
    types.push_back(t);
    off += n;
  }
  std::vector<Value> values;
  std::size_t body = header_size;
  auto need = [&](std::uint64_t n) {
    if (n > payload.size() - body) throw CellError{"record body truncated"};
  };
  static constexpr std::size_t kIntWidth[] = {0, 1, 2, 3, 4, 6, 8};
  for (const auto t : types) {
    if (t == 0) {
      values.push_back(Value::null());
    } else if (t <= 6) {
      const std::size_t w = kIntWidth[t];
      need(w);
      values.push_back(Value::of_int(be_signed(payload, body, w)));
      body += w;
    } else if (t == 7) {
      need(8);
      const auto bits = static_cast<std::uint64_t>(be_signed(payload, body, 8));
      values.push_back(Value::of_real(std::bit_cast<double>(bits)));
      body += 8;
    } else if (t == 8 || t == 9) {
      values.push_back(Value::of_int(t == 8 ? 0 : 1));
    } else if (t == 10 || t == 11) {
      throw CellError{"reserved serial type " + std::to_string(t)};
    } else {
      const std::uint64_t len = (t - (t % 2 == 0 ? 12 : 13)) / 2;
      need(len);
      std::string bytes(reinterpret_cast<const char*>(payload.data() + body), len);
      values.push_back(t % 2 == 0 ? Value::of_blob(std::move(bytes)) : Value::of_text(std::move(bytes)));
      body += len;
    }
  }
  return values;
}

/// Assembles a table-leaf cell payload, following overflow pages.
Bytes cell_payload(const DbFile& db, ByteView page, std::size_t off, std::uint64_t total) {
  const std::uint64_t u = db.usable_size();
  const std::uint64_t x = u - 35;
  const std::uint64_t m = ((u - 12) * 32 / 255) - 23;
  std::uint64_t local = total;
  if (total > x) {
    const std::uint64_t k = m + ((total - m) % (u - 4));
    local = k <= x ? k : m;
  }
  if (off + local > u || off + local > page.size()) throw CellError{"cell overruns page"};
  Bytes out(page.begin() + static_cast<std::ptrdiff_t>(off),
            page.begin() + static_cast<std::ptrdiff_t>(off + local));
  if (local == total) return out;
  if (off + local + 4 > page.size()) throw CellError{"missing overflow pointer"};
  std::uint32_t next = be32(page, off + local);
  std::set<std::uint32_t> seen;
  while (out.size() < total) {
    if (next == 0 || !seen.insert(next).second) throw CellError{"broken overflow chain"};
    const ByteView ov = db.page(next);
    if (ov.size() < u) throw CellError{"overflow page " + std::to_string(next) + " out of range"};
    const std::uint64_t take = std::min<std::uint64_t>(u - 4, total - out.size());
    out.insert(out.end(), ov.begin() + 4, ov.begin() + 4 + static_cast<std::ptrdiff_t>(take));
    next = be32(ov, 0);
  }
  return out;
}

void scan_table(const DbFile& db, std::uint32_t root, std::vector<TableRow>& rows,
                std::vector<std::string>& warnings) {
  std::vector<std::uint32_t> stack{root};
  std::set<std::uint32_t> visited;
  while (!stack.empty()) {
    const std::uint32_t pno = stack.back();
    stack.pop_back();
    auto corrupt = [&](const std::string& why) {
      warnings.push_back("CorruptPage: page " + std::to_string(pno) + ": " + why);
    };
    if (!visited.insert(pno).second) {
      corrupt("page referenced twice");
      continue;
    }
    const ByteView page = db.page(pno);
    if (page.empty()) {
      corrupt("outside the file");
      continue;
    }
    const std::size_t hdr = pno == 1 ? 100 : 0;
    const std::uint8_t type = page[hdr];
    if (type != 5 && type != 13) {
      corrupt("unexpected page type " + std::to_string(type));
      continue;
    }
    const std::size_t hdr_len = type == 5 ? 12 : 8;
    const std::uint16_t ncells = be16(page, hdr + 3);
    const std::size_t ptrs = hdr + hdr_len;
    if (ptrs + 2 * std::size_t{ncells} > db.usable_size()) {
      corrupt("cell count exceeds page");
      continue;
    }
    if (type == 5) {
      // Children are pushed right to left so the stack yields them in key order.
      stack.push_back(be32(page, hdr + 8));
      for (std::size_t i = ncells; i-- > 0;) {
        const std::size_t off = be16(page, ptrs + 2 * i);
        if (off < ptrs + 2 * std::size_t{ncells} || off + 4 > db.usable_size()) {
          corrupt("cell " + std::to_string(i) + " pointer out of range");
          continue;
        }
        stack.push_back(be32(page, off));
      }
      continue;
    }
    for (std::size_t i = 0; i < ncells; ++i) {
      try {
        std::size_t off = be16(page, ptrs + 2 * i);
        if (off < ptrs + 2 * std::size_t{ncells} || off >= db.usable_size()) {
          throw CellError{"pointer out of range"};
        }
        auto [size, n1] = read_varint(page.first(db.usable_size()), off);
        if (n1 == 0) throw CellError{"truncated payload size"};
        off += n1;
        auto [rowid, n2] = read_varint(page.first(db.usable_size()), off);
        if (n2 == 0) throw CellError{"truncated rowid"};
        off += n2;
        const Bytes payload = cell_payload(db, page, off, size);
        rows.push_back({static_cast<std::int64_t>(rowid), decode_record(payload)});
      } catch (const CellError& e) {
        corrupt("cell " + std::to_string(i) + ": " + e.what);
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TableRow& a, const TableRow& b) { return a.rowid < b.rowid; });
}

/// Schema text as UTF-8. User-table text keeps the stored encoding.
std::string text_of(const Value& v, TextEncoding enc) {
  if (v.type != Value::Type::Text) return {};
  if (enc == TextEncoding::Utf8) return v.bytes;
  const bool le = enc == TextEncoding::Utf16le;
  std::string out;
  const auto unit = [&](std::size_t i) -> char32_t {
    const auto a = static_cast<std::uint8_t>(v.bytes[i]), b = static_cast<std::uint8_t>(v.bytes[i + 1]);
    return le ? (b << 8 | a) : (a << 8 | b);
  };
  for (std::size_t i = 0; i + 1 < v.bytes.size(); i += 2) {
    char32_t c = unit(i);
    if (c >= 0xD800 && c < 0xDC00 && i + 3 < v.bytes.size()) {
      const char32_t lo = unit(i + 2);
      if (lo >= 0xDC00 && lo < 0xE000) {
        c = 0x10000 + ((c - 0xD800) << 10) + (lo - 0xDC00);
        i += 2;
      }
    }
    if (c < 0x80) {
      out += static_cast<char>(c);
    } else if (c < 0x800) {
      out += static_cast<char>(0xC0 | c >> 6);
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else if (c < 0x10000) {
      out += static_cast<char>(0xE0 | c >> 12);
      out += static_cast<char>(0x80 | (c >> 6 & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | c >> 18);
      out += static_cast<char>(0x80 | (c >> 12 & 0x3F));
      out += static_cast<char>(0x80 | (c >> 6 & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }
  return out;
}

}  // namespace

std::pair<std::uint64_t, std::size_t> read_varint(ByteView b, std::size_t off) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    if (off + i >= b.size()) return {0, 0};
    const std::uint8_t byte = b[off + i];
    if (i == 8) return {(v << 8) | byte, 9};
    v = (v << 7) | (byte & 0x7F);
    if (!(byte & 0x80)) return {v, i + 1};
  }
  return {v, 9};
}

ByteView DbFile::page(std::uint32_t n) const {
  if (n == 0 || n > page_count_) return {};
  const std::uint64_t start = std::uint64_t{n - 1} * page_size_;
  if (start + page_size_ > data_->size()) return {};
  return ByteView(*data_).subspan(start, page_size_);
}

const SchemaEntry* DbFile::find_table(std::string_view name) const {
  for (const auto& e : schema_) {
    if (e.type == "table" && iequals(e.name, name)) return &e;
  }
  return nullptr;
}

DbFile open_db(Bytes bytes) {
  if (bytes.size() < 100 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(Errc::BadMagic, "not an SQLite 3 database");
  }
  const ByteView h(bytes);
  DbFile db;
  const std::uint32_t ps = be16(h, 16) == 1 ? 65536u : be16(h, 16);
  if (ps < 512 || ps > 65536 || !std::has_single_bit(ps)) {
    throw Error(Errc::BadMagic, "invalid page size " + std::to_string(ps));
  }
  db.page_size_ = ps;
  const std::uint8_t reserved = h[20];
  if (reserved >= ps - 480) throw Error(Errc::BadMagic, "reserved space leaves no usable page");
  db.usable_ = ps - reserved;
  switch (be32(h, 56)) {
    case 0:
    case 1: db.encoding_ = TextEncoding::Utf8; break;
    case 2: db.encoding_ = TextEncoding::Utf16le; break;
    case 3: db.encoding_ = TextEncoding::Utf16be; break;
    default:
      throw Error(Errc::UnsupportedEncoding, "text encoding " + std::to_string(be32(h, 56)));
  }
  if (h[18] == 2 || h[19] == 2) {
    db.warnings_.push_back("WalMode: database uses a write-ahead log; only checkpointed content is read");
  }
  const std::uint32_t from_size = static_cast<std::uint32_t>(bytes.size() / ps);
  const std::uint32_t in_header = be32(h, 28);
  db.page_count_ = (in_header != 0 && be32(h, 92) == be32(h, 24)) ? in_header : from_size;
  if (db.page_count_ > from_size) {
    db.warnings_.push_back("file holds " + std::to_string(from_size) + " of " +
                           std::to_string(db.page_count_) + " pages");
  }
  db.data_ = std::make_shared<const Bytes>(std::move(bytes));

  std::vector<TableRow> rows;
  scan_table(db, 1, rows, db.warnings_);
  for (const auto& r : rows) {
    if (r.values.size() < 5) {
      db.warnings_.push_back("schema row " + std::to_string(r.rowid) + " has too few columns");
      continue;
    }
    SchemaEntry e;
    e.type = text_of(r.values[0], db.encoding_);
    e.name = text_of(r.values[1], db.encoding_);
    e.tbl_name = text_of(r.values[2], db.encoding_);
    if (r.values[3].type == Value::Type::Integer) e.root_page = static_cast<std::uint32_t>(r.values[3].integer);
    e.sql = text_of(r.values[4], db.encoding_);
    db.schema_.push_back(std::move(e));
  }
  return db;
}

TableScan read_table(const DbFile& db, std::string_view name) {
  const SchemaEntry* e = db.find_table(name);
  if (!e) throw Error(Errc::NoSuchTable, std::string(name));
  TableScan scan;
  scan_table(db, e->root_page, scan.rows, scan.warnings);
  return scan;
}

std::vector<Column> parse_columns(std::string_view sql) {
  std::vector<Column> out;
  const auto open = sql.find('(');
  if (open == std::string_view::npos) return out;
  std::vector<std::string_view> defs;
  int depth = 0;
  char quote = 0;
  std::size_t start = open + 1;
  for (std::size_t i = open + 1; i < sql.size(); ++i) {
    const char c = sql[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'' || c == '`') {
      quote = c;
    } else if (c == '[') {
      quote = ']';
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (depth == 0) {
        defs.push_back(sql.substr(start, i - start));
        break;
      }
      --depth;
    } else if (c == ',' && depth == 0) {
      defs.push_back(sql.substr(start, i - start));
      start = i + 1;
    }
  }
  for (auto def : defs) {
    const auto b = def.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) continue;
    def.remove_prefix(b);
    std::string name;
    std::size_t rest = 0;
    const char q = def[0];
    if (q == '"' || q == '`' || q == '[') {
      const char close = q == '[' ? ']' : q;
      std::size_t i = 1;
      for (; i < def.size(); ++i) {
        if (def[i] == close) {
          if (close != ']' && i + 1 < def.size() && def[i + 1] == close) {
            name += close;
            ++i;
            continue;
          }
          break;
        }
        name += def[i];
      }
      rest = i + 1;
    } else {
      rest = std::min(def.find_first_of(" \t\r\n("), def.size());
      name = std::string(def.substr(0, rest));
      const std::string kw = upper(name);
      if (kw == "CONSTRAINT" || kw == "PRIMARY" || kw == "UNIQUE" || kw == "CHECK" || kw == "FOREIGN") {
        continue;
      }
    }
    const std::string tail = upper(def.substr(std::min(rest, def.size())));
    const auto t = tail.find_first_not_of(" \t\r\n");
    const bool integer_type = t != std::string::npos && tail.compare(t, 7, "INTEGER") == 0 &&
                              (t + 7 == tail.size() || !std::isalnum(static_cast<unsigned char>(tail[t + 7])));
    const bool pk = tail.find("PRIMARY KEY") != std::string::npos && tail.find("DESC") == std::string::npos;
    out.push_back({name, integer_type && pk});
  }
  return out;
}

}  // namespace residue::sqlite
