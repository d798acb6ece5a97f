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

#include <memory>
#include <string>
#include <vector>

#include "residue/common.hpp"

namespace residue::sqlite {

enum class TextEncoding { Utf8, Utf16le, Utf16be };

struct SchemaEntry {
  std::string type;  // table, index, view, trigger
  std::string name;
  std::string tbl_name;
  std::uint32_t root_page = 0;
  std::string sql;
};

struct Value {
  enum class Type { Null, Integer, Real, Text, Blob };
  Type type = Type::Null;
  std::int64_t integer = 0;
  double real = 0.0;
  /// Raw bytes for Text (in the database encoding) and Blob.
  std::string bytes;

  static Value null() { return {}; }
  static Value of_int(std::int64_t v) { return {Type::Integer, v, 0.0, {}}; }
  static Value of_real(double v) { return {Type::Real, 0, v, {}}; }
  static Value of_text(std::string v) { return {Type::Text, 0, 0.0, std::move(v)}; }
  static Value of_blob(std::string v) { return {Type::Blob, 0, 0.0, std::move(v)}; }

  bool operator==(const Value&) const = default;
};

struct TableRow {
  std::int64_t rowid = 0;
  std::vector<Value> values;

  bool operator==(const TableRow&) const = default;
};

struct Column {
  std::string name;
  /// INTEGER PRIMARY KEY: stored as NULL in the record, value is the rowid.
  bool rowid_alias = false;
};

/// Column list of a CREATE TABLE statement. Table constraints are skipped.
std::vector<Column> parse_columns(std::string_view create_sql);

class DbFile {
 public:
  std::uint32_t page_size() const { return page_size_; }
  std::uint32_t page_count() const { return page_count_; }
  std::uint32_t usable_size() const { return usable_; }
  TextEncoding encoding() const { return encoding_; }
  const std::vector<SchemaEntry>& schema() const { return schema_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  const SchemaEntry* find_table(std::string_view name) const;
  /// Page `n` (1-based), or an empty view if it lies outside the file.
  ByteView page(std::uint32_t n) const;

 private:
  friend DbFile open_db(Bytes bytes);
  std::shared_ptr<const Bytes> data_;
  std::uint32_t page_size_ = 0;
  std::uint32_t page_count_ = 0;
  std::uint32_t usable_ = 0;
  TextEncoding encoding_ = TextEncoding::Utf8;
  std::vector<SchemaEntry> schema_;
  std::vector<std::string> warnings_;
};

/// Decodes the header and walks sqlite_master. Throws Error{BadMagic} or
/// Error{UnsupportedEncoding}; WAL mode is a warning.
DbFile open_db(Bytes bytes);

struct TableScan {
  std::vector<TableRow> rows;
  std::vector<std::string> warnings;
};

/// Full scan of a table b-tree, rows in rowid order. Throws
/// Error{NoSuchTable}. Corrupt pages are skipped with a warning naming them.
TableScan read_table(const DbFile& db, std::string_view name);

/// SQLite varint at `off`. Returns the value and its length (1-9), or a
/// length of 0 when the buffer ends first.
std::pair<std::uint64_t, std::size_t> read_varint(ByteView b, std::size_t off);

}  // namespace residue::sqlite
