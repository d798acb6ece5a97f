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

#include "residue/artifacts.hpp"
#include "residue/sqlite.hpp"

namespace residue::art {

UtcMicros chrome_time(std::int64_t chrome_us) {
  return UtcMicros{std::chrono::microseconds{chrome_us - kChromeEpochOffsetUs}};
}

std::vector<HistoryEntry> parse_history(Bytes db_bytes, std::vector<std::string>* warnings) {
  const sqlite::DbFile db = sqlite::open_db(std::move(db_bytes));
  const sqlite::SchemaEntry* table = db.find_table("urls");
  if (!table) throw Error(Errc::NoSuchTable, "urls");
  const auto columns = sqlite::parse_columns(table->sql);
  auto index_of = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].name == name) return i;
    }
    return std::nullopt;
  };
  const auto url_col = index_of("url");
  const auto title_col = index_of("title");
  const auto time_col = index_of("last_visit_time");
  if (!url_col) throw Error(Errc::NoSuchTable, "urls table has no url column");

  const sqlite::TableScan scan = sqlite::read_table(db, "urls");
  if (warnings) {
    warnings->insert(warnings->end(), db.warnings().begin(), db.warnings().end());
    warnings->insert(warnings->end(), scan.warnings.begin(), scan.warnings.end());
  }
  std::vector<HistoryEntry> out;
  for (const auto& row : scan.rows) {
    auto text = [&](std::optional<std::size_t> c) -> std::string {
      if (!c || *c >= row.values.size()) return {};
      const auto& v = row.values[*c];
      return v.type == sqlite::Value::Type::Text ? v.bytes : std::string();
    };
    HistoryEntry e;
    e.url = text(url_col);
    e.title = text(title_col);
    if (time_col && *time_col < row.values.size() &&
        row.values[*time_col].type == sqlite::Value::Type::Integer) {
      e.chrome_us = row.values[*time_col].integer;
    }
    e.time = chrome_time(e.chrome_us);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> extract_session_strings(ByteView bytes, std::size_t min_len) {
  std::vector<std::string> out;
  std::string run;
  auto flush = [&] {
    if (run.size() >= min_len) out.push_back(run);
    run.clear();
  };
  for (const auto b : bytes) {
    if (b >= 0x20 && b <= 0x7E) {
      run += static_cast<char>(b);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace residue::art
