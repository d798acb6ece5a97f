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

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "json.hpp"
#include "residue/common.hpp"
#include "residue/digest.hpp"
#include "residue/snapshot.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) { return fs::path(RESIDUE_FIXTURES) / name; }
inline fs::path golden(const std::string& name) { return fs::path(RESIDUE_GOLDEN) / name; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline residue::Bytes slurp_bytes(const fs::path& p) {
  const std::string s = slurp(p);
  return residue::Bytes(s.begin(), s.end());
}

inline void spit(const fs::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline const nlohmann::json& oracle() {
  static const nlohmann::json j = nlohmann::json::parse(slurp(fixture("oracle.json")));
  return j;
}

/// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("residue-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string random_bytes(std::mt19937_64& rng, std::size_t n) {
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(rng() & 0xFF);
  return s;
}

/// Comparable one-line rendering of a listing entry:
/// type, path, size, md5, symlink target, allocation.
inline std::string oracle_row(const nlohmann::json& e) {
  const std::string type = e["type"];
  std::string row = type + "\t" + e["path"].get<std::string>();
  if (type == "dir") return row + "\t\t\t\t" + (e["allocated"].get<bool>() ? "a" : "d");
  row += "\t" + std::to_string(e["size"].get<std::uint64_t>());
  row += "\t" + (e.contains("md5") ? e["md5"].get<std::string>() : std::string("-"));
  row += "\t" + (e.contains("target") ? e["target"].get<std::string>() : std::string());
  return row + "\t" + (e["allocated"].get<bool>() ? "a" : "d");
}

inline std::vector<std::string> oracle_rows(const nlohmann::json& entries) {
  std::vector<std::string> rows;
  for (const auto& e : entries) rows.push_back(oracle_row(e));
  std::sort(rows.begin(), rows.end());
  return rows;
}

/// The same rendering for everything a source enumerates. The " (deleted)"
/// suffix is dropped so deleted entries line up with the oracle's names.
inline std::vector<std::string> source_rows(const residue::snap::Source& src) {
  using residue::snap::Kind;
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < src.entries().size(); ++i) {
    const auto& e = src.entries()[i];
    std::string path = e.path;
    const bool allocated = e.allocation == residue::Allocation::Allocated;
    if (const auto pos = path.find(" (deleted"); !allocated && pos != std::string::npos) {
      path.resize(pos);
    }
    const std::string alloc = allocated ? "a" : "d";
    if (e.kind == Kind::Dir) {
      rows.push_back("dir\t" + path + "\t\t\t\t" + alloc);
      continue;
    }
    const auto r = src.read(i);
    const std::string content = residue::to_string(r.bytes);
    if (e.kind == Kind::Symlink) {
      rows.push_back("symlink\t" + path + "\t" + std::to_string(e.size_bytes) + "\t-\t" + content +
                     "\t" + alloc);
    } else {
      const std::string md5 =
          r.ok() && r.bytes.size() == e.size_bytes ? residue::md5_hex(r.bytes) : std::string("-");
      rows.push_back("file\t" + path + "\t" + std::to_string(e.size_bytes) + "\t" + md5 + "\t\t" +
                     alloc);
    }
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace testing
