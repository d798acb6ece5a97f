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

#include "residue/snapshot.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "residue/digest.hpp"

namespace residue::snap {

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::File: return "file";
    case Kind::Dir: return "dir";
    case Kind::Symlink: return "symlink";
  }
  return "file";
}

std::optional<Kind> kind_from_string(std::string_view s) {
  if (s == "file") return Kind::File;
  if (s == "dir") return Kind::Dir;
  if (s == "symlink") return Kind::Symlink;
  return std::nullopt;
}

namespace {

struct Job {
  const Source* source;
  std::size_t index;
};

FileRecord make_record(const Source& src, std::size_t index) {
  const SourceEntry& e = src.entries()[index];
  FileRecord r;
  r.volume_id = src.volume_id();
  r.path = e.path;
  r.kind = e.kind;
  r.size_bytes = e.size_bytes;
  r.mtime = e.mtime;
  r.allocation = e.allocation;
  r.warning = e.note;
  if (e.kind != Kind::File || (e.note && e.allocation == Allocation::Allocated)) return r;
  const ReadResult content = src.read(index);
  if (content.error) {
    std::string w = std::string(errc_name(*content.error)) + ": " + content.message;
    r.warning = r.warning ? *r.warning + "; " + w : w;
    return r;
  }
  const DigestPair d = digest(content.bytes);
  r.md5 = d.md5;
  r.sha1 = d.sha1;
  return r;
}

}  // namespace

Snapshot build_snapshot(const std::vector<const Source*>& sources, const std::string& label,
                        const BuildOptions& options) {
  std::vector<Job> jobs;
  for (const Source* s : sources) {
    for (std::size_t i = 0; i < s->entries().size(); ++i) jobs.push_back({s, i});
  }
  std::vector<FileRecord> results(jobs.size());
  const unsigned threads = std::max(1u, options.threads);
  if (threads == 1 || jobs.size() < 2) {
    for (std::size_t i = 0; i < jobs.size(); ++i) results[i] = make_record(*jobs[i].source, jobs[i].index);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          results[i] = make_record(*jobs[i].source, jobs[i].index);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  Snapshot snap;
  snap.label = label;
  snap.created_at = options.created_at;
  for (auto& r : results) {
    auto key = r.key();
    if (!snap.records.try_emplace(key, std::move(r)).second) {
      throw Error(Errc::DuplicateKey, "duplicate record " + r.volume_id + ":" + r.path);
    }
  }
  return snap;
}

Snapshot build_snapshot(const Source& source, const std::string& label, const BuildOptions& options) {
  return build_snapshot(std::vector<const Source*>{&source}, label, options);
}

namespace {

constexpr std::string_view kMagicLine = "# residue-snapshot 1";
constexpr std::string_view kColumns =
    "#volume_id\tpath\tkind\tsize\tmtime\tallocation\tmd5\tsha1\twarning";

std::string field(std::string_view s) { return s == "-" ? "%2D" : escape_bytes(s); }

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-') {
    neg = true;
    i = 1;
    if (s.size() == 1) return std::nullopt;
  }
  std::int64_t v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    v = v * 10 + (s[i] - '0');
  }
  return neg ? -v : v;
}

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
  throw Error(Errc::MalformedLine, "line " + std::to_string(line) + ": " + why);
}

}  // namespace

std::string serialize(const Snapshot& s) {
  std::ostringstream os;
  os << kMagicLine << "\n";
  os << "# label " << field(s.label) << "\n";
  os << "# created_at " << format_utc_seconds(s.created_at) << "\n";
  os << kColumns << "\n";
  for (const auto& [key, r] : s.records) {
    os << field(r.volume_id) << '\t' << field(r.path) << '\t' << to_string(r.kind) << '\t'
       << r.size_bytes << '\t' << (r.mtime ? std::to_string(*r.mtime) : "-") << '\t'
       << to_string(r.allocation) << '\t' << (r.md5 ? *r.md5 : "-") << '\t'
       << (r.sha1 ? *r.sha1 : "-") << '\t' << (r.warning ? field(*r.warning) : "-") << "\n";
  }
  return os.str();
}

Snapshot parse_snapshot(std::string_view text) {
  Snapshot snap;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto text_field = [&](std::string_view f, const char* what) {
    auto v = unescape_bytes(f);
    if (!v) malformed(line_no, std::string("bad escape in ") + what);
    return *v;
  };
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) malformed(line_no, "truncated line (no terminating newline)");
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.starts_with("# label ")) {
        snap.label = text_field(line.substr(8), "label");
      } else if (line.starts_with("# created_at ")) {
        const auto t = parse_utc(line.substr(13));
        if (!t) malformed(line_no, "bad created_at timestamp");
        snap.created_at = std::chrono::floor<std::chrono::seconds>(*t).time_since_epoch().count();
      }
      continue;
    }
    const auto f = split_tabs(line);
    if (f.size() != 9) malformed(line_no, "expected 9 fields, found " + std::to_string(f.size()));
    FileRecord r;
    r.volume_id = text_field(f[0], "volume_id");
    r.path = text_field(f[1], "path");
    const auto kind = kind_from_string(f[2]);
    if (!kind) malformed(line_no, "unknown kind '" + std::string(f[2]) + "'");
    r.kind = *kind;
    const auto size = parse_int(f[3]);
    if (!size || *size < 0) malformed(line_no, "bad size");
    r.size_bytes = static_cast<std::uint64_t>(*size);
    if (f[4] != "-") {
      const auto mt = parse_int(f[4]);
      if (!mt) malformed(line_no, "bad mtime");
      r.mtime = *mt;
    }
    if (f[5] == "allocated") {
      r.allocation = Allocation::Allocated;
    } else if (f[5] == "deleted") {
      r.allocation = Allocation::Deleted;
    } else {
      malformed(line_no, "bad allocation");
    }
    if (f[6] != "-") {
      if (!is_lower_hex(f[6], 32)) malformed(line_no, "bad md5");
      r.md5 = std::string(f[6]);
    }
    if (f[7] != "-") {
      if (!is_lower_hex(f[7], 40)) malformed(line_no, "bad sha1");
      r.sha1 = std::string(f[7]);
    }
    if (r.md5.has_value() != r.sha1.has_value()) malformed(line_no, "md5 and sha1 must both be present");
    if (r.md5 && r.kind != Kind::File) malformed(line_no, "hashes on a non-file record");
    if (f[8] != "-") r.warning = text_field(f[8], "warning");
    auto key = r.key();
    if (!snap.records.try_emplace(key, std::move(r)).second) {
      throw Error(Errc::DuplicateKey, "line " + std::to_string(line_no) + ": duplicate record");
    }
  }
  return snap;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::WriteFailure, "cannot create " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::WriteFailure, "write failed for " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::WriteFailure, "cannot rename into " + path.string());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw Error(Errc::NotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Unreadable, path.string());
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::Unreadable, path.string());
  return s;
}

void save_snapshot(const Snapshot& s, const std::filesystem::path& path) {
  write_file_atomic(path, serialize(s));
}

Snapshot load_snapshot(const std::filesystem::path& path) { return parse_snapshot(read_text_file(path)); }

}  // namespace residue::snap
