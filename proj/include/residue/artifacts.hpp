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

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "residue/common.hpp"
#include "residue/hashdb.hpp"
#include "residue/snapshot.hpp"

namespace residue::art {

// ---- upload file names -----------------------------------------------------

struct UploadNameParts {
  std::string design_name;
  std::string numeric_id;  // kept as digits so leading zeros survive
  UtcMillis timestamp;

  bool operator==(const UploadNameParts&) const = default;
};

/// `<name>-<digits>-<YYYY-MM-DDTHH-MM-SS.mmmZ>.gcode`. The name may contain
/// hyphens; only the trailing id and timestamp groups are consumed.
std::optional<UploadNameParts> parse_upload_name(std::string_view filename);
std::string render_upload_name(const UploadNameParts& parts);

// ---- .metadata.yaml ----------------------------------------------------------

struct MetadataEntry {
  std::string file_name;
  std::string sha1;
  double estimated_print_time_s = 0.0;
  double filament_mm = 0.0;
  std::optional<std::string> numeric_id;
  std::optional<UtcMicros> last_print_time;
  std::optional<bool> last_print_success;
  /// Keys outside the documented set, verbatim.
  std::map<std::string, std::string> raw;

  bool operator==(const MetadataEntry&) const = default;
};

/// Restricted YAML: a top-level mapping of file name to a mapping of
/// scalars. Throws Error{YamlSubsetViolation} naming the line.
std::vector<MetadataEntry> parse_metadata_yaml(std::string_view text);
std::string render_metadata_yaml(const std::vector<MetadataEntry>& entries);

// ---- octoprint.log -----------------------------------------------------------

enum class LogKind { ClientConnect, Upload, SystemCommand, Other };
std::string_view to_string(LogKind k);

struct LogPatterns {
  // ECMAScript regexes, matched case-insensitively against the message.
  // Capture group 1 is the event detail.
  std::string client_connect = R"(New connection from client: \[?([0-9A-Fa-f:.]+)\]?)";
  std::string upload = R"(upload.*?([^\s,;:'"/\\]+\.gcode))";
  std::string system_command = R"(Performing command for ([\w-]+):)";
};

struct LogEvent {
  std::optional<UtcMillis> timestamp;
  std::string logger;
  std::string level;
  std::string message;
  LogKind kind = LogKind::Other;
  /// IP address, design name or command name; empty for `other`.
  std::string detail;
  std::size_t file_index = 0;
  std::size_t line = 0;

  bool operator==(const LogEvent&) const = default;
};

/// Files oldest rotation first. Lines that do not fit the log grammar come
/// back as `other` events carrying the raw text.
std::vector<LogEvent> parse_octoprint_log(const std::vector<std::string>& files,
                                          const LogPatterns& patterns = {});

/// Orders rotated log names oldest first: date-suffixed, then numbered
/// (highest first), then the live file.
std::vector<std::string> order_log_files(std::vector<std::string> names, std::string_view base);

// ---- Chromium cache ----------------------------------------------------------

enum class MatchKind { ExactHash, Signature };
std::string_view to_string(MatchKind k);

struct CacheHit {
  std::string volume_id;
  std::string path;
  MatchKind match_kind = MatchKind::ExactHash;
  std::optional<std::string> matched_md5;
  /// Longest run of G-code-shaped lines (signature hits only).
  std::size_t run_length = 0;

  bool operator==(const CacheHit&) const = default;
};

/// True for one line of G-code: optional whitespace, G or M with digits,
/// then parameter words, optionally followed by a ';' comment.
bool is_gcode_line(std::string_view line);
/// Longest run of consecutive G-code lines. Blank and comment-only lines
/// neither extend nor break a run.
std::size_t longest_gcode_run(std::string_view bytes);

/// Exact-hash match wins over the signature detector for the same file.
std::optional<CacheHit> scan_cache_file(std::string_view path, ByteView content,
                                        const std::set<std::string>& known_md5,
                                        std::size_t min_run = 20);

// ---- History / CurrentSession -----------------------------------------------

constexpr std::int64_t kChromeEpochOffsetUs = 11644473600LL * 1000000LL;
UtcMicros chrome_time(std::int64_t chrome_us);

struct HistoryEntry {
  std::string url;
  std::string title;
  std::int64_t chrome_us = 0;
  UtcMicros time;

  bool operator==(const HistoryEntry&) const = default;
};

/// Rows of the `urls` table. Propagates sqlite reader errors.
std::vector<HistoryEntry> parse_history(Bytes db_bytes, std::vector<std::string>* warnings = nullptr);

/// Maximal runs of at least `min_len` printable ASCII bytes, in file order.
std::vector<std::string> extract_session_strings(ByteView bytes, std::size_t min_len = 4);

// ---- G-code estimator --------------------------------------------------------

struct GcodeStats {
  double estimated_print_time_s = 0.0;
  double filament_mm = 0.0;
  std::size_t malformed_lines = 0;
  std::size_t moves_without_feedrate = 0;
  std::vector<std::string> warnings;
};

/// Constant-feedrate estimate: time is segment length over feedrate,
/// filament is the sum of positive extrusion deltas.
GcodeStats gcode_stats(std::string_view bytes);

// ---- configuration -----------------------------------------------------------

struct ArtifactConfig {
  std::string uploads_dir = "/home/pi/.octoprint/uploads";
  std::string metadata_file = "/home/pi/.octoprint/uploads/.metadata.yaml";
  std::string log_dir = "/home/pi/.octoprint/logs";
  std::string log_basename = "octoprint.log";
  std::string cache_dir = "/root/.cache/chromium/Default/Cache";
  std::string history_file = "/root/.config/chromium/Default/History";
  std::string session_file = "/root/.config/chromium/Default/CurrentSession";
  std::size_t signature_min_lines = 20;
  LogPatterns patterns;
  std::vector<std::string> dirs_of_interest = {"/home/pi/.octoprint/uploads",
                                               "/home/pi/.octoprint/logs",
                                               "/root/.cache/chromium/Default/Cache"};
};

/// `key = value` lines, '#' comments. Repeated `dir_of_interest` keys build
/// a list that replaces the default. Throws Error{BadConfig}.
ArtifactConfig parse_config(std::string_view text);
ArtifactConfig load_config(const std::filesystem::path& path);

// ---- extraction --------------------------------------------------------------

struct UploadFinding {
  std::string volume_id;
  std::string path;
  std::optional<UploadNameParts> parts;
  std::string md5;
  std::string sha1;

  bool operator==(const UploadFinding&) const = default;
};

struct DeletionInference {
  std::string design_md5;
  std::vector<std::string> evidence_cache_paths;
  bool absent_from_uploads = true;
  std::string confidence = "deleted-after-access";

  bool operator==(const DeletionInference&) const = default;
};

struct ArtifactFindings {
  std::vector<UploadFinding> uploads;
  std::vector<MetadataEntry> metadata;
  std::vector<LogEvent> log_events;
  std::vector<CacheHit> cache_hits;
  std::vector<HistoryEntry> history;
  std::vector<std::string> session_strings;
  std::vector<DeletionInference> inferences;
  std::vector<std::string> warnings;
  std::string alert_set;

  /// Uploads or exact cache hits whose MD5 is in the alert set.
  std::size_t alert_hits = 0;
};

/// Reads every configured artifact location from the sources. The known
/// hashes for the cache scan are the alert set plus every uploads-dir MD5.
ArtifactFindings extract_artifacts(const std::vector<const snap::Source*>& sources,
                                   const ArtifactConfig& config,
                                   const hashdb::HashSetDb* alert = nullptr);

/// One inference per MD5 with an exact cache hit and no uploads-dir record
/// carrying it.
std::vector<DeletionInference> infer_deletions(const ArtifactFindings& findings);

nlohmann::json to_json(const ArtifactFindings& findings);

}  // namespace residue::art
