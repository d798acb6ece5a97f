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

#include "residue/report.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

namespace residue::report {

namespace {

bool counts(const diff::ChangeRecord& c) { return c.kind != diff::ChangeKind::Unchanged; }

bool multi_volume(const std::vector<diff::DiffReport>& diffs) {
  std::set<std::string> volumes;
  for (const auto& d : diffs) {
    for (const auto& c : d.changes) {
      if (counts(c)) volumes.insert(c.volume_id);
    }
  }
  return volumes.size() > 1;
}

[[noreturn]] void bad_json(const std::string& why) { throw Error(Errc::MalformedLine, "diff json: " + why); }

std::string unescape_or_throw(const nlohmann::json& j, const char* field) {
  if (!j.is_string()) bad_json(std::string(field) + " is not a string");
  auto v = unescape_bytes(j.get<std::string>());
  if (!v) bad_json(std::string("bad escape in ") + field);
  return *v;
}

std::optional<std::string> md5_field(const nlohmann::json& j, const char* field) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string() || !is_lower_hex(j.get<std::string>(), 32)) bad_json(std::string(field) + " is not an MD5");
  return j.get<std::string>();
}

}  // namespace

std::string attribute_directory(std::string_view path, std::size_t depth) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (pos < path.size()) {
    auto slash = path.find('/', pos);
    if (slash == std::string_view::npos) slash = path.size();
    if (slash > pos) parts.push_back(path.substr(pos, slash - pos));
    pos = slash + 1;
  }
  const std::size_t k = parts.empty() ? 0 : std::min(depth, parts.size() - 1);
  if (k == 0) return "/";
  std::string out;
  for (std::size_t i = 0; i < k; ++i) {
    out += '/';
    out += parts[i];
  }
  return out;
}

HeatmapMatrix aggregate_by_directory(const std::vector<diff::DiffReport>& diffs, std::size_t depth) {
  if (depth == 0) throw Error(Errc::BadUsage, "depth must be at least 1");
  const bool prefix = multi_volume(diffs);
  std::map<std::string, std::vector<std::uint64_t>> rows;
  for (std::size_t col = 0; col < diffs.size(); ++col) {
    for (const auto& c : diffs[col].changes) {
      if (!counts(c)) continue;
      std::string label = attribute_directory(c.path, depth);
      if (prefix) label = c.volume_id + ":" + label;
      auto& row = rows[label];
      row.resize(diffs.size());
      ++row[col];
    }
  }
  HeatmapMatrix m;
  for (const auto& d : diffs) m.col_labels.push_back(d.after_label);
  for (auto& [label, row] : rows) {
    m.row_labels.push_back(label);
    m.raw.push_back(std::move(row));
    m.of_interest.push_back(false);
  }
  return m;
}

HeatmapMatrix directories_of_interest(const std::vector<diff::DiffReport>& diffs,
                                      const std::vector<std::string>& dirs) {
  HeatmapMatrix m;
  for (const auto& d : diffs) m.col_labels.push_back(d.after_label);
  for (const auto& dir : dirs) {
    std::vector<std::uint64_t> row(diffs.size(), 0);
    for (std::size_t col = 0; col < diffs.size(); ++col) {
      for (const auto& c : diffs[col].changes) {
        if (!counts(c)) continue;
        if (c.path == dir || (c.path.size() > dir.size() && c.path.starts_with(dir) && c.path[dir.size()] == '/')) {
          ++row[col];
        }
      }
    }
    m.row_labels.push_back(dir);
    m.raw.push_back(std::move(row));
    m.of_interest.push_back(true);
  }
  return m;
}

HeatmapMatrix append_rows(HeatmapMatrix base, const HeatmapMatrix& extra) {
  if (base.col_labels != extra.col_labels) throw Error(Errc::BadUsage, "column labels differ");
  base.row_labels.insert(base.row_labels.end(), extra.row_labels.begin(), extra.row_labels.end());
  base.raw.insert(base.raw.end(), extra.raw.begin(), extra.raw.end());
  base.of_interest.insert(base.of_interest.end(), extra.of_interest.begin(), extra.of_interest.end());
  if (!base.normalized.empty() || !extra.normalized.empty()) {
    base.normalized.insert(base.normalized.end(), extra.normalized.begin(), extra.normalized.end());
  }
  return base;
}

HeatmapMatrix normalize_rows(HeatmapMatrix m) {
  HeatmapMatrix out;
  out.col_labels = std::move(m.col_labels);
  for (std::size_t r = 0; r < m.row_labels.size(); ++r) {
    const auto& row = m.raw[r];
    const std::uint64_t max = row.empty() ? 0 : *std::max_element(row.begin(), row.end());
    if (max == 0) continue;
    std::vector<double> norm;
    for (const auto v : row) norm.push_back(v == max ? 1.0 : static_cast<double>(v) / static_cast<double>(max));
    out.row_labels.push_back(m.row_labels[r]);
    out.raw.push_back(row);
    out.normalized.push_back(std::move(norm));
    out.of_interest.push_back(r < m.of_interest.size() && m.of_interest[r]);
  }
  return out;
}

std::size_t unique_file_tally(const std::vector<diff::DiffReport>& diffs) {
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& d : diffs) {
    for (const auto& c : d.changes) {
      if (!counts(c)) continue;
      const auto slash = c.path.rfind('/');
      const std::string dir = c.volume_id + ":" + (slash == std::string::npos ? "" : c.path.substr(0, slash));
      keys.emplace(dir, slash == std::string::npos ? c.path : c.path.substr(slash + 1));
    }
  }
  return keys.size();
}

std::string canonical_json(const nlohmann::json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

nlohmann::json to_json(const diff::DiffReport& d) {
  using nlohmann::json;
  json counts_obj = json::object();
  for (auto k : {diff::ChangeKind::Created, diff::ChangeKind::Deleted, diff::ChangeKind::Modified,
                 diff::ChangeKind::Unchanged, diff::ChangeKind::Indeterminate}) {
    counts_obj[std::string(diff::to_string(k))] = d.count(k);
  }
  json changes = json::array();
  for (const auto& c : d.changes) {
    changes.push_back({{"volume_id", escape_bytes(c.volume_id)},
                       {"path", escape_bytes(c.path)},
                       {"change", std::string(diff::to_string(c.kind))},
                       {"entry", std::string(snap::to_string(c.entry_kind))},
                       {"before_md5", c.before_md5 ? json(*c.before_md5) : json()},
                       {"after_md5", c.after_md5 ? json(*c.after_md5) : json()},
                       {"classification", std::string(hashdb::to_string(c.classification))},
                       {"touched", c.touched}});
  }
  return {{"schema_version", kSchemaVersion},
          {"baseline_label", escape_bytes(d.baseline_label)},
          {"after_label", escape_bytes(d.after_label)},
          {"filter_applied", d.filter_applied},
          {"hidden_known", d.hidden_known},
          {"counts", counts_obj},
          {"changes", changes}};
}

diff::DiffReport diff_from_json(const nlohmann::json& j) {
  if (!j.is_object()) bad_json("top level is not an object");
  for (const char* key : {"schema_version", "baseline_label", "after_label", "filter_applied", "hidden_known",
                          "counts", "changes"}) {
    if (!j.contains(key)) bad_json(std::string("missing ") + key);
  }
  if (j["schema_version"] != kSchemaVersion) bad_json("unsupported schema_version");
  diff::DiffReport d;
  d.baseline_label = unescape_or_throw(j["baseline_label"], "baseline_label");
  d.after_label = unescape_or_throw(j["after_label"], "after_label");
  if (!j["filter_applied"].is_string()) bad_json("filter_applied is not a string");
  d.filter_applied = j["filter_applied"].get<std::string>();
  if (!j["hidden_known"].is_number_unsigned()) bad_json("hidden_known is not a count");
  d.hidden_known = j["hidden_known"].get<std::size_t>();
  if (!j["changes"].is_array()) bad_json("changes is not an array");
  for (const auto& c : j["changes"]) {
    if (!c.is_object()) bad_json("change is not an object");
    for (const char* key : {"volume_id", "path", "change", "entry", "before_md5", "after_md5", "classification", "touched"}) {
      if (!c.contains(key)) bad_json(std::string("change missing ") + key);
    }
    diff::ChangeRecord r;
    r.volume_id = unescape_or_throw(c["volume_id"], "volume_id");
    r.path = unescape_or_throw(c["path"], "path");
    const auto kind = c["change"].is_string() ? diff::change_kind_from_string(c["change"].get<std::string>()) : std::nullopt;
    if (!kind) bad_json("bad change kind");
    r.kind = *kind;
    const auto entry = c["entry"].is_string() ? snap::kind_from_string(c["entry"].get<std::string>()) : std::nullopt;
    if (!entry) bad_json("bad entry kind");
    r.entry_kind = *entry;
    r.before_md5 = md5_field(c["before_md5"], "before_md5");
    r.after_md5 = md5_field(c["after_md5"], "after_md5");
    const std::string cls = c["classification"].is_string() ? c["classification"].get<std::string>() : "";
    if (cls == "alert") {
      r.classification = hashdb::Classification::Alert;
    } else if (cls == "known") {
      r.classification = hashdb::Classification::Known;
    } else if (cls == "unknown") {
      r.classification = hashdb::Classification::Unknown;
    } else {
      bad_json("bad classification");
    }
    if (!c["touched"].is_boolean()) bad_json("touched is not a boolean");
    r.touched = c["touched"].get<bool>();
    ++d.counts[r.kind];
    d.changes.push_back(std::move(r));
  }
  const auto& counts_obj = j["counts"];
  for (auto k : {diff::ChangeKind::Created, diff::ChangeKind::Deleted, diff::ChangeKind::Modified,
                 diff::ChangeKind::Unchanged, diff::ChangeKind::Indeterminate}) {
    const std::string name(diff::to_string(k));
    if (!counts_obj.contains(name) || counts_obj[name] != d.count(k)) bad_json("counts disagree with changes");
  }
  return d;
}

diff::DiffReport load_diff(const std::filesystem::path& path) {
  const std::string text = snap::read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::MalformedLine, path.string() + ": " + e.what());
  }
  return diff_from_json(j);
}

ReportDocument build_report(std::vector<diff::DiffReport> diffs, std::size_t depth,
                            const std::vector<std::string>& dirs_of_interest) {
  ReportDocument doc;
  doc.depth = depth;
  doc.matrix = normalize_rows(
      append_rows(aggregate_by_directory(diffs, depth), directories_of_interest(diffs, dirs_of_interest)));
  doc.unique_files = unique_file_tally(diffs);
  doc.diffs = std::move(diffs);
  return doc;
}

nlohmann::json to_json(const ReportDocument& doc) {
  using nlohmann::json;
  json inputs = json::array();
  json summary = json::array();
  for (const auto& d : doc.diffs) {
    inputs.push_back({{"baseline_label", escape_bytes(d.baseline_label)},
                      {"after_label", escape_bytes(d.after_label)},
                      {"filter_applied", d.filter_applied}});
    summary.push_back({{"label", escape_bytes(d.after_label)},
                       {"created", d.count(diff::ChangeKind::Created)},
                       {"deleted", d.count(diff::ChangeKind::Deleted)},
                       {"modified", d.count(diff::ChangeKind::Modified)},
                       {"unchanged", d.count(diff::ChangeKind::Unchanged)},
                       {"indeterminate", d.count(diff::ChangeKind::Indeterminate)},
                       {"changes", d.change_count()},
                       {"alerts", d.alert_count()},
                       {"hidden_known", d.hidden_known}});
  }
  json rows = json::array();
  for (std::size_t r = 0; r < doc.matrix.rows(); ++r) {
    rows.push_back({{"directory", doc.matrix.row_labels[r]},
                    {"kind", doc.matrix.of_interest[r] ? "interest" : "depth"},
                    {"raw", doc.matrix.raw[r]},
                    {"normalized", doc.matrix.normalized[r]}});
  }
  json inferences = json::array();
  for (const auto& d : doc.inferences) {
    inferences.push_back({{"design_md5", d.design_md5},
                          {"evidence_cache_paths", d.evidence_cache_paths},
                          {"absent_from_uploads", d.absent_from_uploads},
                          {"confidence", d.confidence}});
  }
  return {{"schema_version", kSchemaVersion},
          {"inputs", {{"diffs", inputs}, {"hash_sets", doc.hash_sets}}},
          {"summary", summary},
          {"unique_files", doc.unique_files},
          {"directories", {{"depth", doc.depth}, {"columns", doc.matrix.col_labels}, {"rows", rows}}},
          {"artifacts", doc.findings ? *doc.findings : json()},
          {"inferences", inferences},
          {"warnings", doc.warnings}};
}

// ---- CSV ---------------------------------------------------------------------

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(Errc::MalformedLine, "csv: unterminated quote");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string to_csv(const HeatmapMatrix& m) {
  std::string out = "directory,kind";
  for (const auto& c : m.col_labels) out += "," + csv_field(c);
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += csv_field(m.row_labels[r]);
    out += m.of_interest[r] ? ",interest" : ",depth";
    for (const auto v : m.raw[r]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

HeatmapMatrix parse_csv(std::string_view text) {
  const auto rows = split_csv(text);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "directory" || rows[0][1] != "kind") {
    throw Error(Errc::MalformedLine, "csv: missing header");
  }
  HeatmapMatrix m;
  m.col_labels.assign(rows[0].begin() + 2, rows[0].end());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "csv line " + std::to_string(i + 1);
    if (row.size() != rows[0].size()) throw Error(Errc::MalformedLine, where + ": wrong field count");
    if (row[1] != "depth" && row[1] != "interest") throw Error(Errc::MalformedLine, where + ": bad kind");
    m.row_labels.push_back(row[0]);
    m.of_interest.push_back(row[1] == "interest");
    std::vector<std::uint64_t> values;
    for (std::size_t c = 2; c < row.size(); ++c) {
      std::uint64_t v = 0;
      const auto r = std::from_chars(row[c].data(), row[c].data() + row[c].size(), v);
      if (r.ec != std::errc() || r.ptr != row[c].data() + row[c].size()) {
        throw Error(Errc::MalformedLine, where + ": bad count '" + row[c] + "'");
      }
      values.push_back(v);
    }
    m.raw.push_back(std::move(values));
  }
  return m;
}

}  // namespace residue::report
