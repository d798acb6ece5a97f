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

#include <algorithm>
#include <map>

#include "residue/artifacts.hpp"
#include "residue/digest.hpp"

namespace residue::art {

namespace {

bool under(std::string_view path, std::string_view dir) {
  return path.size() > dir.size() && path.starts_with(dir) && path[dir.size()] == '/';
}

std::string basename(std::string_view path) {
  const auto slash = path.rfind('/');
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

std::string where(const snap::Source& src, std::string_view path) {
  return src.volume_id() + ":" + std::string(path);
}

/// Content of the allocated file at `path`, or nullopt (with a warning when
/// the file exists but cannot be read cleanly).
std::optional<Bytes> read_file(const snap::Source& src, std::string_view path,
                               std::vector<std::string>& warnings) {
  const auto r = src.read_path(path);
  if (!r) return std::nullopt;
  if (r->error) {
    warnings.push_back(where(src, path) + ": " + std::string(errc_name(*r->error)) + ": " + r->message);
    return std::nullopt;
  }
  return r->bytes;
}

template <typename Fn>
void for_each_file(const snap::Source& src, Fn&& fn) {
  const auto& entries = src.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.kind == snap::Kind::File && e.allocation == Allocation::Allocated) fn(i, e);
  }
}

nlohmann::json opt(const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

ArtifactFindings extract_artifacts(const std::vector<const snap::Source*>& sources,
                                   const ArtifactConfig& cfg, const hashdb::HashSetDb* alert) {
  ArtifactFindings f;
  if (alert) f.alert_set = alert->name;

  for (const snap::Source* src : sources) {
    for_each_file(*src, [&](std::size_t i, const snap::SourceEntry& e) {
      if (!under(e.path, cfg.uploads_dir) || e.path == cfg.metadata_file) return;
      const ReadResult r = src->read(i);
      if (r.error) {
        f.warnings.push_back(where(*src, e.path) + ": " + std::string(errc_name(*r.error)) + ": " + r.message);
        return;
      }
      const DigestPair d = digest(r.bytes);
      f.uploads.push_back({src->volume_id(), e.path, parse_upload_name(basename(e.path)), d.md5, d.sha1});
    });
  }
  std::set<std::string> known;
  for (const auto& u : f.uploads) known.insert(u.md5);
  if (alert) known.insert(alert->md5_values.begin(), alert->md5_values.end());

  for (const snap::Source* src : sources) {
    if (auto bytes = read_file(*src, cfg.metadata_file, f.warnings)) {
      try {
        auto entries = parse_metadata_yaml(residue::to_string(*bytes));
        f.metadata.insert(f.metadata.end(), entries.begin(), entries.end());
      } catch (const Error& e) {
        f.warnings.push_back(where(*src, cfg.metadata_file) + ": " + e.what());
      }
    }

    std::map<std::string, std::size_t> logs;
    for_each_file(*src, [&](std::size_t i, const snap::SourceEntry& e) {
      if (!under(e.path, cfg.log_dir)) return;
      const std::string name = basename(e.path);
      if (e.path.size() == cfg.log_dir.size() + 1 + name.size()) logs[name] = i;
    });
    std::vector<std::string> names;
    for (const auto& [n, i] : logs) names.push_back(n);
    std::vector<std::string> texts;
    for (const auto& n : order_log_files(names, cfg.log_basename)) {
      const ReadResult r = src->read(logs[n]);
      if (r.error) f.warnings.push_back(where(*src, cfg.log_dir + "/" + n) + ": " + r.message);
      texts.push_back(residue::to_string(r.bytes));
    }
    auto events = parse_octoprint_log(texts, cfg.patterns);
    f.log_events.insert(f.log_events.end(), events.begin(), events.end());

    for_each_file(*src, [&](std::size_t i, const snap::SourceEntry& e) {
      if (!under(e.path, cfg.cache_dir)) return;
      const ReadResult r = src->read(i);
      if (r.error) {
        f.warnings.push_back(where(*src, e.path) + ": " + std::string(errc_name(*r.error)) + ": " + r.message);
        return;
      }
      if (auto hit = scan_cache_file(e.path, r.bytes, known, cfg.signature_min_lines)) {
        hit->volume_id = src->volume_id();
        f.cache_hits.push_back(std::move(*hit));
      }
    });

    if (auto bytes = read_file(*src, cfg.history_file, f.warnings)) {
      try {
        auto rows = parse_history(std::move(*bytes), &f.warnings);
        f.history.insert(f.history.end(), rows.begin(), rows.end());
      } catch (const Error& e) {
        f.warnings.push_back(where(*src, cfg.history_file) + ": " + e.what());
      }
    }
    if (auto bytes = read_file(*src, cfg.session_file, f.warnings)) {
      auto strings = extract_session_strings(*bytes);
      f.session_strings.insert(f.session_strings.end(), strings.begin(), strings.end());
    }
  }

  auto by_location = [](const auto& a, const auto& b) {
    return std::tie(a.volume_id, a.path) < std::tie(b.volume_id, b.path);
  };
  std::sort(f.uploads.begin(), f.uploads.end(), by_location);
  std::sort(f.cache_hits.begin(), f.cache_hits.end(), by_location);
  f.inferences = infer_deletions(f);
  if (alert) {
    for (const auto& u : f.uploads) f.alert_hits += alert->contains(u.md5);
    for (const auto& h : f.cache_hits) f.alert_hits += h.matched_md5 && alert->contains(*h.matched_md5);
  }
  return f;
}

std::vector<DeletionInference> infer_deletions(const ArtifactFindings& findings) {
  std::set<std::string> in_uploads;
  for (const auto& u : findings.uploads) in_uploads.insert(u.md5);
  std::map<std::string, std::vector<std::string>> evidence;
  for (const auto& h : findings.cache_hits) {
    if (h.match_kind != MatchKind::ExactHash || !h.matched_md5) continue;
    if (in_uploads.count(*h.matched_md5)) continue;
    evidence[*h.matched_md5].push_back(h.path);
  }
  std::vector<DeletionInference> out;
  for (auto& [md5, paths] : evidence) {
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    DeletionInference d;
    d.design_md5 = md5;
    d.evidence_cache_paths = paths;
    out.push_back(std::move(d));
  }
  return out;
}

nlohmann::json to_json(const ArtifactFindings& f) {
  using nlohmann::json;
  json j = json::object();
  j["alert_set"] = f.alert_set.empty() ? json() : json(f.alert_set);
  j["alert_hits"] = f.alert_hits;

  json uploads = json::array();
  for (const auto& u : f.uploads) {
    json o = {{"volume_id", u.volume_id}, {"path", u.path}, {"md5", u.md5}, {"sha1", u.sha1}};
    if (u.parts) {
      o["design_name"] = u.parts->design_name;
      o["numeric_id"] = u.parts->numeric_id;
      o["timestamp"] = format_utc(u.parts->timestamp);
    } else {
      o["design_name"] = nullptr;
      o["numeric_id"] = nullptr;
      o["timestamp"] = nullptr;
    }
    uploads.push_back(std::move(o));
  }
  j["uploads"] = std::move(uploads);

  json metadata = json::array();
  for (const auto& m : f.metadata) {
    json o = {{"file_name", m.file_name},
              {"sha1", m.sha1},
              {"estimated_print_time_s", m.estimated_print_time_s},
              {"filament_mm", m.filament_mm},
              {"numeric_id", opt(m.numeric_id)},
              {"raw", m.raw}};
    o["last_print_time"] = m.last_print_time ? json(format_utc(*m.last_print_time)) : json();
    o["last_print_success"] = m.last_print_success ? json(*m.last_print_success) : json();
    metadata.push_back(std::move(o));
  }
  j["metadata"] = std::move(metadata);

  json events = json::array();
  for (const auto& e : f.log_events) {
    events.push_back({{"file_index", e.file_index},
                      {"line", e.line},
                      {"timestamp", e.timestamp ? json(format_utc(*e.timestamp)) : json()},
                      {"logger", e.logger},
                      {"level", e.level},
                      {"kind", std::string(to_string(e.kind))},
                      {"detail", e.detail},
                      {"message", e.message}});
  }
  j["log_events"] = std::move(events);

  json hits = json::array();
  for (const auto& h : f.cache_hits) {
    hits.push_back({{"volume_id", h.volume_id},
                    {"path", h.path},
                    {"match_kind", std::string(to_string(h.match_kind))},
                    {"matched_md5", opt(h.matched_md5)},
                    {"run_length", h.run_length}});
  }
  j["cache_hits"] = std::move(hits);

  json history = json::array();
  for (const auto& h : f.history) {
    history.push_back({{"url", h.url}, {"title", h.title}, {"chrome_us", h.chrome_us}, {"time", format_utc(h.time)}});
  }
  j["history"] = std::move(history);
  j["session_strings"] = f.session_strings;

  json inferences = json::array();
  for (const auto& d : f.inferences) {
    inferences.push_back({{"design_md5", d.design_md5},
                          {"evidence_cache_paths", d.evidence_cache_paths},
                          {"absent_from_uploads", d.absent_from_uploads},
                          {"confidence", d.confidence}});
  }
  j["inferences"] = std::move(inferences);
  j["warnings"] = f.warnings;
  return j;
}

}  // namespace residue::art
