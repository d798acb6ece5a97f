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

#include "residue/cli.hpp"

#include <sys/stat.h>

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iomanip>

#include "residue/artifacts.hpp"
#include "residue/diff.hpp"
#include "residue/hashdb.hpp"
#include "residue/image.hpp"
#include "residue/report.hpp"
#include "residue/snapshot.hpp"
#include "residue/synth.hpp"

namespace residue::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<const snap::Source*> raw_sources(const snap::ImageSources& s) {
  std::vector<const snap::Source*> out;
  for (const auto& src : s.sources) out.push_back(src.get());
  return out;
}

/// Source for `--part N`, or the only source when N is absent.
const snap::Source& pick_source(const snap::ImageSources& s, std::optional<int> part) {
  if (s.sources.empty()) throw Error(Errc::UnsupportedVariant, "no readable volume in image");
  if (!part) {
    if (s.sources.size() != 1) throw UsageError("image has several volumes; pass --part");
    return *s.sources.front();
  }
  const std::string n = std::to_string(*part);
  for (const auto& src : s.sources) {
    const std::string& id = src->volume_id();
    if (id == "fat" + n || id == "ext" + n) return *src;
  }
  throw Error(Errc::NotFound, "no readable volume in partition " + n);
}

std::int64_t file_mtime(const fs::path& p) {
  struct stat st {};
  if (::stat(p.c_str(), &st) != 0) throw Error(Errc::NotFound, "cannot stat " + p.string());
  return st.st_mtim.tv_sec;
}

void emit(const std::string& path, std::string_view content, bool to_stdout, std::ostream& out) {
  if (to_stdout) {
    out << content;
  } else {
    snap::write_file_atomic(path, content);
  }
}

std::vector<std::string> load_prefix_list(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream in(snap::read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    line = line.substr(start);
    if (line[0] != '/') throw Error(Errc::BadConfig, "directory of interest must be absolute: " + line);
    while (line.size() > 1 && line.back() == '/') line.pop_back();
    out.push_back(line);
  }
  return out;
}

art::DeletionInference inference_from_json(const json& j) {
  art::DeletionInference d;
  d.design_md5 = j.at("design_md5").get<std::string>();
  d.evidence_cache_paths = j.at("evidence_cache_paths").get<std::vector<std::string>>();
  d.absent_from_uploads = j.at("absent_from_uploads").get<bool>();
  d.confidence = j.at("confidence").get<std::string>();
  return d;
}

std::string human_summary(const diff::DiffReport& r) {
  std::ostringstream os;
  os << "baseline " << escape_bytes(r.baseline_label) << " -> after " << escape_bytes(r.after_label) << "\n";
  os << "filter: " << r.filter_applied << "\n";
  for (auto k : {diff::ChangeKind::Created, diff::ChangeKind::Deleted, diff::ChangeKind::Modified,
                 diff::ChangeKind::Indeterminate, diff::ChangeKind::Unchanged}) {
    os << std::left << std::setw(14) << diff::to_string(k) << r.count(k) << "\n";
  }
  if (r.hidden_known) os << "hidden known  " << r.hidden_known << "\n";
  os << "alerts        " << r.alert_count() << "\n";
  for (const auto& c : r.changes) {
    os << std::left << std::setw(14) << diff::to_string(c.kind) << c.volume_id << ":" << escape_bytes(c.path);
    if (c.classification == hashdb::Classification::Alert) os << "  [alert]";
    os << "\n";
  }
  return os.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Read-only differential analysis of 3D-printer SD card images", "residue"};
  app.require_subcommand(1);

  // img
  auto* img_cmd = app.add_subcommand("img", "Partition table and volume access");
  img_cmd->require_subcommand(1);
  std::string image_path;
  std::optional<int> part;
  bool with_deleted = false;
  std::string inner_path;
  std::string out_path;

  auto* partitions = img_cmd->add_subcommand("partitions", "List MBR partition entries");
  partitions->add_option("image", image_path, "Raw image")->required();

  auto* ls = img_cmd->add_subcommand("ls", "List files in one volume");
  ls->add_option("image", image_path, "Raw image")->required();
  ls->add_option("--part", part, "Partition index (0-3)");
  ls->add_flag("--deleted", with_deleted, "Include deleted entries");

  auto* extract = img_cmd->add_subcommand("extract", "Copy one file out of a volume");
  extract->add_option("image", image_path, "Raw image")->required();
  extract->add_option("path", inner_path, "Absolute path inside the volume")->required();
  extract->add_option("--part", part, "Partition index (0-3)");
  extract->add_option("-o,--output", out_path, "Destination file")->required();

  // snapshot
  auto* snapshot = app.add_subcommand("snapshot", "Hash every file of an image or directory");
  std::string input;
  std::string label;
  std::string volume_id = "tree";
  std::optional<std::int64_t> created_at;
  unsigned threads = 1;
  bool to_stdout = false;
  snapshot->add_option("input", input, "Raw image or directory")->required();
  snapshot->add_option("-o,--output", out_path, "Snapshot file");
  snapshot->add_option("--label", label, "Snapshot label (default: input file name)");
  snapshot->add_option("--volume-id", volume_id, "Volume id for a directory input")->capture_default_str();
  snapshot->add_option("--created-at", created_at, "Acquisition time, unix seconds");
  snapshot->add_option("--threads", threads, "Hashing threads")->capture_default_str()->check(CLI::Range(1u, 256u));
  snapshot->add_flag("--stdout", to_stdout, "Write to standard output instead of a file");

  // hashdb
  auto* hashdb_cmd = app.add_subcommand("hashdb", "Hash-set management");
  hashdb_cmd->require_subcommand(1);
  auto* make_ignore = hashdb_cmd->add_subcommand("make-ignore", "Ignore set from a snapshot");
  make_ignore->add_option("snapshot", input, "Snapshot file")->required();
  make_ignore->add_option("-o,--output", out_path, "Hash-set file");
  make_ignore->add_flag("--stdout", to_stdout, "Write to standard output instead of a file");

  // diff
  auto* diff_cmd = app.add_subcommand("diff", "Compare two snapshots");
  std::string base_path;
  std::string after_path;
  std::string alert_path;
  std::string ignore_path;
  std::string tsv_path;
  bool all = false;
  bool include_unchanged = false;
  bool show_known = false;
  diff_cmd->add_option("baseline", base_path, "Baseline snapshot")->required();
  diff_cmd->add_option("after", after_path, "After snapshot")->required();
  diff_cmd->add_option("--alert", alert_path, "Alert hash set");
  diff_cmd->add_option("--ignore", ignore_path, "Ignore hash set; known files are hidden");
  diff_cmd->add_flag("--all", all, "Include unallocated (deleted) entries");
  diff_cmd->add_flag("--include-unchanged", include_unchanged, "List unchanged files too");
  diff_cmd->add_flag("--show-known", show_known, "Keep files matched by the ignore set");
  diff_cmd->add_option("-o,--output", out_path, "Diff JSON file");
  diff_cmd->add_option("--tsv", tsv_path, "Also write a tab-separated change list");
  diff_cmd->add_flag("--stdout", to_stdout, "Write diff JSON to standard output");

  // artifacts
  auto* artifacts = app.add_subcommand("artifacts", "Extract OctoPrint and Chromium artifacts");
  std::string config_path;
  artifacts->add_option("input", input, "Raw image or directory")->required();
  artifacts->add_option("--alert", alert_path, "Alert hash set");
  artifacts->add_option("--config", config_path, "Artifact configuration file");
  artifacts->add_option("-o,--output", out_path, "Findings JSON file");
  artifacts->add_flag("--stdout", to_stdout, "Write to standard output instead of a file");

  // report
  auto* report_cmd = app.add_subcommand("report", "Directory heatmap over diff results");
  std::vector<std::string> diff_paths;
  std::size_t depth = 1;
  std::string dirs_path;
  std::string findings_path;
  std::string json_path;
  std::string csv_path;
  std::string svg_path;
  report_cmd->add_option("diffs", diff_paths, "Diff JSON files, one column each")->required();
  report_cmd->add_option("--depth", depth, "Directory depth")->capture_default_str()->check(CLI::Range(1, 64));
  report_cmd->add_option("--dirs-of-interest", dirs_path, "File with one absolute directory per line");
  report_cmd->add_option("--config", config_path, "Artifact configuration file (dir_of_interest keys)");
  report_cmd->add_option("--findings", findings_path, "Findings JSON to embed");
  report_cmd->add_option("--json", json_path, "Report JSON output");
  report_cmd->add_option("--csv", csv_path, "Heatmap CSV output");
  report_cmd->add_option("--svg", svg_path, "Heatmap SVG output");
  report_cmd->add_flag("--stdout", to_stdout, "Write report JSON to standard output");
  report_cmd->get_option("--dirs-of-interest")->excludes(report_cmd->get_option("--config"));

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic baseline/after corpus");
  std::uint64_t seed = 0;
  int sequence = 0;
  bool noise = false;
  bool no_plant = false;
  bool no_baseline_copy = false;
  synth_cmd->add_option("--seed", seed, "Generator seed")->required();
  synth_cmd->add_option("--sequence", sequence, "Manipulation sequence 1-10")->required();
  synth_cmd->add_flag("--noise", noise, "Add browser background noise");
  synth_cmd->add_flag("--no-plant-cache", no_plant, "Uploads leave no browser cache copies");
  synth_cmd->add_flag("--no-baseline-cache", no_baseline_copy, "Baseline cache holds no design copy");
  synth_cmd->add_option("-o,--output", out_path, "Output directory (must not exist)")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "residue: " << e.what() << "\n";
    return kBadUsage;
  }

  try {
    if (img_cmd->parsed()) {
      const auto image = img::RawImage::open(image_path);
      if (partitions->parsed()) {
        out << img::parse_mbr(image).to_text();
        return kOk;
      }
      const auto sources = snap::open_image_sources(image, ls->parsed() ? with_deleted : false);
      for (const auto& w : sources.warnings) err << "warning: " << w << "\n";
      const snap::Source& src = pick_source(sources, part);
      if (ls->parsed()) {
        // FAT times carry no zone; they print without the Z.
        const bool naive = src.volume_id().starts_with("fat");
        out << "kind\tallocation\tsize\tmtime\tpath\n";
        for (const auto& e : src.entries()) {
          std::string when = e.mtime ? format_utc_seconds(*e.mtime) : "-";
          if (naive && e.mtime) when.pop_back();
          out << snap::to_string(e.kind) << '\t' << to_string(e.allocation) << '\t' << e.size_bytes << '\t'
              << when << '\t' << escape_bytes(e.path) << "\n";
        }
        return kOk;
      }
      const auto r = src.read_path(inner_path);
      if (!r) throw Error(Errc::NotFound, inner_path + " not found in " + src.volume_id());
      if (!r->ok()) throw Error(*r->error, r->message);
      snap::write_file_atomic(out_path, to_string(r->bytes));
      return kOk;
    }

    if (snapshot->parsed()) {
      if (out_path.empty() == !to_stdout) throw UsageError("snapshot needs exactly one of -o or --stdout");
      const fs::path in(input);
      const bool is_dir = fs::is_directory(in);
      snap::ImageSources sources;
      if (is_dir) {
        sources.sources.push_back(snap::open_directory(in, volume_id));
      } else {
        sources = snap::open_sources(in);
      }
      for (const auto& w : sources.warnings) err << "warning: " << w << "\n";
      if (sources.sources.empty()) throw Error(Errc::UnsupportedVariant, "no readable volume in " + input);
      if (label.empty()) label = fs::absolute(in).lexically_normal().filename().string();
      if (label.empty()) label = "unlabeled";
      snap::BuildOptions opt;
      opt.threads = threads;
      snap::Snapshot s = snap::build_snapshot(raw_sources(sources), label, opt);
      if (created_at) {
        s.created_at = *created_at;
      } else if (is_dir) {
        std::int64_t newest = 0;
        for (const auto& [key, rec] : s.records) newest = std::max(newest, rec.mtime.value_or(0));
        s.created_at = newest;
      } else {
        s.created_at = file_mtime(in);
      }
      emit(out_path, snap::serialize(s), to_stdout, out);
      return kOk;
    }

    if (hashdb_cmd->parsed()) {
      if (out_path.empty() == !to_stdout) throw UsageError("make-ignore needs exactly one of -o or --stdout");
      emit(out_path, hashdb::make_ignore(snap::load_snapshot(input)), to_stdout, out);
      return kOk;
    }

    if (diff_cmd->parsed()) {
      if (!out_path.empty() && to_stdout) throw UsageError("-o and --stdout are exclusive");
      std::optional<hashdb::HashSetDb> alert;
      std::optional<hashdb::HashSetDb> ignore;
      if (!alert_path.empty()) alert = hashdb::load_hashset(alert_path, hashdb::Role::Alert);
      if (!ignore_path.empty()) ignore = hashdb::load_hashset(ignore_path, hashdb::Role::Ignore);
      diff::DiffOptions opt;
      opt.allocated_only = !all;
      opt.include_unchanged = include_unchanged;
      opt.hide_known = ignore.has_value() && !show_known;
      opt.alert = alert ? &*alert : nullptr;
      opt.ignore = ignore ? &*ignore : nullptr;
      const auto report = diff::diff(snap::load_snapshot(base_path), snap::load_snapshot(after_path), opt);
      if (!tsv_path.empty()) snap::write_file_atomic(tsv_path, diff::to_tsv(report));
      if (!out_path.empty() || to_stdout) {
        emit(out_path, report::canonical_json(report::to_json(report)), to_stdout, out);
      } else {
        out << human_summary(report);
      }
      return report.alert_count() > 0 ? kFindings : kOk;
    }

    if (artifacts->parsed()) {
      if (out_path.empty() == !to_stdout) throw UsageError("artifacts needs exactly one of -o or --stdout");
      const art::ArtifactConfig config = config_path.empty() ? art::ArtifactConfig{} : art::load_config(config_path);
      std::optional<hashdb::HashSetDb> alert;
      if (!alert_path.empty()) alert = hashdb::load_hashset(alert_path, hashdb::Role::Alert);
      const auto sources = snap::open_sources(input);
      if (sources.sources.empty()) throw Error(Errc::UnsupportedVariant, "no readable volume in " + input);
      const auto findings = art::extract_artifacts(raw_sources(sources), config, alert ? &*alert : nullptr);
      for (const auto& w : sources.warnings) err << "warning: " << w << "\n";
      emit(out_path, report::canonical_json(art::to_json(findings)), to_stdout, out);
      return findings.inferences.empty() && findings.alert_hits == 0 ? kOk : kFindings;
    }

    if (report_cmd->parsed()) {
      if (json_path.empty() && csv_path.empty() && svg_path.empty() && !to_stdout) {
        throw UsageError("report needs at least one of --json, --csv, --svg or --stdout");
      }
      std::vector<std::string> dirs = art::ArtifactConfig{}.dirs_of_interest;
      if (!dirs_path.empty()) dirs = load_prefix_list(dirs_path);
      if (!config_path.empty()) dirs = art::load_config(config_path).dirs_of_interest;
      std::vector<diff::DiffReport> diffs;
      for (const auto& p : diff_paths) diffs.push_back(report::load_diff(p));
      auto doc = report::build_report(std::move(diffs), depth, dirs);
      if (!findings_path.empty()) {
        json f;
        try {
          f = json::parse(snap::read_text_file(findings_path));
          for (const auto& i : f.at("inferences")) doc.inferences.push_back(inference_from_json(i));
        } catch (const json::exception& e) {
          throw Error(Errc::MalformedLine, findings_path + ": " + e.what());
        }
        doc.findings = std::move(f);
      }
      const std::string text = report::canonical_json(report::to_json(doc));
      if (!json_path.empty()) snap::write_file_atomic(json_path, text);
      if (to_stdout) out << text;
      if (!csv_path.empty()) snap::write_file_atomic(csv_path, report::to_csv(doc.matrix));
      if (!svg_path.empty()) snap::write_file_atomic(svg_path, report::to_svg(doc.matrix));
      return doc.inferences.empty() ? kOk : kFindings;
    }

    if (synth_cmd->parsed()) {
      synth::SynthOptions opt;
      opt.plant_cache = !no_plant;
      opt.baseline_cache_copy = !no_baseline_copy;
      synth::write_corpus(out_path, seed, sequence, noise, opt);
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "residue: " << e.what() << "\n";
    return kBadUsage;
  } catch (const Error& e) {
    if (e.code() == Errc::BadUsage) {
      err << "residue: " << e.what() << "\n";
      return kBadUsage;
    }
    err << "residue: " << e.what() << "\n";
    return kOperationalError;
  } catch (const std::exception& e) {
    err << "residue: " << e.what() << "\n";
    return kOperationalError;
  }
  return kBadUsage;
}

}  // namespace residue::cli
