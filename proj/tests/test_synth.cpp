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

#include <doctest.h>

#include "pipeline.hpp"
#include "residue/report.hpp"
#include "support.hpp"

using namespace residue;
using diff::ChangeKind;

namespace {

const std::string kUploads = "/home/pi/.octoprint/uploads";
const std::string kCache = "/root/.cache/chromium/Default/Cache";

bool has_event(const synth::GroundTruth& gt, const std::string& path, ChangeKind k) {
  for (const auto& e : gt.events) {
    if (e.path == path && e.kind == k) return true;
  }
  return false;
}

hashdb::HashSetDb alert_of(const synth::DeviceModel& m) {
  return hashdb::parse_hashset(synth::alert_set(m), "alert", hashdb::Role::Alert);
}

}  // namespace

TEST_CASE("baseline is deterministic under seed") {
  const auto a = synth::build_baseline(0);
  const auto b = synth::build_baseline(0);
  CHECK(a == b);
  CHECK(synth::manifest(a) == synth::manifest(b));
  CHECK_FALSE(synth::manifest(synth::build_baseline(1)) == synth::manifest(a));

  std::size_t lines = 0;
  for (char c : synth::manifest(a)) lines += c == '\n';
  std::size_t files = 0;
  for (const auto& [vol, tree] : a.volumes) files += tree.file_count();
  CHECK(lines == files);
  CHECK(a.volumes.count("boot") == 1);
  CHECK(a.volumes.count("rootfs") == 1);
}

TEST_CASE("baseline content") {
  const auto m = synth::build_baseline(0);
  const auto& root = m.volumes.at("rootfs");
  const auto name = m.rectangular.file_name();
  CHECK(name == "Rectangular_Test_Token-770373878-2017-09-11T21-27-35.303Z.gcode");
  REQUIRE(root.find(kUploads + "/" + name) != nullptr);
  CHECK(art::parse_upload_name(name).has_value());
  const auto* release = root.find("/etc/os-release");
  REQUIRE(release != nullptr);
  CHECK(release->content.find("Octopi v0.13.0") != std::string::npos);
  CHECK(root.find(kCache + "/F_000016")->content == m.rectangular.gcode);
  CHECK(m.forensics.file_name().starts_with("Forensics_Test_Print-224546099-"));

  const auto meta = art::parse_metadata_yaml(root.find(kUploads + "/.metadata.yaml")->content);
  REQUIRE(meta.size() == 1);
  CHECK(meta[0].sha1 == m.rectangular.sha1);
  const auto stats = art::gcode_stats(m.rectangular.gcode);
  CHECK(meta[0].estimated_print_time_s == doctest::Approx(stats.estimated_print_time_s));

  const auto no_cache = synth::build_baseline(0, {true, false});
  CHECK(no_cache.volumes.at("rootfs").find(kCache + "/F_000016") == nullptr);
}

TEST_CASE("sequence ground truth shapes") {
  const auto base = synth::build_baseline(0);
  const auto up = base.forensics.file_name();

  const auto s1 = synth::apply_sequence(base, 1, false);
  CHECK(has_event(s1.truth, kUploads + "/" + up, ChangeKind::Created));
  CHECK(has_event(s1.truth, kUploads + "/.metadata.yaml", ChangeKind::Modified));
  CHECK(has_event(s1.truth, kCache + "/F_000017", ChangeKind::Created));
  for (const auto& e : s1.truth.events) CHECK(e.cause == synth::Cause::Action);

  const auto s4 = synth::apply_sequence(base, 4, false);
  const auto& root = s4.after.volumes.at("rootfs");
  CHECK(root.find(kUploads + "/" + up) == nullptr);
  REQUIRE(root.find(kCache + "/F_000017") != nullptr);
  CHECK(root.find(kCache + "/F_000017")->content == base.forensics.gcode);

  const auto s6 = synth::apply_sequence(base, 6, false);
  const auto meta = art::parse_metadata_yaml(s6.after.volumes.at("rootfs").find(kUploads + "/.metadata.yaml")->content);
  REQUIRE(meta.size() == 1);
  CHECK(meta[0].last_print_success == std::optional<bool>(false));

  const auto s9 = synth::apply_sequence(base, 9, false);
  bool delete_label = false;
  for (const auto& h : art::parse_history(
           Bytes(s9.after.volumes.at("rootfs").find("/root/.config/chromium/Default/History")->content.begin(),
                 s9.after.volumes.at("rootfs").find("/root/.config/chromium/Default/History")->content.end()))) {
    delete_label |= h.title == "menu:delete";
  }
  CHECK(delete_label);

  CHECK_THROWS_AS(synth::apply_sequence(base, 11, false), Error);
  CHECK_THROWS_AS(synth::apply_sequence(base, 0, false), Error);
  CHECK(synth::apply_sequence(base, 7, true).truth.events.size() > synth::apply_sequence(base, 7, false).truth.events.size());
}

TEST_CASE("sequence output is deterministic") {
  const auto base = synth::build_baseline(3);
  for (int id = 1; id <= synth::kSequenceCount; ++id) {
    const auto a = synth::apply_sequence(base, id, true);
    const auto b = synth::apply_sequence(base, id, true);
    CHECK(a.after == b.after);
    CHECK(synth::ground_truth_tsv(a.truth) == synth::ground_truth_tsv(b.truth));
  }
}

TEST_CASE("diff equals ground truth for every sequence") {
  testing::TempDir tmp;
  for (const std::uint64_t seed : {0ULL, 7ULL}) {
    const auto base = synth::build_baseline(seed);
    const auto alert = alert_of(base);
    const auto work = tmp / ("seed" + std::to_string(seed));
    for (int id = 1; id <= synth::kSequenceCount; ++id) {
      for (const bool noise : {false, true}) {
        CAPTURE(seed);
        CAPTURE(id);
        CAPTURE(noise);
        const auto run = pipeline::run_sequence(base, work, id, noise, {}, &alert);
        const auto predicted = pipeline::diff_set(run.report);
        const auto truth = pipeline::truth_set(run.result.truth);
        CHECK(predicted == truth);
        CHECK(run.report.count(ChangeKind::Indeterminate) == 0);
      }
    }
  }
}

TEST_CASE("artifact findings per sequence") {
  testing::TempDir tmp;
  const auto base = synth::build_baseline(0);
  const auto alert = alert_of(base);
  for (int id = 1; id <= synth::kSequenceCount; ++id) {
    CAPTURE(id);
    const auto run = pipeline::run_sequence(base, tmp.path(), id, false, {}, &alert);
    const auto& f = run.findings;

    std::set<std::string> meta_names;
    for (const auto& m : f.metadata) meta_names.insert(m.file_name);
    std::set<std::string> exact;
    std::size_t signature = 0;
    for (const auto& h : f.cache_hits) {
      if (h.match_kind == art::MatchKind::ExactHash) exact.insert(*h.matched_md5);
      signature += h.match_kind == art::MatchKind::Signature;
    }
    const bool uploads_forensics = id == 1 || id == 2;
    const bool rect_deleted = id == 3 || id == 9;
    CHECK(meta_names.count(base.forensics.file_name()) == (uploads_forensics ? 1u : 0u));
    CHECK(meta_names.count(base.rectangular.file_name()) == (rect_deleted ? 0u : 1u));

    // The baseline cache copy of the pre-existing design is always present.
    CHECK(exact.count(base.rectangular.md5) == 1);
    const bool uploaded = id == 1 || id == 2 || id == 4 || id == 5 || id == 7;
    CHECK(exact.count(base.forensics.md5) == (uploaded ? 1u : 0u));
    CHECK(signature == (uploaded ? 1u : 0u));
    CHECK(f.alert_hits > 0);

    std::set<std::string> inferred;
    for (const auto& i : f.inferences) inferred.insert(i.design_md5);
    std::set<std::string> expected;
    if (rect_deleted) expected.insert(base.rectangular.md5);
    if (id == 4 || id == 5 || id == 7) expected.insert(base.forensics.md5);
    CHECK(inferred == expected);
    CHECK(inferred.empty() == !synth::sequence_deletes(id));

    bool client = false;
    for (const auto& e : f.log_events) client |= e.kind == art::LogKind::ClientConnect && e.detail == "192.168.1.50";
    CHECK(client == (id != 8 && id != 9));
  }
}

TEST_CASE("without planted copies nothing is inferred") {
  testing::TempDir tmp;
  const synth::SynthOptions opt{false, false};
  const auto base = synth::build_baseline(0, opt);
  const auto alert = alert_of(base);
  for (int id = 1; id <= synth::kSequenceCount; ++id) {
    CAPTURE(id);
    const auto run = pipeline::run_sequence(base, tmp.path(), id, false, opt, &alert);
    CHECK(run.findings.inferences.empty());
    CHECK(pipeline::diff_set(run.report) == pipeline::truth_set(run.result.truth));
  }
}

TEST_CASE("heatmap rows stay in the five top-level trees") {
  testing::TempDir tmp;
  const auto base = synth::build_baseline(0);
  std::vector<diff::DiffReport> diffs;
  for (int id = 1; id <= synth::kSequenceCount; ++id) {
    diffs.push_back(pipeline::run_sequence(base, tmp.path(), id, true, {}, nullptr).report);
  }
  const auto m = report::normalize_rows(report::aggregate_by_directory(diffs, 1));
  const std::set<std::string> allowed{"/etc", "/home", "/root", "/tmp", "/var"};
  REQUIRE(m.rows() > 0);
  for (const auto& label : m.row_labels) {
    CAPTURE(label);
    CHECK(allowed.count(label) == 1);
  }
}

TEST_CASE("corpus writer") {
  testing::TempDir tmp;
  const auto out = tmp / "corpus";
  synth::write_corpus(out, 0, 4, false);
  for (const char* name : {"baseline", "after", "ground_truth.tsv", "manifest.md5", "alert.md5"}) {
    CHECK(std::filesystem::exists(out / name));
  }
  CHECK(testing::slurp(out / "ground_truth.tsv") == testing::slurp(testing::fixture("octopi_seq4_ground_truth.tsv")));
  CHECK(testing::slurp(out / "alert.md5") == testing::slurp(testing::fixture("octopi_alert.md5")));
  const auto alert = hashdb::load_hashset(out / "alert.md5", hashdb::Role::Alert);
  CHECK(alert.size() == 2);
  CHECK_THROWS(synth::write_corpus(tmp / "bad", 0, 42, false));
  CHECK_FALSE(std::filesystem::exists(tmp / "bad"));
}

TEST_CASE("planted design is found by hash under any name") {
  testing::TempDir tmp;
  const auto base = synth::build_baseline(0);
  const auto run = pipeline::run_sequence(base, tmp.path(), 1, false, {}, nullptr);
  const auto hits = diff::find_hash_matches(run.after, base.forensics.md5);
  std::set<std::string> paths;
  for (const auto& k : hits) paths.insert(k.path);
  CHECK(paths == std::set<std::string>{kUploads + "/" + base.forensics.file_name(), kCache + "/F_000017"});
}
