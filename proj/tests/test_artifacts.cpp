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

#include <cmath>
#include <random>

#include "residue/artifacts.hpp"
#include "support.hpp"

using namespace residue;
using namespace std::chrono;

namespace {

UtcMillis ms(std::int64_t v) { return UtcMillis{milliseconds{v}}; }

bool close(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(b)); }

std::string random_gcode(std::mt19937_64& rng, std::size_t lines) {
  std::string out = "G90\nM82\nG92 E0\n";
  std::uniform_real_distribution<double> coord(0.0, 200.0);
  double e = 0;
  char buf[128];
  for (std::size_t i = 0; i < lines; ++i) {
    switch (rng() % 5) {
      case 0:
        std::snprintf(buf, sizeof buf, "G0 X%.3f Y%.3f F%d\n", coord(rng), coord(rng),
                      static_cast<int>(600 + rng() % 6000));
        break;
      case 1:
        std::snprintf(buf, sizeof buf, "G1 Z%.2f\n", coord(rng) / 100);
        break;
      default:
        e += 0.01 + coord(rng) / 1000;
        std::snprintf(buf, sizeof buf, "G1 X%.3f Y%.3f E%.5f\n", coord(rng), coord(rng), e);
    }
    out += buf;
  }
  return out;
}

/// Inserts comment-only lines and trailing comments without changing commands.
std::string sprinkle_comments(std::mt19937_64& rng, const std::string& g) {
  std::string out;
  std::size_t pos = 0;
  while (pos < g.size()) {
    const auto nl = g.find('\n', pos);
    std::string line = g.substr(pos, nl - pos);
    pos = nl + 1;
    if (rng() % 3 == 0) out += "; LAYER:" + std::to_string(rng() % 100) + " G1 X999 E999\n";
    if (rng() % 4 == 0) out += "   \n";
    if (rng() % 3 == 0) line += " ; move G1 X5 E7";
    out += line + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("upload names") {
  const auto r = art::parse_upload_name("Rectangular_Test_Token-770373878-2017-09-11T21-27-35.303Z.gcode");
  REQUIRE(r.has_value());
  CHECK(r->design_name == "Rectangular_Test_Token");
  CHECK(r->numeric_id == "770373878");
  CHECK(format_utc(r->timestamp) == "2017-09-11T21:27:35.303Z");

  const auto f = art::parse_upload_name("Forensics_Test_Print-224546099-2018-01-02T03-04-05.006Z.gcode");
  REQUIRE(f.has_value());
  CHECK(f->design_name == "Forensics_Test_Print");
  CHECK(f->numeric_id == "224546099");
  CHECK(format_utc(f->timestamp) == "2018-01-02T03:04:05.006Z");

  const auto hy = art::parse_upload_name("my-part-v2-0042-2018-01-02T03-04-05.000Z.gcode");
  REQUIRE(hy.has_value());
  CHECK(hy->design_name == "my-part-v2");
  CHECK(hy->numeric_id == "0042");

  CHECK_FALSE(art::parse_upload_name("plain.gcode"));
  CHECK_FALSE(art::parse_upload_name("x-12-2018-02-30T03-04-05.006Z.gcode"));
  CHECK_FALSE(art::parse_upload_name("x-12-2018-01-02T03-04-05.006Z.stl"));
  CHECK_FALSE(art::parse_upload_name("x-1a-2018-01-02T03-04-05.006Z.gcode"));
  CHECK_FALSE(art::parse_upload_name("-12-2018-01-02T03-04-05.006Z.gcode"));
}

TEST_CASE("render then parse is the identity on generated names") {
  std::mt19937_64 rng(31);
  const std::string alphabet = "abcXYZ_-. 09";
  for (int i = 0; i < 1000; ++i) {
    art::UploadNameParts p;
    const std::size_t len = 1 + rng() % 20;
    for (std::size_t k = 0; k < len; ++k) p.design_name += alphabet[rng() % alphabet.size()];
    if (p.design_name.front() == '-') p.design_name.front() = 'a';
    const std::size_t digits = 1 + rng() % 12;
    for (std::size_t k = 0; k < digits; ++k) p.numeric_id += static_cast<char>('0' + rng() % 10);
    p.timestamp = ms(static_cast<std::int64_t>(rng() % 4102444800000ULL));
    const auto name = art::render_upload_name(p);
    const auto back = art::parse_upload_name(name);
    REQUIRE(back.has_value());
    CHECK(*back == p);
  }
}

TEST_CASE("metadata yaml") {
  const std::string text =
      "Rectangular_Test_Token-770373878-2017-09-11T21-27-35.303Z.gcode:\n"
      "  hash: DA39A3EE5E6B4B0D3255BFEF95601890AFD80709\n"
      "  estimated_print_time: 1234.5\n"
      "  filament_used_mm: 987.25\n"
      "  numeric_id: '770373878'\n"
      "  last_print_time: 2017-09-12T08:00:00Z\n"
      "  last_print_success: false\n"
      "  display: \"Rectangular: token\"  # shown name\n"
      "\n"
      "\"odd: name.gcode\":\n"
      "  hash: a9993e364706816aba3e25717850c26c9cd0d89d\n"
      "  estimated_print_time: 0\n"
      "  filament_used_mm: 0\n";
  const auto entries = art::parse_metadata_yaml(text);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].sha1 == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  CHECK(entries[0].estimated_print_time_s == 1234.5);
  CHECK(entries[0].numeric_id == std::optional<std::string>("770373878"));
  CHECK(entries[0].last_print_success == std::optional<bool>(false));
  CHECK(entries[0].raw.at("display") == "Rectangular: token");
  CHECK(entries[1].file_name == "odd: name.gcode");

  CHECK(art::parse_metadata_yaml(art::render_metadata_yaml(entries)) == entries);
  CHECK(art::parse_metadata_yaml("").empty());
  CHECK(art::parse_metadata_yaml("--- {}\n").empty());

  for (const std::string bad : {"a.gcode:\n  hash: zz\n", "a.gcode:\n  list:\n    - 1\n",
                                "a.gcode:\n  x: &anchor 1\n", "a.gcode:\n  x: [1, 2]\n",
                                "a.gcode:\n  x: |\n", "a.gcode:\n\tx: 1\n", "a.gcode: 5\n",
                                "a.gcode:\n  x: 1\na.gcode:\n  y: 2\n",
                                "a.gcode:\n  estimated_print_time: -1\n"}) {
    CAPTURE(bad);
    try {
      art::parse_metadata_yaml(bad);
      FAIL("expected YamlSubsetViolation");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::YamlSubsetViolation);
      CHECK(std::string(e.what()).find("line ") != std::string::npos);
    }
  }
}

TEST_CASE("octoprint log events") {
  const std::vector<std::string> files = {
      "2018-01-02 03:02:00,001 - octoprint.server - INFO - Starting OctoPrint 1.3.6\n",
      "2018-01-02 03:03:00,500 - octoprint.server.util.sockjs - INFO - New connection from client: "
      "192.168.1.50\n"
      "2018-01-02 03:04:05,006 - octoprint.filemanager.analysis - INFO - Upload of "
      "Forensics_Test_Print-224546099-2018-01-02T03-04-05.006Z.gcode done\n"
      "garbage line\n"
      "2018-01-02 03:05:00,000 - octoprint.server.api.system - INFO - Performing command for core:"
      " sudo shutdown -h now\n"
      "2018-01-02 03:05:01,000 - x - INFO - New connection from client: 999.1.1.1\n"};
  const auto ev = art::parse_octoprint_log(files);
  REQUIRE(ev.size() == 6);
  CHECK(ev[0].kind == art::LogKind::Other);
  CHECK(ev[0].file_index == 0);
  CHECK(ev[1].kind == art::LogKind::ClientConnect);
  CHECK(ev[1].detail == "192.168.1.50");
  CHECK(ev[1].timestamp == std::optional<UtcMillis>(ms(1514862180500)));
  CHECK(ev[2].kind == art::LogKind::Upload);
  CHECK(ev[2].detail == "Forensics_Test_Print");
  CHECK(ev[3].kind == art::LogKind::Other);
  CHECK_FALSE(ev[3].timestamp.has_value());
  CHECK(ev[3].message == "garbage line");
  CHECK(ev[3].line == 3);
  CHECK(ev[4].kind == art::LogKind::SystemCommand);
  CHECK(ev[4].detail == "core");
  CHECK(ev[5].kind == art::LogKind::Other);  // not an IP address
  CHECK(art::parse_octoprint_log({""}).empty());
}

TEST_CASE("log rotation order") {
  const auto order = art::order_log_files(
      {"octoprint.log", "octoprint.log.1", "octoprint.log.2018-01-01", "serial.log", "octoprint.log.10",
       "octoprint.log.2", "octoprint.log.2017-12-31"},
      "octoprint.log");
  CHECK(order == std::vector<std::string>{"octoprint.log.2017-12-31", "octoprint.log.2018-01-01",
                                          "octoprint.log.10", "octoprint.log.2", "octoprint.log.1",
                                          "octoprint.log"});
}

TEST_CASE("g-code line shape") {
  CHECK(art::is_gcode_line("G1 X10 Y-2.5 E.3 F1200"));
  CHECK(art::is_gcode_line("  g28"));
  CHECK(art::is_gcode_line("N12 G1 X1*77"));
  CHECK(art::is_gcode_line("M104 S200 ; heat"));
  CHECK(art::is_gcode_line("G1 X1\r"));
  CHECK_FALSE(art::is_gcode_line("G X1"));
  CHECK_FALSE(art::is_gcode_line("GET /index.html"));
  CHECK_FALSE(art::is_gcode_line("; comment"));
  CHECK_FALSE(art::is_gcode_line("Hello"));
  CHECK_FALSE(art::is_gcode_line("G1 X1.2.3"));
}

TEST_CASE("cache scan: exact hash wins, signature otherwise") {
  std::mt19937_64 rng(41);
  const std::string design = random_gcode(rng, 300);
  const std::set<std::string> known{md5_hex(as_bytes(design))};
  const auto exact = art::scan_cache_file("/c/F_000017", as_bytes(design), known);
  REQUIRE(exact.has_value());
  CHECK(exact->match_kind == art::MatchKind::ExactHash);
  CHECK(exact->matched_md5 == *known.begin());

  std::string block(2048, '\0');
  for (std::size_t i = 0; i < block.size(); ++i) block[i] = static_cast<char>(0x80 + (i % 0x80));
  std::string lines;
  std::size_t pos = 0;
  for (int i = 0; i < 200; ++i) {
    const auto nl = design.find('\n', pos);
    lines += design.substr(pos, nl - pos + 1);
    pos = nl + 1;
  }
  const std::string mixed = block + "\n" + lines + block;
  const auto sig = art::scan_cache_file("/c/data_3", as_bytes(mixed), known);
  REQUIRE(sig.has_value());
  CHECK(sig->match_kind == art::MatchKind::Signature);
  CHECK(sig->run_length == 200);
  CHECK_FALSE(sig->matched_md5.has_value());

  CHECK_FALSE(art::scan_cache_file("/c/x", as_bytes(block), known).has_value());
  CHECK_FALSE(art::scan_cache_file("/c/y", as_bytes(lines), known, 201).has_value());
}

TEST_CASE("comment lines neither extend nor break a run") {
  CHECK(art::longest_gcode_run("G1 X1\n; c\n\nG1 X2\nfoo\nG1 X3\n") == 2);
  CHECK(art::longest_gcode_run("") == 0);
  std::mt19937_64 rng(43);
  for (int i = 0; i < 50; ++i) {
    const std::string g = random_gcode(rng, 10 + rng() % 200);
    CHECK(art::longest_gcode_run(sprinkle_comments(rng, g)) == art::longest_gcode_run(g));
  }
}

TEST_CASE("chrome time") {
  CHECK(format_utc(art::chrome_time(11644473600000000LL)) == "1970-01-01T00:00:00Z");
  CHECK(format_utc(art::chrome_time(13149647700000000LL)) == "2017-09-11T23:55:00Z");
  CHECK(art::chrome_time(0).time_since_epoch().count() == -11644473600000000LL);
}

TEST_CASE("history rows from a fixture database") {
  std::vector<std::string> warnings;
  const auto h = art::parse_history(testing::slurp_bytes(testing::fixture("history_urls.db")), &warnings);
  REQUIRE(h.size() == 5);
  CHECK(h[0].url == "http://octopi.local/");
  CHECK(h[0].title == "OctoPrint");
  CHECK(h[3].chrome_us == 11644473600000000LL);
  CHECK(format_utc(h[3].time) == "1970-01-01T00:00:00Z");
  CHECK(h[4].title.empty());
  CHECK(warnings.empty());
}

TEST_CASE("session strings") {
  CHECK(art::extract_session_strings(Bytes(64, 0)).empty());
  CHECK(art::extract_session_strings(as_bytes("\x01menu:print\x02")) ==
        std::vector<std::string>{"menu:print"});
  CHECK(art::extract_session_strings(as_bytes("ab\x01menu:delete\xff" "xyz1"), 4) ==
        std::vector<std::string>{"menu:delete", "xyz1"});
}

TEST_CASE("g-code estimator examples") {
  const auto a = art::gcode_stats("G90\nG1 X10 F600 E5\n");
  CHECK(close(a.estimated_print_time_s, 1.0));
  CHECK(close(a.filament_mm, 5.0));
  const auto b = art::gcode_stats("G91\nM83\nG1 X3 Y4 F300 E2\nG1 X3 Y4 E2\n");
  CHECK(close(b.estimated_print_time_s, 2.0));
  CHECK(close(b.filament_mm, 4.0));

  const auto empty = art::gcode_stats("");
  CHECK(empty.estimated_print_time_s == 0.0);
  CHECK(empty.filament_mm == 0.0);
  CHECK(empty.warnings.empty());
  const auto junk = art::gcode_stats("hello world\n");
  CHECK(junk.estimated_print_time_s == 0.0);
  CHECK_FALSE(junk.warnings.empty());

  // Retraction does not count as filament; E-only moves take time.
  const auto r = art::gcode_stats("M82\nG1 E5 F60\nG1 E3\nG1 E6\n");
  CHECK(close(r.filament_mm, 8.0));
  CHECK(close(r.estimated_print_time_s, 10.0));
  const auto nofeed = art::gcode_stats("G1 X10\n");
  CHECK(nofeed.moves_without_feedrate == 1);
}

TEST_CASE("comment insertion leaves the estimate unchanged") {
  std::mt19937_64 rng(47);
  for (int i = 0; i < 100; ++i) {
    const std::string g = random_gcode(rng, 20 + rng() % 400);
    const auto base = art::gcode_stats(g);
    const auto noisy = art::gcode_stats(sprinkle_comments(rng, g));
    CHECK(close(noisy.estimated_print_time_s, base.estimated_print_time_s));
    CHECK(close(noisy.filament_mm, base.filament_mm));
    CHECK(base.malformed_lines == 0);
  }
}

TEST_CASE("artifact config") {
  const auto cfg = art::parse_config(
      "# site overrides\n"
      "uploads_dir = /data/uploads/\n"
      "signature_min_lines = 5\n"
      "dir_of_interest = /home/pi\n"
      "dir_of_interest = /tmp\n");
  CHECK(cfg.uploads_dir == "/data/uploads");
  CHECK(cfg.signature_min_lines == 5);
  CHECK(cfg.dirs_of_interest == std::vector<std::string>{"/home/pi", "/tmp"});
  CHECK(cfg.cache_dir == "/root/.cache/chromium/Default/Cache");
  for (const std::string bad : {"uploads_dir = relative\n", "nonsense = 1\n", "no equals\n",
                                "signature_min_lines = 0\n", "pattern.upload = ([\n"}) {
    CAPTURE(bad);
    try {
      art::parse_config(bad);
      FAIL("expected BadConfig");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::BadConfig);
    }
  }
}

TEST_CASE("deletion inference rule") {
  art::ArtifactFindings f;
  CHECK(art::infer_deletions(f).empty());
  const std::string md5 = std::string(32, 'a');
  f.cache_hits.push_back({"rootfs", "/root/.cache/chromium/Default/Cache/F_000017", art::MatchKind::ExactHash,
                          md5, 0});
  f.cache_hits.push_back({"rootfs", "/root/.cache/chromium/Default/Cache/data_3", art::MatchKind::Signature,
                          std::nullopt, 300});
  const auto inf = art::infer_deletions(f);
  REQUIRE(inf.size() == 1);
  CHECK(inf[0].design_md5 == md5);
  CHECK(inf[0].evidence_cache_paths ==
        std::vector<std::string>{"/root/.cache/chromium/Default/Cache/F_000017"});
  CHECK(inf[0].confidence == "deleted-after-access");

  f.uploads.push_back({"rootfs", "/home/pi/.octoprint/uploads/x.gcode", std::nullopt, md5, ""});
  CHECK(art::infer_deletions(f).empty());
}
