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

#include "residue/synth.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "residue/digest.hpp"

namespace residue::synth {

namespace fs = std::filesystem;

// ---- Tree --------------------------------------------------------------------

namespace {

std::string parent_of(const std::string& path) {
  const auto slash = path.rfind('/');
  return slash == 0 || slash == std::string::npos ? std::string() : path.substr(0, slash);
}

}  // namespace

const Node* Tree::find(const std::string& path) const {
  auto it = nodes_.find(path);
  return it == nodes_.end() ? nullptr : &it->second;
}

void Tree::put(const std::string& path, Node node) {
  if (path.empty() || path[0] != '/' || path.back() == '/') throw Error(Errc::BadUsage, "bad tree path " + path);
  for (std::string p = parent_of(path); !p.empty(); p = parent_of(p)) {
    auto it = nodes_.find(p);
    if (it != nodes_.end()) {
      if (it->second.kind != snap::Kind::Dir) throw Error(Errc::BadUsage, p + " is not a directory");
      continue;
    }
    nodes_[p] = Node{snap::Kind::Dir, {}, node.mtime};
  }
  nodes_[path] = std::move(node);
}

void Tree::remove(const std::string& path) {
  auto it = nodes_.find(path);
  if (it == nodes_.end()) return;
  const std::string prefix = path + "/";
  auto child = nodes_.lower_bound(prefix);
  while (child != nodes_.end() && child->first.starts_with(prefix)) child = nodes_.erase(child);
  nodes_.erase(path);
}

std::size_t Tree::file_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(),
                                                [](const auto& kv) { return kv.second.kind == snap::Kind::File; }));
}

std::string_view to_string(Cause c) { return c == Cause::Action ? "action" : "noise"; }

std::string_view sequence_name(int id) {
  static constexpr std::string_view kNames[] = {
      "Upload a File",
      "Upload and Print a File",
      "Delete an Existing File",
      "Upload and Delete a File",
      "Upload, Print, and Delete a File",
      "Cancel a Print",
      "Cancel and Delete a Print",
      "Printing and Canceling using the Front Panel",
      "Printing, Canceling and Deleting using the Front Panel",
      "Update Printer Firmware through OctoPrint",
  };
  if (id < 1 || id > kSequenceCount) throw Error(Errc::UnknownSequence, "sequence " + std::to_string(id));
  return kNames[id - 1];
}

bool sequence_deletes(int id) { return id == 3 || id == 4 || id == 5 || id == 7 || id == 9; }

// ---- content generation ------------------------------------------------------

namespace {

constexpr std::string_view kUploads = "/home/pi/.octoprint/uploads";
constexpr std::string_view kMetadata = "/home/pi/.octoprint/uploads/.metadata.yaml";
constexpr std::string_view kLog = "/home/pi/.octoprint/logs/octoprint.log";
constexpr std::string_view kCache = "/root/.cache/chromium/Default/Cache";
constexpr std::string_view kHistory = "/root/.config/chromium/Default/History";
constexpr std::string_view kSession = "/root/.config/chromium/Default/CurrentSession";
constexpr std::string_view kSyslog = "/var/log/syslog";
const std::string kWhitelists[] = {"/root/.config/chromium/Safe Browsing Csd Whitelist",
                                   "/root/.config/chromium/Safe Browsing Download Whitelist"};
constexpr std::string_view kClientIp = "192.168.1.50";

// 2017-09-12T00:00:00Z: baseline acquisition.
constexpr std::int64_t kBaselineEpoch = 1505174400;
// 2018-01-02T03:04:05.006Z: upload time of the test design for seed 0.
constexpr std::int64_t kEventEpochMs = 1514862245006;
constexpr std::string_view kForensicsId = "224546099";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t next() { return gen_(); }
  /// Uniform in [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }
  /// Uniform in [lo, hi) with 1e-3 resolution, so printed values are exact.
  double milli(double lo, double hi) {
    const auto steps = static_cast<std::int64_t>((hi - lo) * 1000);
    return lo + static_cast<double>(range(0, steps - 1)) / 1000.0;
  }
  std::string bytes(std::size_t n) {
    std::string out(n, '\0');
    for (auto& c : out) c = static_cast<char>(next() & 0xFF);
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string gcode_design(Rng& rng, const std::string& title, int layers) {
  std::string g;
  g += "; generated for " + title + "\n";
  g += "G21\nG90\nM82\nM104 S210\nM140 S60\nG28\nG92 E0\n";
  double e = 0;
  for (int layer = 0; layer < layers; ++layer) {
    const double z = 0.2 * (layer + 1);
    g += ";LAYER:" + std::to_string(layer) + "\n";
    g += "G1 Z" + fmt("%.3f", z) + " F1200\n";
    for (int i = 0; i < 24; ++i) {
      const double x = rng.milli(20, 80);
      const double y = rng.milli(20, 80);
      e += rng.milli(0.05, 0.9);
      g += "G1 X" + fmt("%.3f", x) + " Y" + fmt("%.3f", y) + " E" + fmt("%.5f", e) + " F1800\n";
    }
  }
  g += "M104 S0\nM140 S0\nG28 X0\nM84\n";
  return g;
}

Design make_design(Rng& rng, const std::string& title, std::string id, UtcMillis t, int layers) {
  Design d;
  d.title = title;
  d.gcode = gcode_design(rng, title, layers);
  const DigestPair h = digest(as_bytes(d.gcode));
  d.md5 = h.md5;
  d.sha1 = h.sha1;
  d.upload = {title, std::move(id), t};
  return d;
}

std::string log_stamp(UtcMillis t) {
  // format_utc gives 2018-01-02T03:04:05.006Z; the log wants 2018-01-02 03:04:05,006.
  std::string iso = format_utc(std::chrono::time_point_cast<std::chrono::microseconds>(t));
  if (iso.size() == 20) iso.insert(19, ".000");
  iso[10] = ' ';
  iso[19] = ',';
  return iso.substr(0, 23);
}

std::string log_line(UtcMillis t, std::string_view logger, std::string_view msg) {
  return log_stamp(t) + " - " + std::string(logger) + " - INFO - " + std::string(msg) + "\n";
}

std::string syslog_line(UtcMillis t, std::string_view msg) {
  using namespace std::chrono;
  static constexpr const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss tod{floor<seconds>(t - day)};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s %2u %02d:%02d:%02d octopi ", kMonths[static_cast<unsigned>(ymd.month()) - 1],
                static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()));
  return buf + std::string(msg) + "\n";
}

std::int64_t unix_seconds(UtcMillis t) {
  return std::chrono::floor<std::chrono::seconds>(t).time_since_epoch().count();
}

std::int64_t chrome_us(UtcMillis t) {
  return std::chrono::duration_cast<std::chrono::microseconds>(t.time_since_epoch()).count() + art::kChromeEpochOffsetUs;
}

struct HistoryRow {
  std::string url;
  std::string title;
  std::int64_t time_us;
};

// History rows live in a sidecar list so the database can be re-rendered.
Bytes render_history(const std::vector<HistoryRow>& rows) {
  std::vector<SqlRow> out;
  std::int64_t id = 0;
  for (const auto& r : rows) {
    out.push_back({++id,
                   {sqlite::Value::null(), sqlite::Value::of_text(r.url), sqlite::Value::of_text(r.title),
                    sqlite::Value::of_int(1), sqlite::Value::of_int(0), sqlite::Value::of_int(r.time_us),
                    sqlite::Value::of_int(0)}});
  }
  return write_single_table_db("urls", kUrlsSchema, out);
}

std::string session_record(Rng& rng, std::string_view label) {
  // SNSS-like framing: a little-endian size, a command id, then the label
  // wrapped in non-printable bytes.
  std::string rec;
  const auto n = static_cast<std::uint16_t>(label.size() + 6);
  rec += static_cast<char>(n & 0xFF);
  rec += static_cast<char>(n >> 8);
  rec += static_cast<char>(rng.range(1, 31));
  rec += '\x01';
  rec += label;
  rec += '\x00';
  rec += static_cast<char>(rng.range(0x80, 0xFF));
  rec += static_cast<char>(rng.range(0x80, 0xFF));
  return rec;
}

std::string binary_blob(Rng& rng, std::size_t n) {
  // Bytes in 0x80-0xFF never form printable runs or G-code lines.
  std::string out(n, '\0');
  for (auto& c : out) c = static_cast<char>(0x80 | (rng.next() & 0x7F));
  return out;
}

/// Mutable view of a model that records the first-touch state of every path.
class Session {
 public:
  Session(DeviceModel& model, Rng& rng) : model_(model), rng_(rng) {}

  Rng& rng() { return rng_; }
  Tree& tree(const std::string& vol) { return model_.volumes.at(vol); }

  void write(const std::string& vol, const std::string& path, std::string content, std::int64_t mtime,
             Cause cause = Cause::Action) {
    touch_parents(vol, path, cause);
    touch(vol, path, cause);
    tree(vol).put(path, Node{snap::Kind::File, std::move(content), mtime});
  }
  void append(const std::string& vol, const std::string& path, std::string_view more, std::int64_t mtime,
              Cause cause = Cause::Action) {
    const Node* n = tree(vol).find(path);
    std::string content = n ? n->content : std::string();
    content += more;
    write(vol, path, std::move(content), mtime, cause);
  }
  void remove(const std::string& vol, const std::string& path, Cause cause = Cause::Action) {
    touch(vol, path, cause);
    tree(vol).remove(path);
  }
  const std::string* read(const std::string& vol, const std::string& path) {
    const Node* n = tree(vol).find(path);
    return n ? &n->content : nullptr;
  }

  GroundTruth finish(int id, bool noise) const {
    GroundTruth gt;
    gt.sequence_id = id;
    gt.seed = model_.seed;
    gt.noise = noise;
    for (const auto& [key, before] : first_) {
      const Node* after = model_.volumes.at(key.first).find(key.second);
      TruthEvent ev{key.first, key.second, diff::ChangeKind::Modified, cause_.at(key)};
      if (!before && after) {
        ev.kind = diff::ChangeKind::Created;
      } else if (before && !after) {
        ev.kind = diff::ChangeKind::Deleted;
      } else if (before && after) {
        const bool changed = before->kind != after->kind ||
                             (after->kind != snap::Kind::Dir && before->content != after->content);
        if (!changed) continue;
      } else {
        continue;
      }
      gt.events.push_back(std::move(ev));
    }
    return gt;
  }

 private:
  using Key = std::pair<std::string, std::string>;

  void touch(const std::string& vol, const std::string& path, Cause cause) {
    const Key key{vol, path};
    if (!first_.count(key)) {
      const Node* n = tree(vol).find(path);
      first_[key] = n ? std::optional<Node>(*n) : std::nullopt;
    }
    auto it = cause_.find(key);
    if (it == cause_.end()) {
      cause_[key] = cause;
    } else if (cause == Cause::Action) {
      it->second = Cause::Action;
    }
  }
  void touch_parents(const std::string& vol, const std::string& path, Cause cause) {
    for (std::string p = parent_of(path); !p.empty(); p = parent_of(p)) {
      if (tree(vol).contains(p)) break;
      touch(vol, p, cause);
    }
  }

  DeviceModel& model_;
  Rng& rng_;
  std::map<Key, std::optional<Node>> first_;
  std::map<Key, Cause> cause_;
};

// History rows are kept alongside the model so each sequence can re-render
// the database after appending. They are recovered from the file itself.
std::vector<HistoryRow> history_rows(const std::string& db) {
  std::vector<HistoryRow> out;
  for (const auto& e : art::parse_history(Bytes(db.begin(), db.end()))) out.push_back({e.url, e.title, e.chrome_us});
  return out;
}

void add_history(Session& s, std::string url, std::string title, UtcMillis t) {
  const std::string* db = s.read("rootfs", std::string(kHistory));
  auto rows = db ? history_rows(*db) : std::vector<HistoryRow>{};
  rows.push_back({std::move(url), std::move(title), chrome_us(t)});
  const Bytes out = render_history(rows);
  s.write("rootfs", std::string(kHistory), std::string(out.begin(), out.end()), unix_seconds(t));
}

void add_session(Session& s, std::string_view label, UtcMillis t) {
  s.append("rootfs", std::string(kSession), session_record(s.rng(), label), unix_seconds(t));
}

void add_log(Session& s, UtcMillis t, std::string_view logger, std::string_view msg) {
  s.append("rootfs", std::string(kLog), log_line(t, logger, msg), unix_seconds(t));
}

std::vector<art::MetadataEntry> metadata_of(Session& s) {
  const std::string* text = s.read("rootfs", std::string(kMetadata));
  return text ? art::parse_metadata_yaml(*text) : std::vector<art::MetadataEntry>{};
}

void put_metadata(Session& s, const std::vector<art::MetadataEntry>& entries, UtcMillis t) {
  s.write("rootfs", std::string(kMetadata), art::render_metadata_yaml(entries), unix_seconds(t));
}

art::MetadataEntry metadata_for(const Design& d) {
  const art::GcodeStats st = art::gcode_stats(d.gcode);
  art::MetadataEntry e;
  e.file_name = d.file_name();
  e.sha1 = d.sha1;
  e.estimated_print_time_s = std::round(st.estimated_print_time_s * 1000) / 1000;
  e.filament_mm = std::round(st.filament_mm * 1000) / 1000;
  e.numeric_id = d.upload.numeric_id;
  return e;
}

// ---- actions -----------------------------------------------------------------

using namespace std::chrono_literals;

struct Clock {
  UtcMillis now;
  UtcMillis tick(std::chrono::milliseconds d) { return now += d; }
};

void boot(Session& s, Clock& c) {
  const auto t = c.now;
  s.append("rootfs", std::string(kSyslog),
           syslog_line(t, "kernel: [    0.000000] Booting Linux on physical CPU 0x0") +
               syslog_line(t + 2s, "systemd[1]: Started OctoPrint."),
           unix_seconds(t + 2s));
  add_log(s, t + 5s, "octoprint.startup", "Starting OctoPrint 1.3.5");
  add_session(s, "state:Operational", t + 9s);
}

void web_login(Session& s, Clock& c) {
  const auto t = c.tick(20s);
  add_log(s, t, "octoprint.server.util.sockjs", "New connection from client: " + std::string(kClientIp));
  add_log(s, t + 1s, "octoprint.server.api", "Logging in user: admin");
}

void upload(Session& s, Clock& c, const Design& d, const SynthOptions& opt) {
  const auto t = d.upload.timestamp;
  c.now = t;
  const std::string name = d.file_name();
  s.write("rootfs", std::string(kUploads) + "/" + name, d.gcode, unix_seconds(t));
  auto meta = metadata_of(s);
  meta.push_back(metadata_for(d));
  put_metadata(s, meta, t + 1s);
  add_log(s, t, "octoprint.server.api.files",
          "Received upload of " + d.title + ".gcode, saved as local:" + name);
  add_log(s, t + 1s, "octoprint.filemanager.analysis", "Starting analysis of local:" + name);
  if (opt.plant_cache) {
    s.write("rootfs", std::string(kCache) + "/F_000017", d.gcode, unix_seconds(t));
    std::string block = binary_blob(s.rng(), 512) + "\n" + d.gcode + binary_blob(s.rng(), 512);
    s.append("rootfs", std::string(kCache) + "/data_3", block, unix_seconds(t));
  }
  add_history(s, "http://octopi.local/#files", "OctoPrint: upload " + d.title, t + 2s);
}

void print(Session& s, Clock& c, const Design& d, bool front_panel, bool success) {
  const auto start = c.tick(30s);
  const std::string name = d.file_name();
  if (front_panel) {
    add_history(s, "octoprint/menu", "menu:print", start);
    add_session(s, "menu:print", start);
  }
  add_log(s, start + 1s, "octoprint.printer.standard", "Printing started: local:" + name);
  add_session(s, "state:Printing", start + 1s);
  const auto end = c.tick(success ? 1800s : 120s);
  auto meta = metadata_of(s);
  for (auto& e : meta) {
    if (e.file_name == name) {
      e.last_print_time = std::chrono::time_point_cast<std::chrono::microseconds>(end);
      e.last_print_success = success;
    }
  }
  put_metadata(s, meta, end);
  if (success) {
    add_log(s, end, "octoprint.printer.standard", "Print done: local:" + name);
    add_session(s, "Print completed successfully", end);
  } else {
    add_session(s, "state:Cancelling", end);
    add_log(s, end, "octoprint.printer.standard", "Print cancelled: local:" + name);
    add_session(s, "Print Problem", end + 5s);
  }
}

void remove_design(Session& s, Clock& c, const Design& d, bool front_panel) {
  const auto t = c.tick(60s);
  const std::string name = d.file_name();
  if (front_panel) {
    add_history(s, "octoprint/menu", "menu:delete", t);
    add_session(s, "menu:delete", t);
  }
  s.remove("rootfs", std::string(kUploads) + "/" + name);
  auto meta = metadata_of(s);
  std::erase_if(meta, [&](const art::MetadataEntry& e) { return e.file_name == name; });
  put_metadata(s, meta, t);
  add_log(s, t, "octoprint.filemanager", "Removed file local:" + name);
}

void firmware(Session& s, Clock& c) {
  const auto t = c.tick(45s);
  add_log(s, t, "octoprint.plugins.softwareupdate", "Performing command for firmware: /usr/local/bin/voxel8-update");
  s.write("rootfs", "/tmp/firmware-update.log",
          "downloading firmware 1.3.0\nflashing\nverify ok\n", unix_seconds(t + 30s));
  s.write("rootfs", "/etc/voxel8/firmware.version", "1.3.0\n", unix_seconds(t + 60s));
  s.write("rootfs", "/var/lib/voxel8/firmware.bin", binary_blob(s.rng(), 16384), unix_seconds(t + 60s));
  s.append("rootfs", "/var/lib/dpkg/status", "\nPackage: voxel8-firmware\nStatus: install ok installed\nVersion: 1.3.0\n",
           unix_seconds(t + 61s));
  add_session(s, "Update Complete", t + 90s);
  c.tick(90s);
}

void shutdown(Session& s, Clock& c) {
  const auto t = c.tick(30s);
  add_session(s, "menu:shutdown", t);
  add_log(s, t + 1s, "octoprint.server.api.system", "Performing command for shutdown: sudo shutdown -h now");
  s.append("rootfs", std::string(kSyslog), syslog_line(t + 3s, "systemd[1]: Stopping OctoPrint..."),
           unix_seconds(t + 3s));
}

void noise(Session& s, Clock& c) {
  const auto t = c.now + 5s;
  for (const auto& path : kWhitelists) {
    s.append("rootfs", path, binary_blob(s.rng(), 64), unix_seconds(t), Cause::Noise);
  }
}

// ---- baseline ----------------------------------------------------------------

void put_file(Tree& t, const std::string& path, std::string content, std::int64_t& clock) {
  t.put(path, Node{snap::Kind::File, std::move(content), clock});
  clock += 60;
}

}  // namespace

DeviceModel build_baseline(std::uint64_t seed, const SynthOptions& options) {
  Rng rng(seed);
  DeviceModel m;
  m.seed = seed;
  const std::int64_t offset_s = seed == 0 ? 0 : rng.range(0, 30 * 86400);
  m.event_time = UtcMillis{std::chrono::milliseconds{kEventEpochMs + offset_s * 1000}};
  const UtcMillis rect_time{std::chrono::milliseconds{1505165255303}};  // 2017-09-11T21:27:35.303Z
  m.rectangular = make_design(rng, "Rectangular_Test_Token", "770373878", rect_time, 14);
  m.forensics = make_design(rng, "Forensics_Test_Print", std::string(kForensicsId), m.event_time, 18);

  std::int64_t clock = kBaselineEpoch;
  Tree& boot = m.volumes["boot"];
  put_file(boot, "/config.txt", "# Octopi boot configuration\ngpu_mem=128\ndtparam=audio=on\nenable_uart=1\n", clock);
  put_file(boot, "/cmdline.txt",
           "dwc_otg.lpm_enable=0 console=serial0,115200 console=tty1 root=/dev/mmcblk0p2 rootfstype=ext4 "
           "elevator=deadline fsck.repair=yes rootwait\n",
           clock);
  put_file(boot, "/octopi-network.txt", "# wifi configuration\n#network={\n#  ssid=\"put SSID here\"\n#}\n", clock);
  put_file(boot, "/bcm2708-rpi-b-plus.dtb", "\xd0\x0d\xfe\xed" + rng.bytes(4092), clock);
  put_file(boot, "/bcm2709-rpi-2-b.dtb", "\xd0\x0d\xfe\xed" + rng.bytes(4092), clock);
  put_file(boot, "/kernel.img", rng.bytes(65536), clock);
  put_file(boot, "/overlays/README", "Device tree overlays.\n", clock);
  put_file(boot, "/overlays/w1-gpio.dtbo", "\xd0\x0d\xfe\xed" + rng.bytes(1020), clock);

  Tree& root = m.volumes["rootfs"];
  put_file(root, "/etc/hostname", "octopi\n", clock);
  put_file(root, "/etc/octopi_version", "0.13.0\n", clock);
  put_file(root, "/etc/os-release",
           "PRETTY_NAME=\"Octopi v0.13.0 (Raspbian GNU/Linux 8 (jessie))\"\nNAME=\"Raspbian GNU/Linux\"\n"
           "VERSION_ID=\"8\"\nID=raspbian\nID_LIKE=debian\n",
           clock);
  put_file(root, "/etc/issue", "Octopi v0.13.0 \\n \\l\n", clock);
  put_file(root, "/etc/hosts", "127.0.0.1\tlocalhost\n127.0.1.1\toctopi\n", clock);
  put_file(root, "/etc/fstab",
           "proc /proc proc defaults 0 0\n/dev/mmcblk0p1 /boot vfat defaults 0 2\n"
           "/dev/mmcblk0p2 / ext4 defaults,noatime 0 1\n",
           clock);
  put_file(root, "/etc/voxel8/firmware.version", "1.2.0\n", clock);
  root.put("/etc/localtime", Node{snap::Kind::Symlink, "/usr/share/zoneinfo/Etc/UTC", clock});
  put_file(root, "/home/pi/.bashrc", "# ~/.bashrc\nexport PATH=$HOME/oprint/bin:$PATH\n", clock);
  put_file(root, "/home/pi/.octoprint/config.yaml",
           "accessControl:\n  enabled: true\nserver:\n  firstRun: false\nwebcam:\n  stream: /webcam/?action=stream\n",
           clock);
  put_file(root, "/home/pi/.octoprint/users.yaml", "admin:\n  active: true\n  roles:\n  - user\n  - admin\n", clock);

  const std::string rect_name = m.rectangular.file_name();
  put_file(root, std::string(kUploads) + "/" + rect_name, m.rectangular.gcode, clock);
  art::MetadataEntry rect_meta = metadata_for(m.rectangular);
  rect_meta.last_print_time = std::chrono::time_point_cast<std::chrono::microseconds>(rect_time + 3600s);
  rect_meta.last_print_success = true;
  put_file(root, std::string(kMetadata), art::render_metadata_yaml({rect_meta}), clock);

  const UtcMillis base_t{std::chrono::seconds{kBaselineEpoch}};
  put_file(root, "/home/pi/.octoprint/logs/octoprint.log.1",
           log_line(rect_time - 600s, "octoprint.startup", "Starting OctoPrint 1.3.5") +
               log_line(rect_time - 30s, "octoprint.server.util.sockjs", "New connection from client: 10.0.0.12") +
               log_line(rect_time, "octoprint.server.api.files",
                        "Received upload of Rectangular_Test_Token.gcode, saved as local:" + rect_name),
           clock);
  put_file(root, std::string(kLog),
           log_line(base_t - 120s, "octoprint.startup", "Starting OctoPrint 1.3.5") +
               log_line(base_t - 60s, "octoprint.server.api.system",
                        "Performing command for shutdown: sudo shutdown -h now"),
           clock);
  put_file(root, "/home/pi/.octoprint/logs/serial.log", "", clock);

  const Bytes history = render_history({{"http://octopi.local/", "OctoPrint", chrome_us(base_t - 300s)},
                                        {"octoprint/menu", "menu:main", chrome_us(base_t - 200s)}});
  put_file(root, std::string(kHistory), std::string(history.begin(), history.end()), clock);
  put_file(root, std::string(kSession),
           "SNSS\x01\x00\x00\x00" + session_record(rng, "chrome://newtab/") + session_record(rng, "octoprint/menu") +
               session_record(rng, "state:Operational"),
           clock);
  put_file(root, "/root/.config/chromium/Default/Preferences", "{\"browser\":{\"has_seen_welcome_page\":true}}", clock);
  for (const auto& w : kWhitelists) put_file(root, w, binary_blob(rng, 256), clock);

  put_file(root, std::string(kCache) + "/index", binary_blob(rng, 256), clock);
  for (int i = 0; i < 4; ++i) {
    put_file(root, std::string(kCache) + "/data_" + std::to_string(i), binary_blob(rng, 8192), clock);
  }
  if (options.baseline_cache_copy) put_file(root, std::string(kCache) + "/F_000016", m.rectangular.gcode, clock);

  put_file(root, "/tmp/.X0-lock", "       522\n", clock);
  put_file(root, std::string(kSyslog), syslog_line(base_t - 600s, "kernel: [    0.000000] Booting Linux"), clock);
  put_file(root, "/var/lib/voxel8/firmware.bin", binary_blob(rng, 16384), clock);
  put_file(root, "/var/lib/dpkg/status", "Package: octoprint\nStatus: install ok installed\nVersion: 1.3.5\n", clock);
  return m;
}

SequenceResult apply_sequence(const DeviceModel& before, int id, bool with_noise, const SynthOptions& opt) {
  (void)sequence_name(id);
  SequenceResult r{before, {}};
  Rng rng(before.seed * 1000003 + static_cast<std::uint64_t>(id));
  Session s(r.after, rng);
  Clock c{before.event_time - 65s};
  const Design& f = before.forensics;
  const Design& rect = before.rectangular;

  boot(s, c);
  switch (id) {
    case 1:
      web_login(s, c);
      upload(s, c, f, opt);
      break;
    case 2:
      web_login(s, c);
      upload(s, c, f, opt);
      print(s, c, f, false, true);
      break;
    case 3:
      web_login(s, c);
      remove_design(s, c, rect, false);
      break;
    case 4:
      web_login(s, c);
      upload(s, c, f, opt);
      remove_design(s, c, f, false);
      break;
    case 5:
      web_login(s, c);
      upload(s, c, f, opt);
      print(s, c, f, false, true);
      remove_design(s, c, f, false);
      break;
    case 6:
      web_login(s, c);
      print(s, c, rect, false, false);
      break;
    case 7:
      web_login(s, c);
      upload(s, c, f, opt);
      print(s, c, f, false, false);
      remove_design(s, c, f, false);
      break;
    case 8:
      print(s, c, rect, true, false);
      break;
    case 9:
      print(s, c, rect, true, false);
      remove_design(s, c, rect, true);
      break;
    case 10:
      web_login(s, c);
      firmware(s, c);
      break;
  }
  if (with_noise) noise(s, c);
  shutdown(s, c);
  r.truth = s.finish(id, with_noise);
  return r;
}

std::string manifest(const DeviceModel& m) {
  std::string out;
  for (const auto& [vol, tree] : m.volumes) {
    for (const auto& [path, node] : tree.nodes()) {
      if (node.kind != snap::Kind::File) continue;
      out += md5_hex(as_bytes(node.content)) + "  " + vol + ":" + escape_bytes(path) + "\n";
    }
  }
  return out;
}

std::string alert_set(const DeviceModel& m) {
  return "# test designs\n" + m.forensics.md5 + "  " + m.forensics.file_name() + "\n" + m.rectangular.md5 + "  " +
         m.rectangular.file_name() + "\n";
}

std::string ground_truth_tsv(const GroundTruth& gt) {
  std::string out = "# sequence " + std::to_string(gt.sequence_id) + "\n";
  out += "# seed " + std::to_string(gt.seed) + "\n";
  out += std::string("# noise ") + (gt.noise ? "1" : "0") + "\n";
  out += "#volume\tpath\tchange\tcause\n";
  for (const auto& e : gt.events) {
    out += e.volume + "\t" + escape_bytes(e.path) + "\t" + std::string(diff::to_string(e.kind)) + "\t" +
           std::string(to_string(e.cause)) + "\n";
  }
  return out;
}

// ---- disk output -------------------------------------------------------------

namespace {

void set_mtime(const fs::path& p, std::int64_t mtime) {
  struct timespec ts[2];
  ts[0].tv_sec = mtime;
  ts[0].tv_nsec = 0;
  ts[1] = ts[0];
  if (::utimensat(AT_FDCWD, p.c_str(), ts, AT_SYMLINK_NOFOLLOW) != 0) {
    throw Error(Errc::WriteFailure, "cannot set mtime on " + p.string());
  }
}

void write_bytes(const fs::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::WriteFailure, "cannot write " + p.string());
}

}  // namespace

void write_tree(const Tree& tree, const fs::path& root) {
  std::error_code ec;
  if (fs::exists(root, ec)) throw Error(Errc::WriteFailure, root.string() + " already exists");
  fs::create_directories(root, ec);
  if (ec) throw Error(Errc::WriteFailure, "cannot create " + root.string());
  for (const auto& [path, node] : tree.nodes()) {
    const fs::path p = root / path.substr(1);
    switch (node.kind) {
      case snap::Kind::Dir:
        fs::create_directory(p, ec);
        if (ec) throw Error(Errc::WriteFailure, "cannot create " + p.string());
        break;
      case snap::Kind::File:
        write_bytes(p, node.content);
        break;
      case snap::Kind::Symlink:
        fs::create_symlink(node.content, p, ec);
        if (ec) throw Error(Errc::WriteFailure, "cannot create symlink " + p.string());
        break;
    }
  }
  // Deepest entries first so directory mtimes survive their children.
  for (auto it = tree.nodes().rbegin(); it != tree.nodes().rend(); ++it) {
    set_mtime(root / it->first.substr(1), it->second.mtime);
  }
  set_mtime(root, kBaselineEpoch);
}

void write_corpus(const fs::path& out, std::uint64_t seed, int sequence_id, bool noise, const SynthOptions& options) {
  const DeviceModel base = build_baseline(seed, options);
  const SequenceResult after = apply_sequence(base, sequence_id, noise, options);
  std::error_code ec;
  if (fs::exists(out, ec)) throw Error(Errc::WriteFailure, out.string() + " already exists");
  const fs::path tmp = out.string() + ".tmp." + std::to_string(::getpid());
  fs::remove_all(tmp, ec);
  try {
    for (const auto& [vol, tree] : base.volumes) write_tree(tree, tmp / "baseline" / vol);
    for (const auto& [vol, tree] : after.after.volumes) write_tree(tree, tmp / "after" / vol);
    write_bytes(tmp / "ground_truth.tsv", ground_truth_tsv(after.truth));
    write_bytes(tmp / "manifest.md5", manifest(base));
    write_bytes(tmp / "alert.md5", alert_set(base));
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  fs::rename(tmp, out, ec);
  if (ec) {
    fs::remove_all(tmp, ec);
    throw Error(Errc::WriteFailure, "cannot rename into " + out.string());
  }
}

}  // namespace residue::synth
