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
#include <string>
#include <vector>

#include "json.hpp"
#include "residue/artifacts.hpp"
#include "residue/diff.hpp"

namespace residue::report {

inline constexpr int kSchemaVersion = 1;

struct HeatmapMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::uint64_t>> raw;
  std::vector<std::vector<double>> normalized;
  /// Parallel to row_labels: true for configured directories of interest.
  std::vector<bool> of_interest;

  std::size_t rows() const { return row_labels.size(); }
  std::size_t cols() const { return col_labels.size(); }
  bool operator==(const HeatmapMatrix&) const = default;
};

/// Directory a change is attributed to: its ancestor truncated to `depth`
/// components, or its parent when it sits shallower than that.
std::string attribute_directory(std::string_view path, std::size_t depth);

/// One column per diff (labelled by the after-snapshot), one row per
/// directory. Only non-unchanged records count. Labels carry a
/// "volume:" prefix when the diffs span more than one volume.
/// Throws Error{BadUsage} for depth 0.
HeatmapMatrix aggregate_by_directory(const std::vector<diff::DiffReport>& diffs, std::size_t depth);

/// Rows counting changes at or below each directory of interest.
HeatmapMatrix directories_of_interest(const std::vector<diff::DiffReport>& diffs,
                                      const std::vector<std::string>& dirs);

/// Concatenates the rows of `extra` below `base`. Column labels must match.
HeatmapMatrix append_rows(HeatmapMatrix base, const HeatmapMatrix& extra);

/// Drops all-zero rows and fills `normalized` with raw / row max.
HeatmapMatrix normalize_rows(HeatmapMatrix m);

/// Distinct (directory, base name) pairs changed across all diffs.
std::size_t unique_file_tally(const std::vector<diff::DiffReport>& diffs);

// ---- serialization -----------------------------------------------------------

/// Sorted keys, two-space indent, trailing newline.
std::string canonical_json(const nlohmann::json& j);

nlohmann::json to_json(const diff::DiffReport& d);
/// Throws Error{MalformedLine} on schema violations.
diff::DiffReport diff_from_json(const nlohmann::json& j);
diff::DiffReport load_diff(const std::filesystem::path& path);

struct ReportDocument {
  std::vector<diff::DiffReport> diffs;
  std::vector<std::string> hash_sets;
  std::size_t depth = 1;
  HeatmapMatrix matrix;  // normalized, directories of interest appended
  std::size_t unique_files = 0;
  std::optional<nlohmann::json> findings;
  std::vector<art::DeletionInference> inferences;
  std::vector<std::string> warnings;
};

ReportDocument build_report(std::vector<diff::DiffReport> diffs, std::size_t depth,
                            const std::vector<std::string>& dirs_of_interest);
nlohmann::json to_json(const ReportDocument& doc);

/// Header row `directory,kind,<columns>`; kind is `depth` or `interest`.
std::string to_csv(const HeatmapMatrix& m);
/// Inverse of to_csv for the raw counts. Throws Error{MalformedLine}.
HeatmapMatrix parse_csv(std::string_view text);

// ---- SVG ---------------------------------------------------------------------

struct Rgb {
  int r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};
/// Linear ramp from white (0.0) to #08306b (1.0); channels rounded half away
/// from zero.
Rgb ramp(double v);
std::string hex_color(Rgb c);

std::string to_svg(const HeatmapMatrix& m);

}  // namespace residue::report
