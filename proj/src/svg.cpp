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

#include <cmath>
#include <cstdio>

#include "residue/report.hpp"

namespace residue::report {

namespace {

// Fixed geometry so emitted files are stable; see docs/formats.md.
constexpr int kCellW = 56;
constexpr int kCellH = 24;
constexpr int kCharW = 7;
constexpr int kPad = 10;
constexpr int kMinLabelW = 80;
constexpr int kColLabelH = 120;
constexpr int kLegendGap = 30;
constexpr int kLegendSwatch = 16;
constexpr int kLegendSteps = 11;
constexpr int kLegendW = 90;
constexpr Rgb kLow{255, 255, 255};
constexpr Rgb kHigh{8, 48, 107};

std::string xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          out += '?';
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

int channel(int lo, int hi, double v) { return static_cast<int>(std::lround(lo + (hi - lo) * v)); }

}  // namespace

Rgb ramp(double v) {
  if (!(v >= 0)) v = 0;
  if (v > 1) v = 1;
  return {channel(kLow.r, kHigh.r, v), channel(kLow.g, kHigh.g, v), channel(kLow.b, kHigh.b, v)};
}

std::string hex_color(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string to_svg(const HeatmapMatrix& m) {
  std::size_t longest = 0;
  for (const auto& l : m.row_labels) longest = std::max(longest, l.size());
  const int label_w = std::max(kMinLabelW, static_cast<int>(longest) * kCharW + 2 * kPad);
  const int gx = label_w;
  const int gy = kColLabelH;
  const int cols = static_cast<int>(m.cols());
  const int rows = static_cast<int>(m.rows());
  const int lx = gx + cols * kCellW + kLegendGap;
  const int width = lx + kLegendW;
  const int height = std::max(gy + rows * kCellH + kPad, gy + (kLegendSteps + 1) * kLegendSwatch + kPad);

  std::string s;
  auto num = [](int v) { return std::to_string(v); };
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width) + "\" height=\"" +
       num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
       "\" font-family=\"monospace\" font-size=\"11\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"#ffffff\"/>\n";

  s += "<g id=\"axes\" stroke=\"#000000\">\n";
  s += "<line x1=\"" + num(gx) + "\" y1=\"" + num(gy) + "\" x2=\"" + num(gx + cols * kCellW) + "\" y2=\"" + num(gy) + "\"/>\n";
  s += "<line x1=\"" + num(gx) + "\" y1=\"" + num(gy) + "\" x2=\"" + num(gx) + "\" y2=\"" + num(gy + rows * kCellH) + "\"/>\n";
  s += "</g>\n";

  s += "<g id=\"columns\">\n";
  for (int c = 0; c < cols; ++c) {
    const int cx = gx + c * kCellW + kCellW / 2;
    s += "<text transform=\"translate(" + num(cx) + "," + num(gy - 6) + ") rotate(-45)\">" +
         xml(m.col_labels[static_cast<std::size_t>(c)]) + "</text>\n";
  }
  s += "</g>\n";

  s += "<g id=\"rows\">\n";
  for (int r = 0; r < rows; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    const int cy = gy + r * kCellH + kCellH / 2 + 4;
    s += "<text x=\"" + num(gx - 6) + "\" y=\"" + num(cy) + "\" text-anchor=\"end\"";
    if (ri < m.of_interest.size() && m.of_interest[ri]) s += " font-weight=\"bold\"";
    s += ">" + xml(m.row_labels[ri]) + "</text>\n";
  }
  s += "</g>\n";

  s += "<g id=\"cells\" stroke=\"#cccccc\">\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto ri = static_cast<std::size_t>(r);
      const auto ci = static_cast<std::size_t>(c);
      const double v = ri < m.normalized.size() ? m.normalized[ri][ci] : 0.0;
      s += "<rect x=\"" + num(gx + c * kCellW) + "\" y=\"" + num(gy + r * kCellH) + "\" width=\"" + num(kCellW) +
           "\" height=\"" + num(kCellH) + "\" fill=\"" + hex_color(ramp(v)) + "\"><title>" +
           xml(m.row_labels[ri]) + " | " + xml(m.col_labels[ci]) + ": " + std::to_string(m.raw[ri][ci]) + " (" +
           fixed4(v) + ")</title></rect>\n";
    }
  }
  s += "</g>\n";

  s += "<g id=\"legend\">\n";
  s += "<text x=\"" + num(lx) + "\" y=\"" + num(gy - 6) + "\">normalized</text>\n";
  for (int i = 0; i < kLegendSteps; ++i) {
    // Top swatch is 1.0, bottom 0.0.
    const double v = static_cast<double>(kLegendSteps - 1 - i) / (kLegendSteps - 1);
    const int y = gy + i * kLegendSwatch;
    s += "<rect x=\"" + num(lx) + "\" y=\"" + num(y) + "\" width=\"" + num(kLegendSwatch) + "\" height=\"" +
         num(kLegendSwatch) + "\" fill=\"" + hex_color(ramp(v)) + "\" stroke=\"#cccccc\"/>\n";
    char label[8];
    std::snprintf(label, sizeof label, "%.1f", v);
    s += "<text x=\"" + num(lx + kLegendSwatch + 6) + "\" y=\"" + num(y + kLegendSwatch - 4) + "\">" + label +
         "</text>\n";
  }
  s += "</g>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace residue::report
