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

#include "residue/common.hpp"

#include <cstdio>

namespace residue {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::NotFound: return "NotFound";
    case Errc::Unreadable: return "Unreadable";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::ShortImage: return "ShortImage";
    case Errc::BadSignature: return "BadSignature";
    case Errc::BadBpb: return "BadBpb";
    case Errc::UnsupportedVariant: return "UnsupportedVariant";
    case Errc::BrokenChain: return "BrokenChain";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedFeature: return "UnsupportedFeature";
    case Errc::CorruptDirBlock: return "CorruptDirBlock";
    case Errc::BadExtentNode: return "BadExtentNode";
    case Errc::BlockOutOfRange: return "BlockOutOfRange";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::BadDigestLine: return "BadDigestLine";
    case Errc::BadDigest: return "BadDigest";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::NoSuchTable: return "NoSuchTable";
    case Errc::CorruptPage: return "CorruptPage";
    case Errc::YamlSubsetViolation: return "YamlSubsetViolation";
    case Errc::UnknownSequence: return "UnknownSequence";
    case Errc::WriteFailure: return "WriteFailure";
    case Errc::BadConfig: return "BadConfig";
    case Errc::BadUsage: return "BadUsage";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

std::string_view to_string(Allocation a) {
  return a == Allocation::Allocated ? "allocated" : "deleted";
}

std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  const sys_days d = std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day};
  return d.time_since_epoch().count();
}

bool valid_civil(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  return ymd.ok();
}

namespace {

std::string two(unsigned v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u", v);
  return buf;
}

}  // namespace

std::string format_utc(UtcMicros t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const auto tod = t - day;
  const auto h = duration_cast<hours>(tod);
  const auto m = duration_cast<minutes>(tod - h);
  const auto s = duration_cast<seconds>(tod - h - m);
  const auto us = duration_cast<microseconds>(tod - h - m - s).count();

  char date[32];
  std::snprintf(date, sizeof date, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  std::string out = date;
  out += 'T' + two(static_cast<unsigned>(h.count())) + ':' + two(static_cast<unsigned>(m.count())) +
         ':' + two(static_cast<unsigned>(s.count()));
  if (us != 0) {
    char frac[16];
    if (us % 1000 == 0) {
      std::snprintf(frac, sizeof frac, ".%03lld", static_cast<long long>(us / 1000));
    } else {
      std::snprintf(frac, sizeof frac, ".%06lld", static_cast<long long>(us));
    }
    out += frac;
  }
  out += 'Z';
  return out;
}

std::string format_utc_seconds(std::int64_t unix_seconds) {
  return format_utc(UtcMicros{std::chrono::seconds{unix_seconds}});
}

std::optional<UtcMicros> parse_utc(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS[.f{1,6}]Z
  auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<unsigned> {
    if (pos + n > text.size()) return std::nullopt;
    unsigned v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      v = v * 10 + static_cast<unsigned>(text[i] - '0');
    }
    return v;
  };
  if (text.size() < 20) return std::nullopt;
  auto y = digits(0, 4), mo = digits(5, 2), d = digits(8, 2), h = digits(11, 2), mi = digits(14, 2),
       s = digits(17, 2);
  if (!y || !mo || !d || !h || !mi || !s) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' || text[16] != ':')
    return std::nullopt;
  if (!valid_civil(static_cast<int>(*y), *mo, *d) || *h > 23 || *mi > 59 || *s > 59)
    return std::nullopt;
  std::int64_t micros = 0;
  std::size_t pos = 19;
  if (text[pos] == '.') {
    ++pos;
    std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    const std::size_t n = pos - start;
    if (n == 0 || n > 6) return std::nullopt;
    micros = *digits(start, n);
    for (std::size_t i = n; i < 6; ++i) micros *= 10;
  }
  if (pos + 1 != text.size() || text[pos] != 'Z') return std::nullopt;
  const std::int64_t secs = days_from_civil(static_cast<int>(*y), *mo, *d) * 86400 + *h * 3600 +
                            *mi * 60 + *s;
  return UtcMicros{std::chrono::microseconds{secs * 1000000 + micros}};
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_lower_hex(std::string_view s, std::size_t length) {
  if (s.size() != length) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

std::string hex_encode(ByteView b) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (auto v : b) {
    out += digits[v >> 4];
    out += digits[v & 0xF];
  }
  return out;
}

namespace {

// Length of the valid UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_sequence(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t n = 0;
  std::uint32_t cp = 0;
  if (c >= 0xC2 && c <= 0xDF) {
    n = 2;
    cp = c & 0x1F;
  } else if (c >= 0xE0 && c <= 0xEF) {
    n = 3;
    cp = c & 0x0F;
  } else if (c >= 0xF0 && c <= 0xF4) {
    n = 4;
    cp = c & 0x07;
  } else {
    return 0;
  }
  if (i + n > s.size()) return 0;
  for (std::size_t k = 1; k < n; ++k) {
    const auto cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (cc & 0x3F);
  }
  if ((n == 3 && cp < 0x800) || (n == 4 && (cp < 0x10000 || cp > 0x10FFFF))) return 0;
  if (cp >= 0xD800 && cp <= 0xDFFF) return 0;
  return n;
}

}  // namespace

std::string escape_bytes(std::string_view raw) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    const auto c = static_cast<unsigned char>(raw[i]);
    if (c >= 0x80) {
      if (const std::size_t n = utf8_sequence(raw, i); n != 0) {
        out.append(raw.substr(i, n));
        i += n;
        continue;
      }
    }
    if (c < 0x20 || c == 0x7F || c == '%' || c >= 0x80) {
      out += '%';
      out += digits[c >> 4];
      out += digits[c & 0xF];
    } else {
      out += static_cast<char>(c);
    }
    ++i;
  }
  return out;
}

std::optional<std::string> unescape_bytes(std::string_view text) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '%') {
      out += text[i];
      continue;
    }
    if (i + 2 >= text.size()) return std::nullopt;
    const int hi = nibble(text[i + 1]);
    const int lo = nibble(text[i + 2]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out += static_cast<char>((hi << 4) | lo);
    i += 2;
  }
  return out;
}

}  // namespace residue
