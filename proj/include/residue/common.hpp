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

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace residue {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class Errc {
  NotFound,
  Unreadable,
  OutOfBounds,
  ShortImage,
  BadSignature,
  BadBpb,
  UnsupportedVariant,
  BrokenChain,
  CycleDetected,
  BadMagic,
  UnsupportedFeature,
  CorruptDirBlock,
  BadExtentNode,
  BlockOutOfRange,
  MalformedLine,
  DuplicateKey,
  BadDigestLine,
  BadDigest,
  UnsupportedEncoding,
  NoSuchTable,
  CorruptPage,
  YamlSubsetViolation,
  UnknownSequence,
  WriteFailure,
  BadConfig,
  BadUsage,
};

std::string_view errc_name(Errc code);

/// Exception carrying a machine-readable error category.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

enum class Allocation { Allocated, Deleted };

std::string_view to_string(Allocation a);

/// Outcome of reading file content from a volume. A read that stops early
/// keeps the bytes recovered so far.
struct ReadResult {
  Bytes bytes;
  std::optional<Errc> error;
  std::string message;
  bool best_effort = false;

  bool ok() const { return !error.has_value(); }
};

// Little/big-endian loads from a byte view. Callers bounds-check.
inline std::uint16_t le16(ByteView b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}
inline std::uint32_t le32(ByteView b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}
inline std::uint64_t le64(ByteView b, std::size_t off) {
  return static_cast<std::uint64_t>(le32(b, off)) |
         (static_cast<std::uint64_t>(le32(b, off + 4)) << 32);
}
inline std::uint16_t be16(ByteView b, std::size_t off) {
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}
inline std::uint32_t be32(ByteView b, std::size_t off) {
  return (static_cast<std::uint32_t>(b[off]) << 24) |
         (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}
inline std::string to_string(ByteView b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

using UtcMillis = std::chrono::sys_time<std::chrono::milliseconds>;
using UtcMicros = std::chrono::sys_time<std::chrono::microseconds>;

/// ISO-8601 UTC rendering, e.g. 2017-09-11T21:27:35.303Z. Fractional
/// digits are printed only when non-zero.
std::string format_utc(UtcMicros t);
std::string format_utc_seconds(std::int64_t unix_seconds);

/// Parses YYYY-MM-DDTHH:MM:SS[.fraction]Z. Returns nullopt on any deviation.
std::optional<UtcMicros> parse_utc(std::string_view text);

/// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);
bool valid_civil(int year, unsigned month, unsigned day);

std::string to_lower(std::string_view s);
bool is_lower_hex(std::string_view s, std::size_t length);
std::string hex_encode(ByteView b);

/// Escapes bytes for line-oriented text formats: control bytes, '%', DEL
/// and bytes that are not part of valid UTF-8 become %XX.
std::string escape_bytes(std::string_view raw);
std::optional<std::string> unescape_bytes(std::string_view text);

}  // namespace residue
