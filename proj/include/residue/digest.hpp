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

#include <array>
#include <string>

#include "residue/common.hpp"

namespace residue {

/// Streaming MD5 (RFC 1321).
class Md5 {
 public:
  Md5();
  void update(ByteView data);
  std::array<std::uint8_t, 16> finish();

 private:
  void block(const std::uint8_t* p);
  std::array<std::uint32_t, 4> state_;
  std::array<std::uint8_t, 64> buffer_{};
  std::uint64_t length_ = 0;
};

/// Streaming SHA-1 (FIPS 180-4).
class Sha1 {
 public:
  Sha1();
  void update(ByteView data);
  std::array<std::uint8_t, 20> finish();

 private:
  void block(const std::uint8_t* p);
  std::array<std::uint32_t, 5> state_;
  std::array<std::uint8_t, 64> buffer_{};
  std::uint64_t length_ = 0;
};

struct DigestPair {
  std::string md5;
  std::string sha1;
  bool operator==(const DigestPair&) const = default;
};

/// Lowercase hex MD5 and SHA-1 of `data`, computed in one pass.
DigestPair digest(ByteView data);
std::string md5_hex(ByteView data);
std::string sha1_hex(ByteView data);

}  // namespace residue
