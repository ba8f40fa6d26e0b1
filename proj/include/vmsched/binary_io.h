// Copyright 2026 The vmsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace vmsched {

/// Little helpers for the versioned binary checkpoint files. Values are
/// written in host byte order; checkpoints are not meant to move between
/// architectures.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream &out) : out_(out) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void Write(const T &value) {
    out_.write(reinterpret_cast<const char *>(&value), sizeof(T));
  }

  void WriteString(const std::string &s);
  void WriteDoubles(const double *data, std::size_t n);

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void WriteVector(const std::vector<T> &v) {
    Write<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char *>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  }

 private:
  std::ostream &out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream &in) : in_(in) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T Read() {
    T value;
    ReadRaw(reinterpret_cast<char *>(&value), sizeof(T));
    return value;
  }

  std::string ReadString();
  void ReadDoubles(double *data, std::size_t n);

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  std::vector<T> ReadVector() {
    const auto n = Read<std::uint64_t>();
    CheckCount(n, sizeof(T));
    std::vector<T> v(n);
    ReadRaw(reinterpret_cast<char *>(v.data()), n * sizeof(T));
    return v;
  }

  /// Reads `magic.size()` bytes and throws unless they match.
  void ExpectMagic(const std::string &magic);

 private:
  void ReadRaw(char *dst, std::size_t n);
  void CheckCount(std::uint64_t n, std::size_t elem_size);

  std::istream &in_;
};

}  // namespace vmsched
