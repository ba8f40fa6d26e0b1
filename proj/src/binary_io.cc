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

#include "vmsched/binary_io.h"

#include "vmsched/errors.h"

namespace vmsched {

void BinaryWriter::WriteString(const std::string &s) {
  Write<std::uint64_t>(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::WriteDoubles(const double *data, std::size_t n) {
  out_.write(reinterpret_cast<const char *>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

std::string BinaryReader::ReadString() {
  const auto n = Read<std::uint64_t>();
  CheckCount(n, 1);
  std::string s(n, '\0');
  ReadRaw(s.data(), n);
  return s;
}

void BinaryReader::ReadDoubles(double *data, std::size_t n) {
  ReadRaw(reinterpret_cast<char *>(data), n * sizeof(double));
}

void BinaryReader::ExpectMagic(const std::string &magic) {
  std::string got(magic.size(), '\0');
  ReadRaw(got.data(), got.size());
  if (got != magic) throw Error("bad file magic: expected '" + magic + "'");
}

void BinaryReader::ReadRaw(char *dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw Error("truncated binary file");
}

void BinaryReader::CheckCount(std::uint64_t n, std::size_t elem_size) {
  // Guards against allocating absurd sizes from a corrupt length prefix.
  constexpr std::uint64_t kMaxBytes = std::uint64_t{1} << 36;
  if (n > kMaxBytes / elem_size) throw Error("corrupt length prefix in binary file");
}

}  // namespace vmsched
