// core/serialize.cc

// Copyright 2026  HFC-VP authors
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

#include "hfcvp/serialize.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "hfcvp/error.h"

namespace hfcvp {

namespace {

constexpr uint64_t kMaxRank = 8;

void PutU64(std::ostream &os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char *>(b), 8);
}

uint64_t GetU64(std::istream &is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char *>(b), 8))
    Fail(ErrorKind::kFormat, "truncated tensor header");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void PutFloats(std::ostream &os, std::span<const float> data) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char *>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
  } else {
    for (float f : data) {
      uint32_t u = std::bit_cast<uint32_t>(f);
      unsigned char b[4];
      for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
      os.write(reinterpret_cast<const char *>(b), 4);
    }
  }
}

void GetFloats(std::istream &is, std::span<float> out) {
  if (!is.read(reinterpret_cast<char *>(out.data()),
               static_cast<std::streamsize>(out.size() * sizeof(float))))
    Fail(ErrorKind::kFormat, "truncated tensor payload");
  if constexpr (std::endian::native != std::endian::little) {
    for (float &f : out) {
      unsigned char b[4];
      std::memcpy(b, &f, 4);
      uint32_t u = 0;
      for (int i = 0; i < 4; ++i) u |= static_cast<uint32_t>(b[i]) << (8 * i);
      f = std::bit_cast<float>(u);
    }
  }
}

}  // namespace

int64_t TensorRecord::NumElements() const {
  int64_t n = 1;
  for (int64_t d : dims) n *= d;
  return n;
}

void WriteTensorRecord(std::ostream &os, std::span<const int64_t> dims,
                       std::span<const float> data) {
  int64_t n = 1;
  for (int64_t d : dims) {
    if (d < 0) Fail(ErrorKind::kDimension, "negative tensor dimension");
    n *= d;
  }
  if (n != static_cast<int64_t>(data.size()))
    Fail(ErrorKind::kDimension, "tensor payload does not match its dims");
  os.write(kTensorMagic, kTensorMagicSize);
  PutU64(os, dims.size());
  for (int64_t d : dims) PutU64(os, static_cast<uint64_t>(d));
  PutFloats(os, data);
  if (!os) Fail(ErrorKind::kIo, "failed writing tensor record");
}

TensorRecord ReadTensorRecord(std::istream &is) {
  char magic[kTensorMagicSize];
  if (!is.read(magic, kTensorMagicSize) ||
      std::memcmp(magic, kTensorMagic, kTensorMagicSize) != 0)
    Fail(ErrorKind::kFormat, "bad tensor magic (expected HFCVP1)");
  uint64_t rank = GetU64(is);
  if (rank > kMaxRank) Fail(ErrorKind::kFormat, "implausible tensor rank");
  TensorRecord rec;
  uint64_t n = 1;
  for (uint64_t i = 0; i < rank; ++i) {
    uint64_t d = GetU64(is);
    if (d > static_cast<uint64_t>(std::numeric_limits<int32_t>::max()))
      Fail(ErrorKind::kFormat, "implausible tensor dimension");
    rec.dims.push_back(static_cast<int64_t>(d));
    n *= d;
    if (n > (uint64_t{1} << 34)) Fail(ErrorKind::kFormat, "tensor too large");
  }
  rec.data.resize(n);
  GetFloats(is, rec.data);
  return rec;
}

void SaveTensorRecords(const std::filesystem::path &path,
                       const std::vector<TensorRecord> &records) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  for (const auto &r : records) WriteTensorRecord(os, r.dims, r.data);
}

std::vector<TensorRecord> LoadTensorRecords(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<TensorRecord> out;
  while (is.peek() != std::char_traits<char>::eof()) out.push_back(ReadTensorRecord(is));
  return out;
}

void SaveMatrix(const std::filesystem::path &path, const FrameMatrix &m) {
  const int64_t dims[2] = {m.rows(), m.cols()};
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  WriteTensorRecord(os, dims, m.data());
}

FrameMatrix LoadMatrix(const std::filesystem::path &path) {
  auto recs = LoadTensorRecords(path);
  if (recs.size() != 1 || recs[0].dims.size() != 2)
    Fail(ErrorKind::kFormat, path.string() + ": expected one rank-2 record");
  return FrameMatrix(recs[0].dims[0], recs[0].dims[1], std::move(recs[0].data));
}

void SaveEmbedding(const std::filesystem::path &path,
                   const SpeakerEmbedding &embedding) {
  const int64_t dims[1] = {static_cast<int64_t>(embedding.values.size())};
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  WriteTensorRecord(os, dims, embedding.values);
}

SpeakerEmbedding LoadEmbedding(const std::filesystem::path &path) {
  auto recs = LoadTensorRecords(path);
  if (recs.size() != 1 || recs[0].dims.size() != 1)
    Fail(ErrorKind::kFormat, path.string() + ": expected one rank-1 record");
  return SpeakerEmbedding{std::move(recs[0].data)};
}

void to_json(nlohmann::json &j, const ClassPrior &p) {
  j = nlohmann::json{{"probs", p.probs}, {"counts", p.counts}};
}

void from_json(const nlohmann::json &j, ClassPrior &p) {
  p.probs = j.at("probs").get<std::vector<double>>();
  p.counts = j.value("counts", std::vector<int64_t>{});
}

void to_json(nlohmann::json &j, const ClassDistribution &d) {
  j = nlohmann::json{{"probs", d.probs}};
}

void from_json(const nlohmann::json &j, ClassDistribution &d) {
  d.probs = j.at("probs").get<std::vector<double>>();
}

nlohmann::json ReadJsonFile(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path &path, const nlohmann::json &j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  os << j.dump(2) << "\n";
}

}  // namespace hfcvp
