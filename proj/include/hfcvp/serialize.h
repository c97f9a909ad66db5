// hfcvp/serialize.h

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

#ifndef HFCVP_SERIALIZE_H_
#define HFCVP_SERIALIZE_H_

// Binary tensor container.  One record is
//
//   "HFCVP1"                      6 bytes magic
//   rank                          uint64, little-endian
//   dims[rank]                    uint64 each, little-endian
//   data[prod(dims)]              float32, little-endian, row-major
//
// A file may hold several records back to back (parameter bundles); single
// matrices and embeddings are files with exactly one record.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hfcvp/types.h"

namespace hfcvp {

inline constexpr char kTensorMagic[] = "HFCVP1";
inline constexpr std::size_t kTensorMagicSize = 6;

struct TensorRecord {
  std::vector<int64_t> dims;
  std::vector<float> data;

  int64_t NumElements() const;
  bool operator==(const TensorRecord &) const = default;
};

void WriteTensorRecord(std::ostream &os, std::span<const int64_t> dims,
                       std::span<const float> data);
TensorRecord ReadTensorRecord(std::istream &is);

void SaveTensorRecords(const std::filesystem::path &path,
                       const std::vector<TensorRecord> &records);
std::vector<TensorRecord> LoadTensorRecords(const std::filesystem::path &path);

void SaveMatrix(const std::filesystem::path &path, const FrameMatrix &m);
FrameMatrix LoadMatrix(const std::filesystem::path &path);

void SaveEmbedding(const std::filesystem::path &path,
                   const SpeakerEmbedding &embedding);
SpeakerEmbedding LoadEmbedding(const std::filesystem::path &path);

void to_json(nlohmann::json &j, const ClassPrior &p);
void from_json(const nlohmann::json &j, ClassPrior &p);
void to_json(nlohmann::json &j, const ClassDistribution &d);
void from_json(const nlohmann::json &j, ClassDistribution &d);

nlohmann::json ReadJsonFile(const std::filesystem::path &path);
void WriteJsonFile(const std::filesystem::path &path, const nlohmann::json &j);

}  // namespace hfcvp

#endif  // HFCVP_SERIALIZE_H_
