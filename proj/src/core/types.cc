// core/types.cc

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

#include "hfcvp/types.h"

#include <string>

#include "hfcvp/error.h"

namespace hfcvp {

const char *ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kRange: return "range error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kEmptyData: return "empty-data error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kRate: return "rate error";
    case ErrorKind::kDivergence: return "divergence error";
    case ErrorKind::kInput: return "input error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kLoad: return "load error";
  }
  return "error";
}

FrameMatrix::FrameMatrix(int64_t rows, int64_t cols)
    : rows_(rows), cols_(cols),
      data_(static_cast<std::size_t>(rows * cols), 0.0f) {
  if (rows < 0 || cols < 0)
    Fail(ErrorKind::kDimension, "negative matrix dimension");
}

FrameMatrix::FrameMatrix(int64_t rows, int64_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 0 || cols < 0 ||
      static_cast<int64_t>(data_.size()) != rows * cols)
    Fail(ErrorKind::kDimension,
         "matrix payload has " + std::to_string(data_.size()) +
             " entries, expected " + std::to_string(rows) + "x" +
             std::to_string(cols));
}

TrueClassIndicator OneHot(SpeakerLabel label, int64_t num_classes) {
  if (num_classes < 1 || label.class_index < 0 ||
      label.class_index >= num_classes)
    Fail(ErrorKind::kRange, "label " + std::to_string(label.class_index) +
                                " outside [0, " + std::to_string(num_classes) +
                                ")");
  TrueClassIndicator out;
  out.onehot.assign(static_cast<std::size_t>(num_classes), 0.0);
  out.onehot[static_cast<std::size_t>(label.class_index)] = 1.0;
  return out;
}

}  // namespace hfcvp
