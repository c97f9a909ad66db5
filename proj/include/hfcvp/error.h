// hfcvp/error.h

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

#ifndef HFCVP_ERROR_H_
#define HFCVP_ERROR_H_

#include <stdexcept>
#include <string>

namespace hfcvp {

enum class ErrorKind {
  kRange,       // index outside [0, C)
  kDimension,   // length or shape mismatch
  kValidation,  // invariant violated by an input value
  kEmptyData,   // nothing to compute over
  kConfig,      // bad configuration or usage
  kIo,          // filesystem failure
  kFormat,      // malformed file contents
  kRate,        // sample-rate mismatch
  kDivergence,  // non-finite training loss
  kInput,       // bad argument to a metric
  kData,        // dataset-level problem (e.g. too few examples)
  kLoad,        // missing or incompatible checkpoint
};

const char *ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

}  // namespace hfcvp

#endif  // HFCVP_ERROR_H_
