// hfcvp/cli.h

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

#ifndef HFCVP_CLI_H_
#define HFCVP_CLI_H_

// The `hfcvp` command:
//
//   hfcvp gen-toy   --out DIR [--classes N] [--seed S] ...
//   hfcvp prior     --data DIR [--mode normalized|literal-softmax]
//   hfcvp train     --data DIR --out DIR [--beta B] [--epochs E] ...
//   hfcvp anonymise --checkpoint DIR --in DIR --out DIR [--policy P] [--pool toy:N|DIR]
//   hfcvp eval eer  --trials FILE
//   hfcvp eval probe --reps DIR --labels MANIFEST
//   hfcvp sweep     --data DIR --out DIR --betas 0.05,0.06,0.065,0.07
//
// Every subcommand accepts --config FILE.json whose keys are the long flag
// names with '-' written as '_' (e.g. "lr_generator" for --lr-generator).
// Precedence: defaults < HFCVP_SEED (seed only) < config file < flags.
// Unknown keys are rejected.
//
// Exit codes: 0 success, 1 usage/configuration, 2 runtime (I/O, load,
// divergence), 3 data.

#include <iosfwd>

#include "hfcvp/error.h"

namespace hfcvp {

/// Maps an error kind to the exit-code convention above.
int ExitCodeFor(ErrorKind kind);

/// Parses argv and runs one subcommand.  Never throws.
int RunCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace hfcvp

#endif  // HFCVP_CLI_H_
