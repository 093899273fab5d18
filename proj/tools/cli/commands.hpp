// Copyright 2026 The sasvkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef SASVKIT_CLI_COMMANDS_HPP_
#define SASVKIT_CLI_COMMANDS_HPP_

#include <iosfwd>
#include <span>
#include <string>

namespace sasvkit::cli {

// Process exit codes. Stable across releases.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,       // check failed (gradcheck above tolerance, ...)
  kExitConfig = 2,        // bad flags, bad config, unknown loss name
  kExitMissingInput = 3,  // a required input file does not exist
  kExitNonFinite = 4,     // training produced a non-finite loss or parameter
  kExitBadInput = 5,      // malformed or inconsistent input file
  kExitIo = 6,            // an output could not be written
};

// File names inside a world directory written by `gen`.
inline constexpr const char* kPretrainFile = "pretrain.dataset";
inline constexpr const char* kCsPairsFile = "cs_pairs.txt";
inline constexpr const char* kIndomainFile = "indomain.dataset";
inline constexpr const char* kEnrollFile = "enroll.dataset";
inline constexpr const char* kEvalFile = "eval.dataset";
inline constexpr const char* kTrialsFile = "trials.txt";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kModelFile = "model.svkm";
inline constexpr const char* kTrainLogFile = "train_log.jsonl";

// Runs one command line (args excludes the program name). Results go to
// out, diagnostics to err.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);

}  // namespace sasvkit::cli

#endif  // SASVKIT_CLI_COMMANDS_HPP_
