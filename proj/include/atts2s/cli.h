// atts2s/cli.h

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTS2S_CLI_H_
#define ATTS2S_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace atts2s {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

/// Runs one subcommand. `args` excludes the program name. Errors are
/// reported on `err` as a single line starting with "error:".
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

std::string Usage();

}  // namespace atts2s

#endif  // ATTS2S_CLI_H_
