//  Copyright 2026 The GentleRain+ Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

// Command-line entry point shared by the tool binary and the tests.
//
// Exit status: 0 all checks pass, 1 a property or expectation failed,
// 2 usage or configuration error, 3 runtime error (unreadable or
// inconsistent trace, bind or transport failure).

#ifndef GENTLERAIN_CLI_HPP_
#define GENTLERAIN_CLI_HPP_

#include <iosfwd>

namespace gentlerain {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gentlerain

#endif  // GENTLERAIN_CLI_HPP_
