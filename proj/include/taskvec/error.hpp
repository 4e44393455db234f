// Copyright 2026 The taskvec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace taskvec {

// Error classes map one-to-one onto process exit codes and C API status codes.
enum class ErrorKind { kUsage = 1, kRuntime = 2, kNumeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void ThrowUsage(const std::string &msg) {
  throw Error(ErrorKind::kUsage, msg);
}

[[noreturn]] inline void ThrowRuntime(const std::string &msg) {
  throw Error(ErrorKind::kRuntime, msg);
}

[[noreturn]] inline void ThrowNumeric(const std::string &msg) {
  throw Error(ErrorKind::kNumeric, msg);
}

#define TASKVEC_CHECK(cond, msg)                                   \
  do {                                                             \
    if (!(cond)) ::taskvec::ThrowRuntime(std::string(msg));        \
  } while (0)

}  // namespace taskvec
