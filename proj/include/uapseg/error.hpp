/* Copyright 2026 The uapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef UAPSEG_ERROR_HPP_
#define UAPSEG_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace uapseg {

// Mirrors uapseg_status in the C header; values must stay in sync.
enum class ErrorCode {
  kOk = 0,
  kDimension = 1,
  kData = 2,
  kFormat = 3,
  kIntegrity = 4,
  kNumeric = 5,
  kConfig = 6,
  kIo = 7,
  kUndefinedMetric = 8,
  kTraining = 9,
  kUsage = 10,
  kInternal = 99,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace uapseg

#endif  // UAPSEG_ERROR_HPP_
