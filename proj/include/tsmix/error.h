// include/tsmix/error.h

// Copyright 2026  tsmix authors

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

#ifndef TSMIX_ERROR_H_
#define TSMIX_ERROR_H_

#include <stdexcept>
#include <string>

namespace tsmix {

// Error categories. The CLI maps these onto distinct process exit codes.
enum class ErrorKind {
  invalid_argument,  // bad inputs to an operation (shape/value violations)
  io,                // file system or encoding problems
  config,            // experiment configuration rejected by validation
  prerequisite,      // a required earlier-stage artifact is missing
  numeric,           // non-finite values where finite ones are required
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
    case ErrorKind::prerequisite: return "prerequisite";
    case ErrorKind::numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace tsmix

#endif  // TSMIX_ERROR_H_
