// Copyright 2026 The qspace Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QSPACE_ERROR_HPP
#define QSPACE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qspace {

// Invalid arguments or malformed inputs (bad shapes, odd SH order, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems reading or writing files, or malformed file content.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qspace

#endif  // QSPACE_ERROR_HPP
