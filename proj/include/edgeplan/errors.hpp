// Copyright 2026 The edgeplan Authors. All Rights Reserved.
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
// =============================================================================

#ifndef EDGEPLAN_ERRORS_HPP_
#define EDGEPLAN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace edgeplan {

// Every failure raised by the library derives from Error and carries a
// stable machine-readable code (used by the CLI error record).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define EDGEPLAN_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(#Name, what) {}    \
  };

EDGEPLAN_DEFINE_ERROR(InvalidConfig)
EDGEPLAN_DEFINE_ERROR(MismatchedFleet)
EDGEPLAN_DEFINE_ERROR(InfeasibleFleet)
EDGEPLAN_DEFINE_ERROR(DegenerateData)
EDGEPLAN_DEFINE_ERROR(NumericalFailure)
EDGEPLAN_DEFINE_ERROR(EmptyState)
EDGEPLAN_DEFINE_ERROR(ShapeMismatch)
EDGEPLAN_DEFINE_ERROR(EmptyEnsemble)
EDGEPLAN_DEFINE_ERROR(InvalidWorkload)
EDGEPLAN_DEFINE_ERROR(MissingArtifact)
EDGEPLAN_DEFINE_ERROR(ConfigError)
EDGEPLAN_DEFINE_ERROR(FormatError)

#undef EDGEPLAN_DEFINE_ERROR

}  // namespace edgeplan

#endif  // EDGEPLAN_ERRORS_HPP_
