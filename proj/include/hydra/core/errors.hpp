// Copyright 2026 The Hydra Authors. All Rights Reserved.
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

namespace hydra {

// Every error carries a stable kind string; the CLI prints it as a
// machine-parseable prefix ("error[Kind]: message").
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define HYDRA_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

HYDRA_DEFINE_ERROR(DimensionError)
HYDRA_DEFINE_ERROR(UsageError)
HYDRA_DEFINE_ERROR(NumericError)
HYDRA_DEFINE_ERROR(ConfigError)
HYDRA_DEFINE_ERROR(TooShortError)
HYDRA_DEFINE_ERROR(VocabError)
HYDRA_DEFINE_ERROR(InfeasibleTargetError)
HYDRA_DEFINE_ERROR(TransferError)
HYDRA_DEFINE_ERROR(CheckpointError)
HYDRA_DEFINE_ERROR(SelectorError)
HYDRA_DEFINE_ERROR(DatasetError)
HYDRA_DEFINE_ERROR(TrainingHalted)

#undef HYDRA_DEFINE_ERROR

}  // namespace hydra
