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

#include <iosfwd>
#include <string>
#include <vector>

#include "hydra/decoding.hpp"
#include "hydra/training.hpp"

namespace hydra {

/// Decodes utterances in batches of `batch_size` through branch `factor`.
std::vector<TokenSeq> decode_utterances(const ModelState& model,
                                        const std::vector<Utterance>& utterances, int factor,
                                        const DecodeOptions& options, Index batch_size = 8);

/// Reads an initialization plan: branch.<n> and encoder_decoder name
/// checkpoint paths (relative to the plan file); config and seed name the
/// target run for the transfer command.
struct PlanFile {
  InitPlan plan;
  std::string config;
  std::optional<std::uint64_t> seed;
};

PlanFile read_plan_file(const std::string& path);

/// Entry point of the command-line tool. Failures print one line of the form
/// "error[<Kind>]: <message>" to `err` and return a nonzero code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hydra
