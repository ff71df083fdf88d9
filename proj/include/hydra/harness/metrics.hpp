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

#include <fstream>
#include <string>
#include <vector>

#include "hydra/training.hpp"

namespace hydra {

/// Line-delimited JSON: a {"format_version": N} record, then one record per
/// step.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);

  void write(const StepRecord& record);

 private:
  std::ofstream out_;
};

std::string to_json_line(const StepRecord& record);
std::vector<StepRecord> read_metrics(const std::string& path);

}  // namespace hydra
