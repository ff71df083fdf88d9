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

#include <string>
#include <vector>

#include "hydra/data.hpp"
#include "hydra/model.hpp"

namespace hydra {

inline constexpr Index kChunkFrames = 64;

enum class BenchMode { kFull, kChunked };

const char* to_string(BenchMode mode);
BenchMode parse_bench_mode(const std::string& name);

struct RtfReport {
  int branch = 0;
  BenchMode mode = BenchMode::kFull;
  Index utterances = 0;
  double audio_seconds = 0.0;
  double wall_seconds = 0.0;  // median over repetitions
  double rtf = 0.0;
  int threads = 1;
  bool comparable = true;     // false unless threads == 1
  std::vector<double> run_seconds;

  std::string to_json() const;
};

/// Greedy CTC transcript of one utterance through branch `factor`. Chunked
/// mode cuts the input into independent zero-padded windows of kChunkFrames
/// and concatenates their transcripts.
TokenSeq transcribe(const ModelState& model, const Utterance& utterance, int factor,
                    BenchMode mode);

/// Times frontend + encoder + greedy CTC over `utterances` after one untimed
/// warmup pass; reports the median of `repetitions` timed passes.
RtfReport bench_rtf(const ModelState& model, int factor, const std::vector<Utterance>& utterances,
                    BenchMode mode, int repetitions = 5);

}  // namespace hydra
