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

#include "hydra/harness/bench.hpp"

#include <algorithm>
#include <chrono>

#include <json.hpp>

#include "hydra/decoding.hpp"
#include "hydra/harness/dataset.hpp"

namespace hydra {

const char* to_string(BenchMode mode) { return mode == BenchMode::kFull ? "full" : "chunked"; }

BenchMode parse_bench_mode(const std::string& name) {
  if (name == "full") return BenchMode::kFull;
  if (name == "chunked") return BenchMode::kChunked;
  throw UsageError("unknown bench mode " + name + " (full, chunked)");
}

std::string RtfReport::to_json() const {
  return nlohmann::json{{"format_version", 1},
                        {"branch", branch},
                        {"mode", hydra::to_string(mode)},
                        {"utterances", utterances},
                        {"audio_seconds", audio_seconds},
                        {"wall_seconds", wall_seconds},
                        {"rtf", rtf},
                        {"threads", threads},
                        {"comparable", comparable},
                        {"run_seconds", run_seconds}}
      .dump();
}

namespace {

std::vector<TokenSeq> greedy_batch(const ModelState& model, const FeatureBatch& batch, int factor) {
  const ModelOutputs out = forward_encoder(model, batch, factor);
  const Index b = out.ctc_log_probs.dim(0), steps = out.ctc_log_probs.dim(1);
  const Index vocab = out.ctc_log_probs.dim(2);
  const auto all = out.ctc_log_probs.value().matrix(b * steps, vocab);
  std::vector<TokenSeq> result;
  for (Index i = 0; i < b; ++i) {
    const int len = out.frontend.lengths[static_cast<std::size_t>(i)];
    result.push_back(ctc_greedy(all.middleRows(i * steps, len), model.config.decoder.blank()));
  }
  return result;
}

}  // namespace

TokenSeq transcribe(const ModelState& model, const Utterance& u, int factor, BenchMode mode) {
  NoGradGuard no_grad;
  const Index frames = u.frames(), width = u.features.dim(1);
  if (mode == BenchMode::kFull) {
    FeatureBatch batch{u.features.reshaped({1, frames, width}), {static_cast<int>(frames)}};
    return greedy_batch(model, batch, factor).front();
  }
  // Windows share one forward pass but no state: each is a separate batch row.
  const Index windows = (frames + kChunkFrames - 1) / kChunkFrames;
  FeatureBatch batch{Array({windows, kChunkFrames, width}),
                     std::vector<int>(static_cast<std::size_t>(windows), static_cast<int>(kChunkFrames))};
  batch.features.matrix(windows * kChunkFrames, width).topRows(frames) = u.features.rows();
  TokenSeq out;
  for (const TokenSeq& part : greedy_batch(model, batch, factor)) {
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

RtfReport bench_rtf(const ModelState& model, int factor, const std::vector<Utterance>& utterances,
                    BenchMode mode, int repetitions) {
  if (utterances.empty()) throw DatasetError("bench_rtf: manifest has no utterances");
  if (repetitions < 1) throw UsageError("bench_rtf: repetitions must be >= 1");
  model.config.frontend.branch(factor);
  Eigen::setNbThreads(1);

  RtfReport report;
  report.branch = factor;
  report.mode = mode;
  report.utterances = static_cast<Index>(utterances.size());
  for (const auto& u : utterances) {
    report.audio_seconds += static_cast<double>(u.frames()) * kFrameShiftSeconds;
  }
  report.threads = Eigen::nbThreads();
  report.comparable = report.threads == 1;

  auto pass = [&] {
    Index emitted = 0;
    for (const auto& u : utterances) emitted += static_cast<Index>(transcribe(model, u, factor, mode).size());
    return emitted;
  };
  pass();
  for (int r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    pass();
    report.run_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::vector<double> sorted = report.run_seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  report.wall_seconds = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  report.rtf = report.wall_seconds / report.audio_seconds;
  return report;
}

}  // namespace hydra
