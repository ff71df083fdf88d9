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

#include <cstdint>
#include <string>
#include <vector>

#include "hydra/data.hpp"

namespace hydra {

inline constexpr Index kFeatureDim = 80;
inline constexpr double kFrameShiftSeconds = 0.01;

struct ManifestEntry {
  std::string id;
  std::string path;  // as written; relative paths resolve against the manifest
  Index frames = 0;
  TokenSeq tokens;
};

/// Text manifest: format_version, feature_dim, vocab (id order, including
/// <blank>, <sos>, <eos>) and one "utt <id> <path> <frames> <ids>" line per
/// utterance. Feature files are raw little-endian f32, frames x feature_dim.
struct DatasetManifest {
  std::vector<std::string> vocab;
  Index feature_dim = kFeatureDim;
  std::vector<ManifestEntry> entries;
  std::string base_dir;

  std::string resolve(const ManifestEntry& entry) const;
};

DatasetManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const DatasetManifest& manifest);

void write_features(const std::string& path, const Array& features);
/// Reads a (frames, width) feature file; DatasetError when the byte size
/// does not match exactly.
Array read_features(const std::string& path, Index width, Index expected_frames);

/// Loads every utterance, rejecting frame-count or vocabulary mismatches.
std::vector<Utterance> load_utterances(const DatasetManifest& manifest);

/// Reserved-symbol vocabulary around `tokens` real symbols.
std::vector<std::string> make_vocab(Index tokens);

struct SyntheticOptions {
  Index num_utts = 32;
  Index vocab_size = 12;  // real tokens, excluding blank/sos/eos
  Index frames_per_token = 12;
  double noise_std = 0.05;
  std::uint64_t seed = 1;
  Index min_tokens = 4;
  Index max_tokens = 7;
  Index feature_dim = kFeatureDim;
};

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<Utterance> utterances;
  Array prototypes;  // (vocab_size + 3, feature_dim); rows of reserved ids unused
};

/// Each token owns a fixed random prototype frame; an utterance tiles its
/// tokens' prototypes frames_per_token times each and adds Gaussian noise.
/// Adjacent tokens always differ so every transcript is recoverable.
SyntheticDataset gen_synthetic(const SyntheticOptions& options);

/// Writes feature files under dir/feats and dir/manifest.txt; returns the
/// manifest path.
std::string write_dataset(const std::string& dir, SyntheticDataset& dataset);

}  // namespace hydra
