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
#include <map>
#include <string>
#include <vector>

#include "hydra/model.hpp"
#include "hydra/training.hpp"

namespace hydra {

inline constexpr int kFormatVersion = 1;

/// Flat "key = value" table; '#' starts a comment line.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& source);
  static KeyValues read_file(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  /// Throws ConfigError for any key outside `known` (prefix match when a
  /// known entry ends with '.').
  void require_known(const std::vector<std::string>& known) const;
  /// Throws ConfigError unless format_version matches.
  void require_version() const;

  void write(std::ostream& out) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

std::string join_ints(const std::vector<int>& values);

/// Model preset by name: "desk", "large" or "narrow".
ModelConfig model_preset(const std::string& name, Index vocab_size, const std::vector<int>& factors);

/// Writes/reads frontend.*, encoder.*, decoder.* keys.
void write_model_config(KeyValues& kv, const ModelConfig& config);
ModelConfig read_model_config(const KeyValues& kv, ModelConfig defaults);
std::vector<std::string> model_config_keys();

/// A complete training run: everything `train --config` needs.
struct RunConfig {
  std::string preset = "desk";
  std::string data;     // manifest path
  std::string heldout;  // optional manifest path
  ModelConfig model;
  TrainConfig train;
};

/// vocab_size falls back to `default_vocab` (typically the manifest's) when
/// the file does not set decoder.vocab_size.
RunConfig parse_run_config(const KeyValues& kv, Index default_vocab);
RunConfig load_run_config(const std::string& path);
KeyValues to_key_values(const RunConfig& config);

}  // namespace hydra
