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

#include "hydra/harness/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hydra/harness/dataset.hpp"

namespace hydra {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string resolve(const std::string& base_file, const std::string& path) {
  if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base_file).parent_path() / path).string();
}

}  // namespace

KeyValues KeyValues::parse(std::istream& in, const std::string& source) {
  KeyValues kv;
  kv.source_ = source;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
    if (kv.values_.count(key)) {
      throw ConfigError(source + ":" + std::to_string(number) + ": duplicate key " + key);
    }
    kv.values_[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return parse(in, path);
}

const std::string& KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(source_ + ": missing key " + key);
  return it->second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long long KeyValues::get_int(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError(source_ + ": " + key + " is not an integer");
  return out;
}

double KeyValues::get_double(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError(source_ + ": " + key + " is not a number");
  return out;
}

bool KeyValues::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(source_ + ": " + key + " is not a boolean");
}

std::vector<int> KeyValues::get_int_list(const std::string& key) const {
  std::vector<int> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(source_ + ": " + key + " is not an integer list");
    }
  }
  return out;
}

void KeyValues::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    bool ok = false;
    for (const auto& k : known) {
      if (key == k || (!k.empty() && k.back() == '.' && key.rfind(k, 0) == 0)) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(source_ + ": unknown key " + key);
  }
}

void KeyValues::require_version() const {
  if (!has("format_version")) throw ConfigError(source_ + ": missing format_version");
  if (get_int("format_version") != kFormatVersion) {
    throw ConfigError(source_ + ": unsupported format_version " + get("format_version"));
  }
}

void KeyValues::write(std::ostream& out) const {
  auto version = values_.find("format_version");
  if (version != values_.end()) out << "format_version = " << version->second << '\n';
  for (const auto& [key, value] : values_) {
    if (key != "format_version") out << key << " = " << value << '\n';
  }
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

ModelConfig model_preset(const std::string& name, Index vocab_size, const std::vector<int>& factors) {
  if (name == "desk") return desk_config(vocab_size, factors);
  if (name == "large") return large_config(vocab_size, factors);
  if (name == "narrow") return narrow_config(vocab_size, factors);
  throw ConfigError("unknown preset " + name + " (desk, large, narrow)");
}

std::vector<std::string> model_config_keys() {
  return {"frontend.factors",        "frontend.use_pos_enc",   "frontend.input_dim",
          "frontend.model_dim",      "encoder.num_blocks",     "encoder.heads",
          "encoder.ffn_dim",         "encoder.depthwise_kernel", "encoder.dropout",
          "decoder.num_blocks_l2r",  "decoder.num_blocks_r2l", "decoder.heads",
          "decoder.ffn_dim",         "decoder.vocab_size",     "decoder.dropout"};
}

void write_model_config(KeyValues& kv, const ModelConfig& c) {
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  kv.set("frontend.factors", join_ints(c.frontend.factors()));
  kv.set("frontend.use_pos_enc", c.frontend.use_pos_enc ? "true" : "false");
  kv.set("frontend.input_dim", std::to_string(c.frontend.input_dim));
  kv.set("frontend.model_dim", std::to_string(c.frontend.model_dim));
  kv.set("encoder.num_blocks", std::to_string(c.encoder.num_blocks));
  kv.set("encoder.heads", std::to_string(c.encoder.heads));
  kv.set("encoder.ffn_dim", std::to_string(c.encoder.ffn_dim));
  kv.set("encoder.depthwise_kernel", std::to_string(c.encoder.depthwise_kernel));
  kv.set("encoder.dropout", num(c.encoder.dropout_rate));
  kv.set("decoder.num_blocks_l2r", std::to_string(c.decoder.num_blocks_l2r));
  kv.set("decoder.num_blocks_r2l", std::to_string(c.decoder.num_blocks_r2l));
  kv.set("decoder.heads", std::to_string(c.decoder.heads));
  kv.set("decoder.ffn_dim", std::to_string(c.decoder.ffn_dim));
  kv.set("decoder.vocab_size", std::to_string(c.decoder.vocab_size));
  kv.set("decoder.dropout", num(c.decoder.dropout_rate));
}

ModelConfig read_model_config(const KeyValues& kv, ModelConfig c) {
  auto int_or = [&](const std::string& key, Index fallback) {
    return kv.has(key) ? static_cast<Index>(kv.get_int(key)) : fallback;
  };
  auto double_or = [&](const std::string& key, double fallback) {
    return kv.has(key) ? kv.get_double(key) : fallback;
  };
  const std::vector<int> factors =
      kv.has("frontend.factors") ? kv.get_int_list("frontend.factors") : c.frontend.factors();
  const bool pos = kv.has("frontend.use_pos_enc") ? kv.get_bool("frontend.use_pos_enc")
                                                   : c.frontend.use_pos_enc;
  const Index input_dim = int_or("frontend.input_dim", c.frontend.input_dim);
  const Index model_dim = int_or("frontend.model_dim", c.frontend.model_dim);
  c.frontend = make_frontend_config(factors, model_dim, input_dim, pos);
  c.encoder.model_dim = model_dim;
  c.encoder.num_blocks = int_or("encoder.num_blocks", c.encoder.num_blocks);
  c.encoder.heads = int_or("encoder.heads", c.encoder.heads);
  c.encoder.ffn_dim = int_or("encoder.ffn_dim", c.encoder.ffn_dim);
  c.encoder.depthwise_kernel = int_or("encoder.depthwise_kernel", c.encoder.depthwise_kernel);
  c.encoder.dropout_rate = double_or("encoder.dropout", c.encoder.dropout_rate);
  c.decoder.model_dim = model_dim;
  c.decoder.num_blocks_l2r = int_or("decoder.num_blocks_l2r", c.decoder.num_blocks_l2r);
  c.decoder.num_blocks_r2l = int_or("decoder.num_blocks_r2l", c.decoder.num_blocks_r2l);
  c.decoder.heads = int_or("decoder.heads", c.decoder.heads);
  c.decoder.ffn_dim = int_or("decoder.ffn_dim", c.decoder.ffn_dim);
  c.decoder.vocab_size = int_or("decoder.vocab_size", c.decoder.vocab_size);
  c.decoder.dropout_rate = double_or("decoder.dropout", c.decoder.dropout_rate);
  c.validate();
  return c;
}

RunConfig parse_run_config(const KeyValues& kv, Index default_vocab) {
  std::vector<std::string> known = model_config_keys();
  for (const char* k : {"format_version", "preset", "data", "heldout", "seed", "steps",
                        "batch_size", "peak_lr", "warmup", "alpha", "beta", "label_smoothing",
                        "grad_clip", "checkpoint_every", "eval_every", "branches"}) {
    known.emplace_back(k);
  }
  kv.require_known(known);
  kv.require_version();

  RunConfig rc;
  rc.preset = kv.get_or("preset", "desk");
  rc.data = kv.get_or("data", "");
  rc.heldout = kv.get_or("heldout", "");
  const Index vocab = kv.has("decoder.vocab_size") ? kv.get_int("decoder.vocab_size") : default_vocab;
  const std::vector<int> factors =
      kv.has("frontend.factors") ? kv.get_int_list("frontend.factors") : std::vector<int>{4, 6, 8};
  rc.model = read_model_config(kv, model_preset(rc.preset, vocab, factors));

  TrainConfig& t = rc.train;
  if (kv.has("seed")) t.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
  if (kv.has("steps")) t.steps = kv.get_int("steps");
  if (kv.has("batch_size")) t.batch_size = kv.get_int("batch_size");
  if (kv.has("peak_lr")) t.lr.peak_lr = kv.get_double("peak_lr");
  if (kv.has("warmup")) t.lr.warmup = kv.get_int("warmup");
  if (kv.has("alpha")) t.weights.alpha = kv.get_double("alpha");
  if (kv.has("beta")) t.weights.beta = kv.get_double("beta");
  if (kv.has("label_smoothing")) t.weights.label_smoothing = kv.get_double("label_smoothing");
  if (kv.has("grad_clip")) t.grad_clip = kv.get_double("grad_clip");
  if (kv.has("checkpoint_every")) t.checkpoint_every = kv.get_int("checkpoint_every");
  if (kv.has("eval_every")) t.eval_every = kv.get_int("eval_every");
  if (kv.has("branches")) t.branches = kv.get_int_list("branches");
  t.validate(rc.model.frontend);
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  const KeyValues kv = KeyValues::read_file(path);
  Index vocab = 0;
  std::string data = resolve(path, kv.get_or("data", ""));
  if (!kv.has("decoder.vocab_size")) {
    if (data.empty()) throw ConfigError(path + ": needs data or decoder.vocab_size");
    vocab = static_cast<Index>(read_manifest(data).vocab.size());
  }
  RunConfig rc = parse_run_config(kv, vocab);
  rc.data = data;
  rc.heldout = resolve(path, rc.heldout);
  return rc;
}

KeyValues to_key_values(const RunConfig& rc) {
  KeyValues kv;
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  kv.set("format_version", std::to_string(kFormatVersion));
  kv.set("preset", rc.preset);
  if (!rc.data.empty()) kv.set("data", rc.data);
  if (!rc.heldout.empty()) kv.set("heldout", rc.heldout);
  write_model_config(kv, rc.model);
  const TrainConfig& t = rc.train;
  kv.set("seed", std::to_string(t.seed));
  kv.set("steps", std::to_string(t.steps));
  kv.set("batch_size", std::to_string(t.batch_size));
  kv.set("peak_lr", num(t.lr.peak_lr));
  kv.set("warmup", std::to_string(t.lr.warmup));
  kv.set("alpha", num(t.weights.alpha));
  kv.set("beta", num(t.weights.beta));
  kv.set("label_smoothing", num(t.weights.label_smoothing));
  kv.set("grad_clip", num(t.grad_clip));
  kv.set("checkpoint_every", std::to_string(t.checkpoint_every));
  kv.set("eval_every", std::to_string(t.eval_every));
  if (!t.branches.empty()) kv.set("branches", join_ints(t.branches));
  return kv;
}

}  // namespace hydra
