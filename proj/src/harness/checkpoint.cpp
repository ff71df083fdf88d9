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

#include "hydra/harness/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "hydra/harness/config.hpp"

namespace hydra {

namespace {

constexpr const char* kMagic = "hydra-checkpoint";

const char* dtype_name(Dtype d) { return d == Dtype::kF32 ? "f32" : "f64"; }

Index dtype_bytes(Dtype d) { return d == Dtype::kF32 ? 4 : 8; }

Dtype parse_dtype(const std::string& s, const std::string& path) {
  if (s == "f32") return Dtype::kF32;
  if (s == "f64") return Dtype::kF64;
  throw CheckpointError(path + ": unknown dtype " + s);
}

std::string shape_field(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out.empty() ? "scalar" : out;
}

Shape parse_shape(const std::string& s) {
  Shape shape;
  if (s == "scalar") return shape;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, 'x')) shape.push_back(std::stoll(item));
  return shape;
}

struct IndexEntry {
  Dtype dtype;
  Index offset;
  Shape shape;
  std::int64_t step_count;
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& model, const CheckpointMeta& meta,
                     Dtype dtype) {
  KeyValues kv;
  kv.set("format_version", std::to_string(kFormatVersion));
  kv.set("step", std::to_string(meta.step));
  kv.set("dtype", dtype_name(dtype));
  std::string vocab;
  for (std::size_t i = 0; i < meta.vocab.size(); ++i) vocab += (i ? " " : "") + meta.vocab[i];
  kv.set("vocab", vocab);
  write_model_config(kv, model.config);

  std::ostringstream header;
  header << kMagic << '\n';
  kv.write(header);
  Index offset = 0;
  for (const auto& [name, p] : model.params) {
    header << "tensor " << name << ' ' << dtype_name(dtype) << ' ' << offset << ' '
           << shape_field(p.tensor.shape()) << ' ' << p.step_count << '\n';
    offset += p.tensor.size() * dtype_bytes(dtype);
  }
  header << "end_header\n";

  std::string blob;
  blob.reserve(static_cast<std::size_t>(offset));
  for (const auto& [name, p] : model.params) {
    const auto& values = p.tensor.value().values();
    if (dtype == Dtype::kF64) {
      blob.append(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::size_t>(values.size()) * sizeof(double));
    } else {
      const Eigen::VectorXf narrow = values.cast<float>();
      blob.append(reinterpret_cast<const char*>(narrow.data()),
                  static_cast<std::size_t>(narrow.size()) * sizeof(float));
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + path);
    out << header.str();
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw CheckpointError("short write to " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot rename " + tmp);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::istringstream header(bytes);
  std::string line;
  if (!std::getline(header, line) || line != kMagic) {
    throw CheckpointError(path + ": not a checkpoint");
  }
  std::ostringstream kv_text;
  std::map<std::string, IndexEntry> index;
  bool ended = false;
  while (std::getline(header, line)) {
    if (line == "end_header") {
      ended = true;
      break;
    }
    if (line.rfind("tensor ", 0) == 0) {
      std::istringstream ls(line.substr(7));
      std::string name, dtype, shape;
      IndexEntry e{};
      if (!(ls >> name >> dtype >> e.offset >> shape >> e.step_count)) {
        throw CheckpointError(path + ": malformed tensor entry: " + line);
      }
      e.dtype = parse_dtype(dtype, path);
      try {
        e.shape = parse_shape(shape);
      } catch (const std::exception&) {
        throw CheckpointError(path + ": malformed shape for " + name);
      }
      if (!index.emplace(name, e).second) throw CheckpointError(path + ": duplicate tensor " + name);
    } else {
      kv_text << line << '\n';
    }
  }
  if (!ended) throw CheckpointError(path + ": truncated header");
  const auto blob_start = static_cast<Index>(header.tellg());

  Checkpoint ck;
  try {
    std::istringstream kv_in(kv_text.str());
    const KeyValues kv = KeyValues::parse(kv_in, path);
    kv.require_version();
    ck.meta.step = kv.get_int("step");
    ck.dtype = parse_dtype(kv.get("dtype"), path);
    std::istringstream vocab(kv.get_or("vocab", ""));
    std::string sym;
    while (vocab >> sym) ck.meta.vocab.push_back(sym);
    const Index vocab_size = kv.get_int("decoder.vocab_size");
    const std::vector<int> factors = kv.get_int_list("frontend.factors");
    ck.model.config = read_model_config(kv, desk_config(vocab_size, factors));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("header: ") + e.what());
  }

  // Shapes and names come from the configuration; values from the blob.
  const ModelState expected = init_scratch(ck.model.config, 0);
  for (const auto& [name, p] : expected.params) {
    auto it = index.find(name);
    if (it == index.end()) throw CheckpointError(path + ": missing tensor " + name);
    const IndexEntry& e = it->second;
    if (e.shape != p.tensor.shape()) {
      throw CheckpointError(path + ": tensor " + name + " has shape " + to_string(e.shape) +
                            ", expected " + to_string(p.tensor.shape()));
    }
    const Index n = numel(e.shape);
    const Index begin = blob_start + e.offset;
    if (e.offset < 0 || begin + n * dtype_bytes(e.dtype) > static_cast<Index>(bytes.size())) {
      throw CheckpointError(path + ": truncated data for tensor " + name);
    }
    Array value(e.shape);
    if (e.dtype == Dtype::kF64) {
      std::memcpy(value.data(), bytes.data() + begin, static_cast<std::size_t>(n) * sizeof(double));
    } else {
      Eigen::VectorXf narrow(n);
      std::memcpy(narrow.data(), bytes.data() + begin, static_cast<std::size_t>(n) * sizeof(float));
      value.values() = narrow.cast<double>();
    }
    ck.model.params.add(name, std::move(value)).step_count = e.step_count;
  }
  for (const auto& [name, e] : index) {
    if (!expected.params.contains(name)) throw CheckpointError(path + ": unexpected tensor " + name);
  }
  return ck;
}

void load_checkpoint_into(const std::string& path, ModelState& target) {
  Checkpoint ck = load_checkpoint(path);
  KeyValues have, want;
  write_model_config(have, ck.model.config);
  write_model_config(want, target.config);
  for (const auto& [key, value] : want.entries()) {
    if (have.get(key) != value) {
      throw CheckpointError(path + ": config mismatch on " + key + " (" + have.get(key) +
                            " vs " + value + ")");
    }
  }
  target.params = std::move(ck.model.params);
}

}  // namespace hydra
