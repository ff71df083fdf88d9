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

#include "hydra/harness/metrics.hpp"

#include <json.hpp>

#include "hydra/harness/config.hpp"

namespace hydra {

using nlohmann::json;

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw ConfigError("cannot write metrics file " + path);
  out_ << json{{"format_version", kFormatVersion}}.dump() << '\n';
}

void MetricsWriter::write(const StepRecord& record) {
  out_ << to_json_line(record) << '\n';
  out_.flush();
}

std::string to_json_line(const StepRecord& r) {
  return json{{"step", r.step},       {"branch", r.branch},   {"total", r.total},
              {"ctc", r.ctc},         {"kl", r.kl},           {"kl_l2r", r.kl_l2r},
              {"kl_r2l", r.kl_r2l},   {"grad_norm", r.grad_norm}, {"lr", r.lr},
              {"wall_ms", r.wall_ms}, {"dropped", r.dropped}, {"applied", r.applied}}
      .dump();
}

std::vector<StepRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metrics file " + path);
  std::vector<StepRecord> out;
  std::string line;
  bool versioned = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path + ": malformed record");
    if (!versioned) {
      if (j.value("format_version", 0) != kFormatVersion) {
        throw ConfigError(path + ": missing or unsupported format_version");
      }
      versioned = true;
      continue;
    }
    StepRecord r;
    r.step = j.at("step").get<Index>();
    r.branch = j.at("branch").get<int>();
    r.total = j.at("total").get<double>();
    r.ctc = j.at("ctc").get<double>();
    r.kl = j.at("kl").get<double>();
    r.kl_l2r = j.at("kl_l2r").get<double>();
    r.kl_r2l = j.at("kl_r2l").get<double>();
    r.grad_norm = j.at("grad_norm").get<double>();
    r.lr = j.at("lr").get<double>();
    r.wall_ms = j.at("wall_ms").get<double>();
    r.dropped = j.at("dropped").get<Index>();
    r.applied = j.at("applied").get<bool>();
    out.push_back(r);
  }
  return out;
}

}  // namespace hydra
