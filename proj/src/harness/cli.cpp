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

#include "hydra/harness/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hydra/harness/bench.hpp"
#include "hydra/harness/checkpoint.hpp"
#include "hydra/harness/config.hpp"
#include "hydra/harness/dataset.hpp"
#include "hydra/harness/metrics.hpp"
#include "hydra/harness/projection.hpp"

namespace hydra {

namespace fs = std::filesystem;

std::vector<TokenSeq> decode_utterances(const ModelState& model,
                                        const std::vector<Utterance>& utterances, int factor,
                                        const DecodeOptions& options, Index batch_size) {
  std::vector<TokenSeq> out;
  for (std::size_t start = 0; start < utterances.size(); start += static_cast<std::size_t>(batch_size)) {
    std::vector<const Utterance*> group;
    for (std::size_t i = start; i < std::min(utterances.size(), start + static_cast<std::size_t>(batch_size)); ++i) {
      group.push_back(&utterances[i]);
    }
    const auto hyps = decode_batch(model, collate(group), factor, options);
    out.insert(out.end(), hyps.begin(), hyps.end());
  }
  return out;
}

PlanFile read_plan_file(const std::string& path) {
  const KeyValues kv = KeyValues::read_file(path);
  kv.require_known({"format_version", "config", "seed", "branch.", "encoder_decoder"});
  kv.require_version();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(path).parent_path() / p).string();
  };
  PlanFile pf;
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("branch.", 0) != 0) continue;
    int factor = 0;
    try {
      factor = std::stoi(key.substr(7));
    } catch (const std::exception&) {
      throw ConfigError(path + ": bad branch key " + key);
    }
    if (value != "scratch") pf.plan.branch_sources[factor] = resolve(value);
  }
  const std::string ed = kv.get_or("encoder_decoder", "scratch");
  if (ed != "scratch") pf.plan.encoder_decoder_source = resolve(ed);
  pf.config = resolve(kv.get_or("config", ""));
  if (kv.has("seed")) pf.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
  return pf;
}

namespace {

class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / "train.lock") {
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw UsageError("output directory " + dir.string() + " is locked by another run");
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

std::vector<Utterance> load_data(const std::string& manifest_path, Index vocab_size) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  if (static_cast<Index>(manifest.vocab.size()) != vocab_size) {
    throw VocabError(manifest_path + ": vocabulary has " + std::to_string(manifest.vocab.size()) +
                     " symbols, model expects " + std::to_string(vocab_size));
  }
  return load_utterances(manifest);
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& plan_path, std::ostream& out) {
  const RunConfig rc = load_run_config(config_path);
  if (rc.data.empty()) throw ConfigError(config_path + ": missing data");
  fs::create_directories(out_dir);
  OutputLock lock(out_dir);

  const DatasetManifest manifest = read_manifest(rc.data);
  const std::vector<Utterance> data = load_data(rc.data, rc.model.decoder.vocab_size);
  std::vector<Utterance> heldout;
  if (!rc.heldout.empty()) heldout = load_data(rc.heldout, rc.model.decoder.vocab_size);

  ModelState model = plan_path.empty()
                         ? init_scratch(rc.model, rc.train.seed)
                         : init_model(read_plan_file(plan_path).plan, rc.model, rc.train.seed);

  {
    std::ofstream cfg(fs::path(out_dir) / "config.txt");
    to_key_values(rc).write(cfg);
  }
  const fs::path dir(out_dir);
  CheckpointMeta meta{0, manifest.vocab};
  MetricsWriter metrics((dir / "metrics.jsonl").string());
  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) { metrics.write(r); };
  hooks.on_checkpoint = [&](const ModelState& m, Index step) {
    save_checkpoint((dir / ("step_" + std::to_string(step) + ".ckpt")).string(), m,
                    {step, manifest.vocab});
  };
  hooks.on_best = [&](const ModelState& m, Index step, double) {
    save_checkpoint((dir / "best.ckpt").string(), m, {step, manifest.vocab});
  };
  const TrainResult result = train(std::move(model), data, rc.train, hooks,
                                   heldout.empty() ? nullptr : &heldout);
  meta.step = rc.train.steps;
  save_checkpoint((dir / "final.ckpt").string(), result.model, meta);

  nlohmann::json summary{{"format_version", kFormatVersion},
                         {"steps", rc.train.steps},
                         {"checkpoint", (dir / "final.ckpt").string()}};
  if (!result.records.empty()) summary["final_total_loss"] = result.records.back().total;
  if (result.best_heldout_loss) summary["best_heldout_loss"] = *result.best_heldout_loss;
  out << summary.dump() << '\n';
  return 0;
}

int cmd_decode(const std::string& ckpt, int branch, const std::string& data_path,
               const std::string& mode, Index beam, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ckpt);
  DecodeOptions options;
  if (mode == "greedy") {
    options.mode = DecodeMode::kGreedy;
  } else if (mode == "rescore") {
    options.mode = DecodeMode::kRescore;
  } else {
    throw UsageError("unknown decode mode " + mode + " (greedy, rescore)");
  }
  options.beam = beam;
  ck.model.config.frontend.branch(branch);
  const std::vector<Utterance> data = load_data(data_path, ck.model.config.decoder.vocab_size);
  const std::vector<TokenSeq> hyps = decode_utterances(ck.model, data, branch, options);
  std::vector<TokenSeq> refs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    refs.push_back(data[i].tokens);
    out << data[i].id;
    for (int t : hyps[i]) out << ' ' << t;
    out << '\n';
  }
  out << nlohmann::json{{"format_version", kFormatVersion},
                        {"branch", branch},
                        {"mode", mode},
                        {"utterances", data.size()},
                        {"token_accuracy", token_accuracy(hyps, refs)}}
             .dump()
      << '\n';
  return 0;
}

int cmd_bench(const std::string& ckpt, int branch, const std::string& data_path,
              const std::string& mode, int repetitions, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ckpt);
  const std::vector<Utterance> data = load_data(data_path, ck.model.config.decoder.vocab_size);
  out << bench_rtf(ck.model, branch, data, parse_bench_mode(mode), repetitions).to_json() << '\n';
  return 0;
}

int cmd_gen_data(const std::string& out_dir, const SyntheticOptions& options, std::ostream& out) {
  SyntheticDataset ds = gen_synthetic(options);
  out << write_dataset(out_dir, ds) << '\n';
  return 0;
}

int cmd_transfer(const std::string& plan_path, const std::string& out_path, std::ostream& out) {
  const PlanFile pf = read_plan_file(plan_path);
  if (pf.config.empty()) throw ConfigError(plan_path + ": transfer needs config");
  const RunConfig rc = load_run_config(pf.config);
  std::vector<std::string> vocab;
  if (!rc.data.empty()) vocab = read_manifest(rc.data).vocab;
  const ModelState model = init_model(pf.plan, rc.model, pf.seed.value_or(rc.train.seed));
  save_checkpoint(out_path, model, {0, vocab});
  out << out_path << '\n';
  return 0;
}

int cmd_viz(const std::string& ckpts, const std::string& selector, const std::string& out_dir,
            std::ostream& out) {
  std::vector<std::pair<std::string, ModelState>> loaded;
  std::stringstream ss(ckpts);
  std::string path;
  while (std::getline(ss, path, ',')) {
    if (!path.empty()) loaded.emplace_back(fs::path(path).stem().string(), load_checkpoint(path).model);
  }
  std::vector<LabeledModel> models;
  for (const auto& [label, model] : loaded) models.emplace_back(label, &model);
  const Projection p = project_params(models, selector);
  write_projection(out_dir, p);
  out << (fs::path(out_dir) / "projection.csv").string() << '\n';
  return 0;
}

std::string one_line(std::string message) {
  for (char& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return message;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-rate subsampling speech recognizer"};
  app.require_subcommand(1);

  std::string config, out_dir, plan, ckpt, data, mode, select, ckpts;
  int branch = 4, repetitions = 5;
  Index beam = 10;
  SyntheticOptions synth;

  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config, "Run configuration")->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_option("--init-plan", plan, "Initialization plan");

  auto* decode = app.add_subcommand("decode", "Decode a manifest and report token accuracy");
  decode->add_option("--ckpt", ckpt)->required();
  decode->add_option("--branch", branch)->required();
  decode->add_option("--data", data)->required();
  decode->add_option("--mode", mode)->required();
  decode->add_option("--beam", beam);

  auto* bench = app.add_subcommand("bench", "Measure the real-time factor of one branch");
  bench->add_option("--ckpt", ckpt)->required();
  bench->add_option("--branch", branch)->required();
  bench->add_option("--data", data)->required();
  bench->add_option("--mode", mode)->required();
  bench->add_option("--reps", repetitions);

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--out", out_dir)->required();
  gen->add_option("--utts", synth.num_utts);
  gen->add_option("--vocab", synth.vocab_size, "Number of real tokens");
  gen->add_option("--seed", synth.seed);
  gen->add_option("--frames-per-token", synth.frames_per_token);
  gen->add_option("--noise", synth.noise_std);

  auto* transfer = app.add_subcommand("transfer", "Initialize a model from a plan without training");
  transfer->add_option("--plan", plan)->required();
  transfer->add_option("--out", out_dir, "Output checkpoint")->required();

  auto* viz = app.add_subcommand("viz", "Project encoder parameters of several checkpoints to 2-D");
  viz->add_option("--ckpts", ckpts)->required();
  viz->add_option("--select", select)->required();
  viz->add_option("--out", out_dir)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[UsageError]: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*train) return cmd_train(config, out_dir, plan, out);
    if (*decode) return cmd_decode(ckpt, branch, data, mode, beam, out);
    if (*bench) return cmd_bench(ckpt, branch, data, mode, repetitions, out);
    if (*gen) return cmd_gen_data(out_dir, synth, out);
    if (*transfer) return cmd_transfer(plan, out_dir, out);
    if (*viz) return cmd_viz(ckpts, select, out_dir, out);
  } catch (const Error& e) {
    err << "error[" << e.kind() << "]: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error[InternalError]: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace hydra
