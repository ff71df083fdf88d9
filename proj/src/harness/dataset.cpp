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

#include "hydra/harness/dataset.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "hydra/harness/config.hpp"

namespace hydra {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "feature and checkpoint I/O assume a little-endian host");

std::string DatasetManifest::resolve(const ManifestEntry& entry) const {
  if (fs::path(entry.path).is_absolute() || base_dir.empty()) return entry.path;
  return (fs::path(base_dir) / entry.path).string();
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open manifest " + path);
  DatasetManifest m;
  m.base_dir = fs::path(path).parent_path().string();
  std::string line;
  int number = 0;
  bool versioned = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto fail = [&](const std::string& why) {
      return DatasetError(path + ":" + std::to_string(number) + ": " + why);
    };
    if (key == "format_version") {
      int v = 0;
      if (!(ls >> v) || v != kFormatVersion) throw fail("unsupported format_version");
      versioned = true;
    } else if (key == "feature_dim") {
      if (!(ls >> m.feature_dim) || m.feature_dim < 1) throw fail("bad feature_dim");
    } else if (key == "vocab") {
      std::string sym;
      while (ls >> sym) m.vocab.push_back(sym);
    } else if (key == "utt") {
      ManifestEntry e;
      std::string ids;
      if (!(ls >> e.id >> e.path >> e.frames >> ids)) throw fail("expected utt <id> <path> <frames> <ids>");
      std::stringstream is(ids);
      std::string item;
      while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        try {
          e.tokens.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw fail("bad token id " + item);
        }
      }
      m.entries.push_back(std::move(e));
    } else {
      throw fail("unknown record " + key);
    }
  }
  if (!versioned) throw DatasetError(path + ": missing format_version");
  if (m.vocab.size() < 4) throw DatasetError(path + ": vocabulary too small");
  return m;
}

void write_manifest(const std::string& path, const DatasetManifest& m) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write manifest " + path);
  out << "format_version " << kFormatVersion << '\n';
  out << "feature_dim " << m.feature_dim << '\n';
  out << "vocab";
  for (const auto& s : m.vocab) out << ' ' << s;
  out << '\n';
  for (const auto& e : m.entries) {
    out << "utt " << e.id << ' ' << e.path << ' ' << e.frames << ' '
        << (e.tokens.empty() ? std::string(",") : join_ints(e.tokens)) << '\n';
  }
}

void write_features(const std::string& path, const Array& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path);
  const Eigen::VectorXf values = features.values().cast<float>();
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

Array read_features(const std::string& path, Index width, Index expected_frames) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DatasetError("cannot open feature file " + path);
  const auto bytes = static_cast<Index>(in.tellg());
  const Index expected = expected_frames * width * static_cast<Index>(sizeof(float));
  if (bytes != expected) {
    throw DatasetError(path + ": holds " + std::to_string(bytes / (width * 4)) +
                       " frames, manifest says " + std::to_string(expected_frames));
  }
  in.seekg(0);
  Eigen::VectorXf values(expected_frames * width);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  return Array({expected_frames, width}, values.cast<double>());
}

std::vector<Utterance> load_utterances(const DatasetManifest& manifest) {
  std::vector<Utterance> out;
  const int vocab = static_cast<int>(manifest.vocab.size());
  for (const auto& e : manifest.entries) {
    for (int id : e.tokens) {
      if (id <= 0 || id >= vocab - 2) {
        throw VocabError("utterance " + e.id + ": token id " + std::to_string(id) +
                         " is reserved or outside the vocabulary");
      }
    }
    if (e.frames < 1) throw DatasetError("utterance " + e.id + " has no frames");
    out.push_back({e.id, read_features(manifest.resolve(e), manifest.feature_dim, e.frames),
                   e.tokens});
  }
  return out;
}

std::vector<std::string> make_vocab(Index tokens) {
  std::vector<std::string> vocab{"<blank>"};
  for (Index i = 0; i < tokens; ++i) {
    vocab.push_back(i < 26 ? std::string(1, static_cast<char>('a' + i)) : "tok" + std::to_string(i));
  }
  vocab.push_back("<sos>");
  vocab.push_back("<eos>");
  return vocab;
}

SyntheticDataset gen_synthetic(const SyntheticOptions& o) {
  if (o.frames_per_token < 9) throw ConfigError("frames_per_token must be >= 9");
  if (o.vocab_size < 4) throw ConfigError("synthetic data needs at least 4 tokens");
  if (o.min_tokens < 1 || o.max_tokens < o.min_tokens) throw ConfigError("bad token-count range");
  if (o.noise_std < 0.0) throw ConfigError("noise_std must be >= 0");

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  SyntheticDataset ds;
  ds.manifest.vocab = make_vocab(o.vocab_size);
  ds.manifest.feature_dim = o.feature_dim;
  const Index vocab = static_cast<Index>(ds.manifest.vocab.size());
  ds.prototypes = Array({vocab, o.feature_dim});
  for (Index id = 1; id <= o.vocab_size; ++id) {
    for (Index d = 0; d < o.feature_dim; ++d) ds.prototypes.at(id, d) = static_cast<float>(unit(rng));
  }

  std::uniform_int_distribution<Index> length(o.min_tokens, o.max_tokens);
  std::uniform_int_distribution<int> token(1, static_cast<int>(o.vocab_size));
  for (Index n = 0; n < o.num_utts; ++n) {
    Utterance u;
    std::ostringstream id;
    id << "utt" << std::setw(4) << std::setfill('0') << n;
    u.id = id.str();
    const Index count = length(rng);
    while (static_cast<Index>(u.tokens.size()) < count) {
      const int t = token(rng);
      if (!u.tokens.empty() && u.tokens.back() == t) continue;
      u.tokens.push_back(t);
    }
    u.features = Array({count * o.frames_per_token, o.feature_dim});
    auto rows = u.features.rows();
    for (Index k = 0; k < count; ++k) {
      for (Index f = 0; f < o.frames_per_token; ++f) {
        rows.row(k * o.frames_per_token + f) = ds.prototypes.rows().row(u.tokens[k]);
      }
    }
    if (o.noise_std > 0.0) {
      for (Index i = 0; i < u.features.size(); ++i) u.features[i] += o.noise_std * unit(rng);
    }
    // Stored features are f32; round now so in-memory and on-disk data agree.
    u.features.values() = u.features.values().cast<float>().cast<double>();
    ds.manifest.entries.push_back({u.id, "feats/" + u.id + ".f32", u.frames(), u.tokens});
    ds.utterances.push_back(std::move(u));
  }
  return ds;
}

std::string write_dataset(const std::string& dir, SyntheticDataset& dataset) {
  fs::create_directories(fs::path(dir) / "feats");
  for (std::size_t i = 0; i < dataset.utterances.size(); ++i) {
    write_features((fs::path(dir) / dataset.manifest.entries[i].path).string(),
                   dataset.utterances[i].features);
  }
  const std::string path = (fs::path(dir) / "manifest.txt").string();
  write_manifest(path, dataset.manifest);
  dataset.manifest.base_dir = dir;
  return path;
}

}  // namespace hydra
