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

#include "hydra/model.hpp"

#include <algorithm>
#include <cmath>

namespace hydra {

namespace {

void add_linear(ParameterMap& params, const std::string& name, Index out, Index in,
                std::uint64_t seed) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  params.add(name + ".weight", uniform_init({out, in}, bound, seed, name + ".weight"));
  params.add(name + ".bias", uniform_init({out}, bound, seed, name + ".bias"));
}

void add_norm(ParameterMap& params, const std::string& name, Index width) {
  params.add(name + ".gain", Array::constant({width}, 1.0));
  params.add(name + ".offset", Array({width}));
}

void add_attention(ParameterMap& params, const std::string& name, Index width,
                   std::uint64_t seed) {
  for (const char* proj : {".q", ".k", ".v", ".out"}) {
    add_linear(params, name + proj, width, width, seed);
  }
}

Tensor apply_linear(const ParameterMap& params, const std::string& name, const Tensor& x) {
  return linear(x, params[name + ".weight"], params[name + ".bias"]);
}

Tensor apply_norm(const ParameterMap& params, const std::string& name, const Tensor& x) {
  return layer_norm(x, params[name + ".gain"], params[name + ".offset"]);
}

Tensor apply_attention(const ParameterMap& params, const std::string& name,
                       const Tensor& query, const Tensor& memory, Index heads,
                       const AttentionMask& mask) {
  Tensor q = apply_linear(params, name + ".q", query);
  Tensor k = apply_linear(params, name + ".k", memory);
  Tensor v = apply_linear(params, name + ".v", memory);
  return apply_linear(params, name + ".out", scaled_dot_attention(q, k, v, heads, &mask));
}

Tensor maybe_dropout(const Tensor& x, const ForwardOptions& options) {
  if (options.dropout <= 0.0) return x;
  if (!options.rng) throw UsageError("dropout requested without an rng");
  return dropout(x, options.dropout, *options.rng);
}

std::string encoder_block(Index i) { return "encoder.block" + std::to_string(i); }

std::string decoder_stack(Direction d) {
  return d == Direction::kLeftToRight ? "decoder.l2r" : "decoder.r2l";
}

void init_encoder(ParameterMap& params, const EncoderConfig& c, std::uint64_t seed) {
  const Index d = c.model_dim;
  for (Index i = 0; i < c.num_blocks; ++i) {
    const std::string b = encoder_block(i);
    for (const char* ffn : {".ffn1", ".ffn2"}) {
      add_norm(params, b + ffn + ".norm", d);
      add_linear(params, b + ffn + ".w1", c.ffn_dim, d, seed);
      add_linear(params, b + ffn + ".w2", d, c.ffn_dim, seed);
    }
    add_norm(params, b + ".attn.norm", d);
    add_attention(params, b + ".attn", d, seed);
    add_norm(params, b + ".conv.norm", d);
    add_linear(params, b + ".conv.pw1", 2 * d, d, seed);
    const double dw_bound = 1.0 / std::sqrt(static_cast<double>(c.depthwise_kernel));
    params.add(b + ".conv.dw.weight",
               uniform_init({d, c.depthwise_kernel}, dw_bound, seed, b + ".conv.dw.weight"));
    params.add(b + ".conv.dw.bias", uniform_init({d}, dw_bound, seed, b + ".conv.dw.bias"));
    add_norm(params, b + ".conv.dw_norm", d);
    add_linear(params, b + ".conv.pw2", d, d, seed);
    add_norm(params, b + ".final_norm", d);
  }
}

void init_decoder_stack(ParameterMap& params, const DecoderConfig& c, Direction dir,
                        Index blocks, std::uint64_t seed) {
  const std::string s = decoder_stack(dir);
  const Index d = c.model_dim;
  const double embed_bound = std::sqrt(3.0 / static_cast<double>(d));
  params.add(s + ".embed", uniform_init({c.vocab_size, d}, embed_bound, seed, s + ".embed"));
  for (Index i = 0; i < blocks; ++i) {
    const std::string b = s + ".block" + std::to_string(i);
    add_norm(params, b + ".self_attn.norm", d);
    add_attention(params, b + ".self_attn", d, seed);
    add_norm(params, b + ".cross_attn.norm", d);
    add_attention(params, b + ".cross_attn", d, seed);
    add_norm(params, b + ".ffn.norm", d);
    add_linear(params, b + ".ffn.w1", c.ffn_dim, d, seed);
    add_linear(params, b + ".ffn.w2", d, c.ffn_dim, seed);
  }
  add_norm(params, s + ".final_norm", d);
  add_linear(params, s + ".out", c.vocab_size, d, seed);
}

Tensor feed_forward(const ParameterMap& params, const std::string& name, const Tensor& x,
                    bool swish, const ForwardOptions& options) {
  Tensor h = apply_linear(params, name + ".w1", apply_norm(params, name + ".norm", x));
  h = swish ? silu(h) : relu(h);
  return maybe_dropout(apply_linear(params, name + ".w2", h), options);
}

Tensor conv_module(const ParameterMap& params, const std::string& name, const Tensor& x,
                   const Array& frame_mask, const ForwardOptions& options) {
  Tensor h = glu(apply_linear(params, name + ".pw1", apply_norm(params, name + ".norm", x)));
  h = mul_constant(h, frame_mask);
  h = depthwise_conv1d(h, params[name + ".dw.weight"], params[name + ".dw.bias"]);
  h = silu(apply_norm(params, name + ".dw_norm", h));
  return maybe_dropout(apply_linear(params, name + ".pw2", h), options);
}

}  // namespace

void EncoderConfig::validate() const {
  if (num_blocks < 0) throw ConfigError("encoder num_blocks must be >= 0");
  if (heads < 1 || model_dim % heads != 0) {
    throw ConfigError("encoder model_dim must be divisible by heads");
  }
  if (depthwise_kernel < 3 || depthwise_kernel % 2 == 0) {
    throw ConfigError("depthwise_kernel must be odd and >= 3");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

void DecoderConfig::validate() const {
  if (num_blocks_l2r < 0 || num_blocks_r2l < 0) throw ConfigError("decoder blocks must be >= 0");
  if (heads < 1 || model_dim % heads != 0) {
    throw ConfigError("decoder model_dim must be divisible by heads");
  }
  if (vocab_size < 4) throw ConfigError("vocab_size must leave room for blank, sos, eos");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

void ModelConfig::validate() const {
  frontend.validate();
  encoder.validate();
  decoder.validate();
  if (encoder.model_dim != frontend.model_dim || decoder.model_dim != frontend.model_dim) {
    throw ConfigError("frontend, encoder and decoder must share model_dim");
  }
}

ModelConfig desk_config(Index vocab_size, const std::vector<int>& factors) {
  ModelConfig c;
  c.frontend = make_frontend_config(factors, 64, 80, false);
  c.encoder = EncoderConfig{};
  c.decoder = DecoderConfig{};
  c.decoder.vocab_size = vocab_size;
  c.validate();
  return c;
}

ModelConfig large_config(Index vocab_size, const std::vector<int>& factors) {
  ModelConfig c;
  c.frontend = make_frontend_config(factors, 256, 80, false);
  c.encoder = EncoderConfig{12, 256, 4, 2048, 15, 0.1};
  c.decoder = DecoderConfig{3, 3, 256, 4, 2048, vocab_size, 0.1};
  c.validate();
  return c;
}

ModelConfig narrow_config(Index vocab_size, const std::vector<int>& factors) {
  ModelConfig c;
  c.frontend = make_frontend_config(factors, 64, 80, false);
  c.encoder = EncoderConfig{12, 64, 4, 2048, 15, 0.1};
  c.decoder = DecoderConfig{3, 3, 64, 4, 2048, vocab_size, 0.1};
  c.validate();
  return c;
}

ModelState init_scratch(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelState model{config, {}};
  for (const auto& branch : config.frontend.branches) init_branch(model.params, branch, seed);
  init_encoder(model.params, config.encoder, seed);
  init_decoder_stack(model.params, config.decoder, Direction::kLeftToRight,
                     config.decoder.num_blocks_l2r, seed);
  if (config.decoder.has_r2l()) {
    init_decoder_stack(model.params, config.decoder, Direction::kRightToLeft,
                       config.decoder.num_blocks_r2l, seed);
  }
  add_linear(model.params, "heads.ctc", config.decoder.vocab_size, config.encoder.model_dim, seed);
  return model;
}

Tensor encode(const ModelState& model, const Tensor& embedding, std::span<const int> lengths,
              const ForwardOptions& options) {
  const auto& c = model.config.encoder;
  const auto& params = model.params;
  if (embedding.value().rank() != 3 || embedding.dim(2) != c.model_dim) {
    throw DimensionError("encoder input must be (B, T', " + std::to_string(c.model_dim) +
                         "), got " + to_string(embedding.shape()));
  }
  const Index batch = embedding.dim(0), steps = embedding.dim(1);
  if (static_cast<Index>(lengths.size()) != batch) {
    throw DimensionError("encoder: lengths do not match batch");
  }
  const AttentionMask mask = padding_mask(lengths, steps, steps);
  const Array frame_mask = time_mask(lengths, steps, c.model_dim);

  Tensor x = embedding;
  for (Index i = 0; i < c.num_blocks; ++i) {
    const std::string b = encoder_block(i);
    x = x + scale(feed_forward(params, b + ".ffn1", x, true, options), 0.5);
    const Tensor normed = apply_norm(params, b + ".attn.norm", x);
    x = x + maybe_dropout(apply_attention(params, b + ".attn", normed, normed, c.heads, mask),
                          options);
    x = x + conv_module(params, b + ".conv", x, frame_mask, options);
    x = x + scale(feed_forward(params, b + ".ffn2", x, true, options), 0.5);
    x = apply_norm(params, b + ".final_norm", x);
  }
  return x;
}

Tensor ctc_head(const ModelState& model, const Tensor& encoded) {
  return log_softmax(apply_linear(model.params, "heads.ctc", encoded));
}

TokenSeq decoder_output_targets(const TokenSeq& target, Direction direction, int eos) {
  TokenSeq out = target;
  if (direction == Direction::kRightToLeft) std::reverse(out.begin(), out.end());
  out.push_back(eos);
  return out;
}

Tensor decode_step(const ModelState& model, const Tensor& encoded, std::span<const int> lengths,
                   const std::vector<TokenSeq>& targets, Direction direction,
                   const ForwardOptions& options) {
  const auto& c = model.config.decoder;
  const auto& params = model.params;
  const Index batch = encoded.dim(0);
  if (static_cast<Index>(targets.size()) != batch ||
      static_cast<Index>(lengths.size()) != batch) {
    throw DimensionError("decoder: targets/lengths do not match batch");
  }
  const Index blocks = direction == Direction::kLeftToRight ? c.num_blocks_l2r : c.num_blocks_r2l;
  if (direction == Direction::kRightToLeft && !c.has_r2l()) {
    throw ConfigError("right-to-left decoder is disabled");
  }

  Index steps = 1;
  for (const auto& t : targets) steps = std::max<Index>(steps, static_cast<Index>(t.size()) + 1);
  std::vector<int> ids(static_cast<std::size_t>(batch * steps), c.eos());
  for (Index b = 0; b < batch; ++b) {
    const auto& t = targets[static_cast<std::size_t>(b)];
    ids[static_cast<std::size_t>(b * steps)] = c.sos();
    for (std::size_t u = 0; u < t.size(); ++u) {
      const int id = direction == Direction::kLeftToRight ? t[u] : t[t.size() - 1 - u];
      if (id < 0 || id >= c.vocab_size) {
        throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " +
                         std::to_string(c.vocab_size));
      }
      ids[static_cast<std::size_t>(b * steps) + u + 1] = id;
    }
  }

  const std::string s = decoder_stack(direction);
  const Index d = c.model_dim;
  Tensor x = scale(embedding(ids, {batch, steps}, params[s + ".embed"]),
                   std::sqrt(static_cast<double>(d)));
  Array pe({batch, steps, d});
  const Array table = sinusoidal_table(steps, d);
  for (Index b = 0; b < batch; ++b) pe.matrix(batch * steps, d).middleRows(b * steps, steps) = table.rows();
  x = maybe_dropout(add_constant(x, pe), options);

  const AttentionMask self_mask = causal_mask(batch, steps);
  const AttentionMask memory_mask = padding_mask(lengths, steps, encoded.dim(1));
  for (Index i = 0; i < blocks; ++i) {
    const std::string b = s + ".block" + std::to_string(i);
    Tensor h = apply_norm(params, b + ".self_attn.norm", x);
    x = x + maybe_dropout(apply_attention(params, b + ".self_attn", h, h, c.heads, self_mask),
                          options);
    h = apply_norm(params, b + ".cross_attn.norm", x);
    x = x + maybe_dropout(
                apply_attention(params, b + ".cross_attn", h, encoded, c.heads, memory_mask),
                options);
    x = x + feed_forward(params, b + ".ffn", x, false, options);
  }
  return apply_linear(params, s + ".out", apply_norm(params, s + ".final_norm", x));
}

ModelOutputs forward_encoder(const ModelState& model, const FeatureBatch& batch, int factor,
                             const ForwardOptions& options) {
  const auto& spec = model.config.frontend.branch(factor);
  ModelOutputs out;
  out.frontend = frontend_forward(batch, spec, model.config.frontend.use_pos_enc, model.params);
  out.encoded = encode(model, out.frontend.embedding, out.frontend.lengths, options);
  out.ctc_log_probs = ctc_head(model, out.encoded);
  return out;
}

}  // namespace hydra
