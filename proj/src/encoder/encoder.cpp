#include "mug/encoder/encoder.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mug/errors.h"
#include "mug/numerics/ops.h"

namespace mug::encoder {

using numerics::Parameter;
using numerics::Tape;
using numerics::Var;
namespace ops = numerics;

void EncoderConfig::validate() const {
  if (heads == 0 || dim % heads != 0) {
    throw ValidationError("encoder: dim " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) +
                          " heads");
  }
  if (layers < 1) throw ValidationError("encoder: at least one layer is required");
  if (max_length < 3) throw ValidationError("encoder: max_length must be at least 3");
  if (vocab_size <= kReservedIds) throw ValidationError("encoder: vocabulary has no content ids");
  if (ffn_dim == 0) throw ValidationError("encoder: ffn_dim must be positive");
  if (adapted()) adapter.validate();
}

Encoder::Encoder(const EncoderConfig& config, numerics::Initializer& init) : config_(config) {
  config_.validate();
  const std::size_t d_model = config_.dim, ffn = config_.ffn_dim;
  token_embedding_ = init.normal("encoder.token_embedding", {config_.vocab_size, d_model});
  position_embedding_ = init.normal("encoder.position_embedding", {config_.max_length, d_model});
  blocks_.reserve(config_.layers);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    Block b;
    b.wq = init.normal(p + "wq", {d_model, d_model});
    b.bq = init.zeros(p + "bq", {d_model});
    b.wk = init.normal(p + "wk", {d_model, d_model});
    b.bk = init.zeros(p + "bk", {d_model});
    b.wv = init.normal(p + "wv", {d_model, d_model});
    b.bv = init.zeros(p + "bv", {d_model});
    b.wo = init.normal(p + "wo", {d_model, d_model});
    b.bo = init.zeros(p + "bo", {d_model});
    b.ln1_gain = init.ones(p + "ln1_gain", {d_model});
    b.ln1_bias = init.zeros(p + "ln1_bias", {d_model});
    b.w1 = init.normal(p + "w1", {d_model, ffn});
    b.b1 = init.zeros(p + "b1", {ffn});
    b.w2 = init.normal(p + "w2", {ffn, d_model});
    b.b2 = init.zeros(p + "b2", {d_model});
    b.ln2_gain = init.ones(p + "ln2_gain", {d_model});
    b.ln2_bias = init.zeros(p + "ln2_bias", {d_model});
    if (config_.adapted()) {
      // Zero relations: training starts from the unadapted model.
      b.relations = init.zeros("adapter.layer" + std::to_string(l) + ".relations",
                               {config_.adapter.relation_rows(), config_.head_dim()});
    }
    blocks_.push_back(std::move(b));
  }
}

Var Encoder::embed(Tape& tape, std::span<const TokenId> tokens, std::size_t padded_length) const {
  const std::size_t n = tokens.size();
  const std::size_t m = std::max(n + 2, padded_length);
  if (m > config_.max_length) {
    throw ValidationError("encoder: sequence of " + std::to_string(n) + " tokens exceeds max_length " +
                          std::to_string(config_.max_length));
  }
  std::vector<std::size_t> ids;
  ids.reserve(m);
  ids.push_back(kStartId);
  for (TokenId t : tokens) {
    if (t >= config_.vocab_size) throw IndexError("encoder: token id " + std::to_string(t) + " not in vocabulary");
    ids.push_back(t);
  }
  ids.push_back(kEndId);
  ids.resize(m, kPadId);
  std::vector<std::size_t> positions(m);
  for (std::size_t i = 0; i < m; ++i) positions[i] = i;
  return ops::add(ops::gather_rows(tape.param(token_embedding_), std::move(ids)),
                  ops::gather_rows(tape.param(position_embedding_), std::move(positions)));
}

std::vector<std::size_t> Encoder::relation_index(const structure::DistanceMatrix* distances, std::size_t m) const {
  if (distances == nullptr) return {};
  if (!config_.adapted()) throw ValidationError("encoder: distances given but the adapter is disabled");
  if (distances->tau() != config_.adapter.tau) throw ShapeError("encoder: distance tau differs from adapter tau");
  if (distances->size() == m) return distances->relation_index();
  if (distances->size() < m) return distances->padded(m).relation_index();
  throw ShapeError("encoder: distance matrix of size " + std::to_string(distances->size()) + " for " +
                   std::to_string(m) + " positions");
}

Var Encoder::attention_scores(Tape& tape, std::size_t layer, Var x, std::size_t head,
                              const structure::DistanceMatrix* distances) const {
  const Block& b = block(layer);
  const std::size_t d = config_.head_dim();
  if (head >= config_.heads) throw IndexError("encoder: head out of range");
  const std::size_t m = x.value().rows();
  const auto index = relation_index(distances, m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Var q = ops::slice_cols(ops::linear(x, tape.param(b.wq), tape.param(b.bq)), head * d, d);
  Var k = ops::slice_cols(ops::linear(x, tape.param(b.wk), tape.param(b.bk)), head * d, d);
  if (index.empty()) return ops::attention_scores(q, k, scale);
  return ops::attention_scores(q, k, scale, tape.param(b.relations), index);
}

Var Encoder::structured_scores(Tape& tape, std::size_t layer, Var x, std::size_t head,
                               const structure::DistanceMatrix& distances) const {
  const Block& b = block(layer);
  const std::size_t d = config_.head_dim();
  if (head >= config_.heads) throw IndexError("encoder: head out of range");
  const auto index = relation_index(&distances, x.value().rows());
  Var q = ops::slice_cols(ops::linear(x, tape.param(b.wq), tape.param(b.bq)), head * d, d);
  return ops::structured_scores(q, tape.param(b.relations), index, 1.0 / std::sqrt(static_cast<double>(d)));
}

Var Encoder::block_forward(Tape& tape, const Block& b, Var x, std::span<const std::size_t> index,
                           std::size_t valid) const {
  const std::size_t d = config_.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Var q_all = ops::linear(x, tape.param(b.wq), tape.param(b.bq));
  Var k_all = ops::linear(x, tape.param(b.wk), tape.param(b.bk));
  Var v_all = ops::linear(x, tape.param(b.wv), tape.param(b.bv));
  std::vector<Var> heads;
  heads.reserve(config_.heads);
  for (std::size_t h = 0; h < config_.heads; ++h) {
    Var q = ops::slice_cols(q_all, h * d, d);
    Var k = ops::slice_cols(k_all, h * d, d);
    Var scores = index.empty() ? ops::attention_scores(q, k, scale)
                               : ops::attention_scores(q, k, scale, tape.param(b.relations), index);
    heads.push_back(ops::matmul(ops::softmax(scores, valid), ops::slice_cols(v_all, h * d, d)));
  }
  Var attended = ops::linear(ops::concat_cols(heads), tape.param(b.wo), tape.param(b.bo));
  Var h1 = ops::layer_norm(ops::add(x, attended), tape.param(b.ln1_gain), tape.param(b.ln1_bias),
                           config_.layer_norm_eps);
  Var ff = ops::linear(ops::gelu(ops::linear(h1, tape.param(b.w1), tape.param(b.b1))), tape.param(b.w2),
                       tape.param(b.b2));
  return ops::layer_norm(ops::add(h1, ff), tape.param(b.ln2_gain), tape.param(b.ln2_bias), config_.layer_norm_eps);
}

EncodedSequence Encoder::encode(Tape& tape, std::span<const TokenId> tokens, const structure::DistanceMatrix* distances,
                                std::size_t padded_length) const {
  if (tokens.empty()) throw ValidationError("encoder: empty token sequence");
  Var x = embed(tape, tokens, padded_length);
  const std::size_t m = x.value().rows();
  const std::size_t valid = tokens.size() + 2;
  const auto index = relation_index(distances, m);
  for (const Block& b : blocks_) x = block_forward(tape, b, x, index, valid);
  return EncodedSequence{x, ops::slice_rows(x, 1, tokens.size()), tokens.size()};
}

numerics::ParamGroup Encoder::encoder_group() {
  numerics::ParamGroup g{numerics::GroupKind::kEncoder, 1.0, {}};
  g.add(token_embedding_);
  g.add(position_embedding_);
  for (Block& b : blocks_) {
    for (Parameter* p : {&b.wq, &b.bq, &b.wk, &b.bk, &b.wv, &b.bv, &b.wo, &b.bo, &b.ln1_gain, &b.ln1_bias, &b.w1,
                         &b.b1, &b.w2, &b.b2, &b.ln2_gain, &b.ln2_bias}) {
      g.add(*p);
    }
  }
  return g;
}

numerics::ParamGroup Encoder::adapter_group() {
  numerics::ParamGroup g{numerics::GroupKind::kAdapter, 1.0, {}};
  if (config_.adapted()) {
    for (Block& b : blocks_) g.add(b.relations);
  }
  return g;
}

std::size_t encoder_param_count(const EncoderConfig& c) {
  const std::size_t d = c.dim, f = c.ffn_dim;
  const std::size_t per_block = 4 * (d * d + d) + (d * f + f) + (f * d + d) + 2 * 2 * d;
  return c.vocab_size * d + c.max_length * d + c.layers * per_block;
}

std::size_t adapter_param_increment(std::size_t layers, int tau, std::size_t head_dim) {
  return layers * static_cast<std::size_t>(2 * tau + 1) * head_dim;
}

std::size_t struct_layer_param_increment(std::size_t dim, std::size_t ffn_dim, std::size_t stacked_layers) {
  const std::size_t attention = 4 * (dim * dim + dim);
  const std::size_t feed_forward = (dim * ffn_dim + ffn_dim) + (ffn_dim * dim + dim);
  const std::size_t norms = 2 * 2 * dim;
  return stacked_layers * (attention + feed_forward + norms);
}

ParamCount count_params(const EncoderConfig& config, std::size_t parser_params, ModelVariant variant,
                        std::size_t stacked_layers) {
  ParamCount count{encoder_param_count(config) + parser_params, 0};
  switch (variant) {
    case ModelVariant::kBare:
      break;
    case ModelVariant::kStructAdapter:
      count.increment = adapter_param_increment(config.layers, config.adapter.tau, config.head_dim());
      break;
    case ModelVariant::kStructLayer:
      count.increment = struct_layer_param_increment(config.dim, config.ffn_dim, stacked_layers);
      break;
  }
  return count;
}

}  // namespace mug::encoder
