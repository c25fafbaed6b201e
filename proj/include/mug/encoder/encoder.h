#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mug/numerics/params.h"
#include "mug/numerics/tape.h"
#include "mug/structure/distance.h"
#include "mug/types.h"

namespace mug::encoder {

// Reserved vocabulary ids shared with the data module.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kStartId = 2;
inline constexpr TokenId kEndId = 3;
inline constexpr std::size_t kReservedIds = 4;

struct EncoderConfig {
  std::size_t vocab_size = 64;
  std::size_t dim = 32;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t ffn_dim = 64;
  // Includes the two augmentation positions.
  std::size_t max_length = 130;
  double layer_norm_eps = 1e-12;
  structure::StructureConfig adapter;

  std::size_t head_dim() const { return dim / heads; }
  bool adapted() const { return adapter.kind != structure::StructureKind::kNone; }
  void validate() const;
};

struct EncodedSequence {
  // (m × D) over [start] t_1 … t_n [end] plus any padding rows.
  numerics::Var hidden;
  // Rows 1..n of `hidden`.
  numerics::Var content;
  std::size_t length = 0;
};

class Encoder {
 public:
  struct Block {
    numerics::Parameter wq, bq, wk, bk, wv, bv, wo, bo;
    numerics::Parameter ln1_gain, ln1_bias;
    numerics::Parameter w1, b1, w2, b2;
    numerics::Parameter ln2_gain, ln2_bias;
    // (2τ+1) × head_dim, shared by every head of this block. Empty without an adapter.
    numerics::Parameter relations;
  };

  Encoder(const EncoderConfig& config, numerics::Initializer& init);

  const EncoderConfig& config() const { return config_; }

  // Token + position embeddings of [start] tokens [end], padded with kPadId rows up to
  // `padded_length` when that is larger.
  numerics::Var embed(numerics::Tape& tape, std::span<const TokenId> tokens, std::size_t padded_length = 0) const;

  // Pre-softmax logits of one head: raw map, plus the structured map when `distances` is given.
  numerics::Var attention_scores(numerics::Tape& tape, std::size_t layer, numerics::Var x, std::size_t head,
                                 const structure::DistanceMatrix* distances) const;
  // The structured attention map of one head on its own.
  numerics::Var structured_scores(numerics::Tape& tape, std::size_t layer, numerics::Var x, std::size_t head,
                                  const structure::DistanceMatrix& distances) const;

  // `distances`, when given, covers the n+2 augmented positions (or the padded length).
  EncodedSequence encode(numerics::Tape& tape, std::span<const TokenId> tokens,
                         const structure::DistanceMatrix* distances, std::size_t padded_length = 0) const;

  numerics::ParamGroup encoder_group();
  numerics::ParamGroup adapter_group();

  Block& block(std::size_t layer) { return blocks_.at(layer); }
  const Block& block(std::size_t layer) const { return blocks_.at(layer); }
  numerics::Parameter& token_embedding() { return token_embedding_; }
  numerics::Parameter& position_embedding() { return position_embedding_; }

 private:
  std::vector<std::size_t> relation_index(const structure::DistanceMatrix* distances, std::size_t m) const;
  numerics::Var block_forward(numerics::Tape& tape, const Block& block, numerics::Var x,
                              std::span<const std::size_t> index, std::size_t valid) const;

  EncoderConfig config_;
  numerics::Parameter token_embedding_;
  numerics::Parameter position_embedding_;
  std::vector<Block> blocks_;
};

enum class ModelVariant { kBare, kStructAdapter, kStructLayer };

struct ParamCount {
  std::size_t base = 0;
  std::size_t increment = 0;
  std::size_t total() const { return base + increment; }
};

// Encoder weights excluding relation tables.
std::size_t encoder_param_count(const EncoderConfig& config);
// L · (2τ+1) · d.
std::size_t adapter_param_increment(std::size_t layers, int tau, std::size_t head_dim);
// k · (4(D·D+D) + (D·F+F) + (F·D+D) + 2·2D).
std::size_t struct_layer_param_increment(std::size_t dim, std::size_t ffn_dim, std::size_t stacked_layers);

// `base` is the bare model (encoder + parser); `increment` is what the variant adds.
ParamCount count_params(const EncoderConfig& config, std::size_t parser_params, ModelVariant variant,
                        std::size_t stacked_layers = 2);

}  // namespace mug::encoder
