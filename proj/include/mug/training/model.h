#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mug/data/corpus.h"
#include "mug/encoder/encoder.h"
#include "mug/numerics/tape.h"
#include "mug/parser/parser.h"
#include "mug/structure/distance.h"

namespace mug::training {

struct ModelConfig {
  encoder::EncoderConfig encoder;
  // Parser hidden widths; 0 means the encoder width.
  std::size_t tag_hidden = 0;
  std::size_t relation_hidden = 0;

  parser::ParserConfig parser_config() const { return {encoder.dim, tag_hidden, relation_hidden}; }
};

// One sentence ready for the model.
struct Example {
  std::vector<TokenId> ids;
  // Augmented (n+2)² distances; present exactly when the adapter is enabled.
  std::optional<structure::DistanceMatrix> distances;
  parser::GoldTargets gold;
  std::vector<Triplet> triplets;

  std::size_t size() const { return ids.size(); }
};

Example make_example(const data::Sentence& sentence, const data::Vocabulary& vocab,
                     const structure::StructureConfig& structure);
std::vector<Example> make_examples(std::span<const data::Sentence> sentences, const data::Vocabulary& vocab,
                                   const structure::StructureConfig& structure);

struct ForwardResult {
  numerics::Var aspect;     // n × 3
  numerics::Var opinion;    // n × 3
  numerics::Var relations;  // (n·n) × 4
};

struct Prediction {
  parser::TagSequence aspect;
  parser::TagSequence opinion;
  parser::SentimentRelationMap relations;
  std::vector<Triplet> triplets;
};

class MugModel {
 public:
  MugModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  encoder::Encoder& encoder() { return encoder_; }
  const encoder::Encoder& encoder() const { return encoder_; }
  parser::TripletParser& parser() { return parser_; }

  ForwardResult forward(numerics::Tape& tape, const Example& example) const;
  Prediction predict(const Example& example) const;

  // Encoder, adapter (possibly empty) and parser groups, in that order.
  std::vector<numerics::ParamGroup> param_groups();
  std::vector<numerics::Parameter*> parameters();
  std::size_t parameter_count();

  std::vector<numerics::Tensor> snapshot();
  void restore(const std::vector<numerics::Tensor>& values);

  // Versioned little-endian dump: "MUGW", u32 version, u32 sections, then per section
  // u32 name length, name, u32 rank, u64 dims, f64 values.
  void save(const std::filesystem::path& path);
  // Names and shapes must match this model exactly.
  void load(const std::filesystem::path& path);

 private:
  ModelConfig config_;
  encoder::Encoder encoder_;
  parser::TripletParser parser_;
};

}  // namespace mug::training
