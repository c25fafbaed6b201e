#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mug/training/trainer.h"

namespace mug::cli {

// Everything `train` needs. Serialized as one flat object so a run can be replayed from
// config.resolved alone.
struct RunConfig {
  std::size_t dim = 32;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t ffn_dim = 64;
  std::size_t max_length = 130;
  std::size_t tag_hidden = 0;
  std::size_t relation_hidden = 0;
  std::string adapter = "none";
  int tau = structure::kDefaultTau;

  double lr = 5e-5;
  double parser_lr_multiplier = numerics::kParserLrMultiplier;
  std::size_t batch_size = 0;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  double warmup_epochs = 2.0;
  double clip_norm = 1.0;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  bool freeze_adapter = false;
  std::size_t threads = 1;
  std::size_t min_count = 1;

  std::string train;
  std::string dev;
  std::string output;

  structure::StructureConfig structure() const;
  // vocab_size comes from the vocabulary, not the config.
  training::ModelConfig model(std::size_t vocab_size) const;
  training::TrainConfig training() const;
  void validate() const;
};

// Thread count from MUG_THREADS, or 1 when unset. Throws ValidationError on junk.
std::size_t default_threads();

// Defaults, then the flat JSON object `file` (unknown keys and wrong types are rejected), then
// `overrides` keyed like the file. Throws ValidationError.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const std::map<std::string, std::string>& overrides);
std::string to_json(const RunConfig& config);
RunConfig from_json(const std::string& text);

// 13056 → "13,056".
std::string group_thousands(std::size_t value);

// Exit status: 0 success, 1 validation or runtime failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mug::cli
