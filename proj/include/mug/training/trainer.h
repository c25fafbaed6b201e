#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mug/evaluation/evaluation.h"
#include "mug/numerics/tape.h"
#include "mug/training/model.h"

namespace mug::training {

struct JointLoss {
  numerics::Var tagging;  // aspect CE + opinion CE, each a per-token mean
  numerics::Var parsing;  // CE over all n² relation cells, a per-cell mean
  numerics::Var total;    // tagging + parsing
};

JointLoss joint_loss(const ForwardResult& forward, const parser::GoldTargets& gold);

struct TrainConfig {
  double base_lr = 5e-5;
  double parser_lr_multiplier = numerics::kParserLrMultiplier;
  // 0 picks 8 without an adapter and 6 with one.
  std::size_t batch_size = 0;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  double warmup_epochs = 2.0;
  double clip_norm = 1.0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool freeze_adapter = false;
  // Worker threads for per-sentence forward/backward; results are reduced in sentence order.
  std::size_t threads = 1;

  std::size_t effective_batch_size(bool adapted) const;
  void validate() const;
};

// Linear warmup 0 → base over [0, warmup], then linear decay to 0 at max_epochs.
double lr_at(double epoch, const TrainConfig& config);

struct StepRecord {
  std::size_t step = 0;
  double epoch_position = 0.0;
  double encoder_lr = 0.0;
  double adapter_lr = 0.0;
  double parser_lr = 0.0;
  double grad_norm = 0.0;          // before clipping
  double clipped_grad_norm = 0.0;  // after clipping
  double tagging = 0.0;
  double parsing = 0.0;
  double total = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double tagging = 0.0;
  double parsing = 0.0;
  double total = 0.0;
  evaluation::MatchScores dev;
  double lr = 0.0;  // base rate of the last step
};

struct TrainHistory {
  std::string optimizer;
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
  std::size_t best_epoch = 0;
  double best_dev_f1 = 0.0;
  bool stopped_early = false;

  // Comment line with the optimizer, then epoch, L_t, L_p, L, dev-P, dev-R, dev-F1, lr.
  void write_tsv(std::ostream& out) const;
};

// AdamW with per-group learning-rate multipliers; weight decay applies to matrices only.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& config) : config_(config) {}
  void step(const std::vector<numerics::ParamGroup>& groups,
            const std::unordered_map<const numerics::Parameter*, numerics::Tensor>& grads, double base_lr);
  std::size_t steps() const { return t_; }

 private:
  struct Moments {
    numerics::Tensor m, v;
  };
  TrainConfig config_;
  std::size_t t_ = 0;
  std::unordered_map<const numerics::Parameter*, Moments> moments_;
};

evaluation::MatchScores evaluate(const MugModel& model, std::span<const Example> examples);
std::vector<std::vector<Triplet>> predict_all(const MugModel& model, std::span<const Example> examples);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains in place and leaves the best-dev weights in `model`. Throws NumericError on divergence.
TrainHistory train(MugModel& model, std::span<const Example> train_set, std::span<const Example> dev_set,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

// Seeded shuffle, stable sort into length buckets of 8 tokens, fixed-size batches, shuffled batch order.
std::vector<std::vector<std::size_t>> make_batches(std::span<const Example> examples, std::size_t batch_size,
                                                   std::mt19937_64& rng);

}  // namespace mug::training
