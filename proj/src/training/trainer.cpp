#include "mug/training/trainer.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <thread>

#include "mug/errors.h"
#include "mug/numerics/ops.h"

namespace mug::training {

using numerics::Parameter;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;
namespace ops = numerics;

namespace {

std::vector<std::size_t> as_indices(std::span<const parser::Tag> tags) {
  std::vector<std::size_t> out(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) out[i] = static_cast<std::size_t>(tags[i]);
  return out;
}

std::vector<std::size_t> as_indices(std::span<const parser::Relation> labels) {
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = static_cast<std::size_t>(labels[i]);
  return out;
}

Var mean_ce(Var probs, std::vector<std::size_t> targets) {
  std::vector<std::uint8_t> mask(targets.size(), 1);
  return ops::cross_entropy(probs, std::move(targets), std::move(mask));
}

// Shortest round-trip decimal form.
std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct SentenceStep {
  double tagging = 0.0;  // already weighted by the sentence's share of the batch
  double parsing = 0.0;
  std::vector<std::optional<Tensor>> grads;  // aligned with the trainable parameter list
};

SentenceStep sentence_step(const MugModel& model, const Example& example, double tag_weight, double parse_weight,
                           std::span<Parameter* const> params) {
  Tape tape;
  const JointLoss loss = joint_loss(model.forward(tape, example), example.gold);
  const Var weighted = ops::add(ops::scale(loss.tagging, tag_weight), ops::scale(loss.parsing, parse_weight));
  tape.backward(weighted);
  SentenceStep out;
  out.tagging = loss.tagging.value().item() * tag_weight;
  out.parsing = loss.parsing.value().item() * parse_weight;
  out.grads.resize(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (const Tensor* g = tape.grad(*params[k])) out.grads[k] = *g;
  }
  return out;
}

}  // namespace

JointLoss joint_loss(const ForwardResult& forward, const parser::GoldTargets& gold) {
  const Var aspect = mean_ce(forward.aspect, as_indices(gold.aspect_tags));
  const Var opinion = mean_ce(forward.opinion, as_indices(gold.opinion_tags));
  const Var tagging = ops::add(aspect, opinion);
  const Var parsing = mean_ce(forward.relations, as_indices(gold.relations));
  return {tagging, parsing, ops::add(tagging, parsing)};
}

std::size_t TrainConfig::effective_batch_size(bool adapted) const {
  if (batch_size > 0) return batch_size;
  return adapted ? 6 : 8;
}

void TrainConfig::validate() const {
  if (!(base_lr > 0.0) || !(parser_lr_multiplier > 0.0)) throw ValidationError("train: learning rates must be positive");
  if (max_epochs == 0) throw ValidationError("train: max_epochs must be positive");
  if (patience == 0 || patience > max_epochs) throw ValidationError("train: patience must lie in [1, max_epochs]");
  if (warmup_epochs < 0.0 || warmup_epochs > static_cast<double>(max_epochs)) {
    throw ValidationError("train: warmup must lie in [0, max_epochs]");
  }
  if (!(clip_norm > 0.0)) throw ValidationError("train: clip norm must be positive");
  if (weight_decay < 0.0) throw ValidationError("train: weight decay must be non-negative");
  if (threads == 0) throw ValidationError("train: at least one thread is required");
}

double lr_at(double epoch, const TrainConfig& c) {
  const double end = static_cast<double>(c.max_epochs);
  const double t = std::clamp(epoch, 0.0, end);
  if (t < c.warmup_epochs) return c.base_lr * t / c.warmup_epochs;
  if (end <= c.warmup_epochs) return c.base_lr;
  return c.base_lr * (end - t) / (end - c.warmup_epochs);
}

void TrainHistory::write_tsv(std::ostream& out) const {
  out << "# optimizer: " << optimizer << '\n';
  out << "epoch\tL_t\tL_p\tL\tdev_P\tdev_R\tdev_F1\tlr\n";
  for (const EpochRecord& r : epochs) {
    out << r.epoch << '\t' << number(r.tagging) << '\t' << number(r.parsing) << '\t' << number(r.total) << '\t'
        << number(r.dev.precision()) << '\t' << number(r.dev.recall()) << '\t' << number(r.dev.f1()) << '\t'
        << number(r.lr) << '\n';
  }
}

void AdamW::step(const std::vector<numerics::ParamGroup>& groups,
                 const std::unordered_map<const Parameter*, Tensor>& grads, double base_lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (const numerics::ParamGroup& group : groups) {
    const double lr = base_lr * group.lr_multiplier;
    for (Parameter* p : group.params) {
      const auto g = grads.find(p);
      if (g == grads.end()) continue;
      auto [it, fresh] = moments_.try_emplace(p);
      if (fresh) it->second = {Tensor(p->value.shape()), Tensor(p->value.shape())};
      auto m = it->second.m.data();
      auto v = it->second.v.data();
      auto w = p->value.data();
      const auto gd = g->second.data();
      const double decay = p->value.rank() >= 2 ? config_.weight_decay : 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * gd[k];
        v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * gd[k] * gd[k];
        const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.adam_eps);
        w[k] -= lr * (update + decay * w[k]);
      }
    }
  }
}

std::vector<std::vector<Triplet>> predict_all(const MugModel& model, std::span<const Example> examples) {
  std::vector<std::vector<Triplet>> out;
  out.reserve(examples.size());
  for (const Example& e : examples) out.push_back(model.predict(e).triplets);
  return out;
}

evaluation::MatchScores evaluate(const MugModel& model, std::span<const Example> examples) {
  evaluation::MatchScores total;
  for (const Example& e : examples) total += evaluation::exact_match(model.predict(e).triplets, e.triplets);
  return total;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const Example> examples, std::size_t batch_size,
                                                   std::mt19937_64& rng) {
  if (batch_size == 0) throw ValidationError("batches: size must be positive");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return examples[a].size() / 8 < examples[b].size() / 8; });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), at + batch_size)));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

TrainHistory train(MugModel& model, std::span<const Example> train_set, std::span<const Example> dev_set,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty() || dev_set.empty()) throw ValidationError("train: train and dev splits must be nonempty");
  const bool adapted = model.config().encoder.adapted();
  const std::size_t batch_size = config.effective_batch_size(adapted);

  std::vector<numerics::ParamGroup> groups;
  for (numerics::ParamGroup& g : model.param_groups()) {
    if (g.kind == numerics::GroupKind::kParser) g.lr_multiplier = config.parser_lr_multiplier;
    if (g.kind == numerics::GroupKind::kAdapter && config.freeze_adapter) continue;
    if (!g.params.empty()) groups.push_back(std::move(g));
  }
  std::vector<Parameter*> params;
  for (const auto& g : groups) params.insert(params.end(), g.params.begin(), g.params.end());

  TrainHistory history;
  history.optimizer = "AdamW beta1=" + number(config.beta1) + " beta2=" + number(config.beta2) +
                      " eps=" + number(config.adam_eps) + " weight_decay=" + number(config.weight_decay) +
                      " (matrices only, decoupled) clip_norm=" + number(config.clip_norm) + " base_lr=" +
                      number(config.base_lr) + " parser_lr_multiplier=" + number(config.parser_lr_multiplier) +
                      " batch_size=" + std::to_string(batch_size) + " seed=" + std::to_string(config.seed) +
                      (config.freeze_adapter ? " adapter=frozen" : "");

  AdamW optimizer(config);
  std::mt19937_64 rng(config.seed);
  std::vector<Tensor> best = model.snapshot();
  std::size_t since_best = 0;
  const MugModel& frozen = model;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto batches = make_batches(train_set, batch_size, rng);
    EpochRecord record;
    record.epoch = epoch + 1;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      double tokens = 0.0, cells = 0.0;
      for (std::size_t i : batch) {
        const double n = static_cast<double>(train_set[i].size());
        tokens += n;
        cells += n * n;
      }
      std::vector<SentenceStep> results(batch.size());
      auto work = [&](std::size_t k) {
        const Example& e = train_set[batch[k]];
        const double n = static_cast<double>(e.size());
        results[k] = sentence_step(frozen, e, n / tokens, n * n / cells, params);
      };
      try {
        const std::size_t workers = std::min(config.threads, batch.size());
        if (workers <= 1) {
          for (std::size_t k = 0; k < batch.size(); ++k) work(k);
        } else {
          std::vector<std::exception_ptr> errors(workers);
          std::vector<std::thread> pool;
          for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
              try {
                for (std::size_t k = w; k < batch.size(); k += workers) work(k);
              } catch (...) {
                errors[w] = std::current_exception();
              }
            });
          }
          for (auto& t : pool) t.join();
          for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        }
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(b + 1) + ": " + e.what());
      }

      // Reduce in sentence order so the sum does not depend on the thread count.
      StepRecord step;
      std::vector<std::optional<Tensor>> summed(params.size());
      for (SentenceStep& r : results) {
        step.tagging += r.tagging;
        step.parsing += r.parsing;
        for (std::size_t k = 0; k < params.size(); ++k) {
          if (!r.grads[k]) continue;
          if (!summed[k]) {
            summed[k] = std::move(r.grads[k]);
            continue;
          }
          auto acc = summed[k]->data();
          const auto add = r.grads[k]->data();
          for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += add[c];
        }
      }
      step.total = step.tagging + step.parsing;

      double sq = 0.0;
      for (const auto& g : summed)
        if (g)
          for (double v : g->data()) sq += v * v;
      step.grad_norm = std::sqrt(sq);
      if (!std::isfinite(step.total) || !std::isfinite(step.grad_norm)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(b + 1) + ": non-finite loss or gradient");
      }
      step.clipped_grad_norm = step.grad_norm;
      if (step.grad_norm > config.clip_norm) {
        const double factor = config.clip_norm / step.grad_norm;
        sq = 0.0;
        for (auto& g : summed)
          if (g)
            for (double& v : g->data()) {
              v *= factor;
              sq += v * v;
            }
        step.clipped_grad_norm = std::sqrt(sq);
      }
      std::unordered_map<const Parameter*, Tensor> grads;
      for (std::size_t k = 0; k < params.size(); ++k)
        if (summed[k]) grads.emplace(params[k], std::move(*summed[k]));

      step.step = history.steps.size() + 1;
      step.epoch_position = static_cast<double>(epoch) + (static_cast<double>(b) + 0.5) / static_cast<double>(batches.size());
      const double lr = lr_at(step.epoch_position, config);
      step.encoder_lr = lr;
      step.adapter_lr = adapted && !config.freeze_adapter ? lr : 0.0;
      step.parser_lr = lr * config.parser_lr_multiplier;
      optimizer.step(groups, grads, lr);
      history.steps.push_back(step);

      record.tagging += step.tagging;
      record.parsing += step.parsing;
      record.lr = lr;
    }
    record.tagging /= static_cast<double>(batches.size());
    record.parsing /= static_cast<double>(batches.size());
    record.total = record.tagging + record.parsing;
    record.dev = evaluate(model, dev_set);
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (history.best_epoch == 0 || record.dev.f1() > history.best_dev_f1) {
      history.best_epoch = record.epoch;
      history.best_dev_f1 = record.dev.f1();
      best = model.snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      history.stopped_early = record.epoch < config.max_epochs;
      break;
    }
  }
  model.restore(best);
  return history;
}

}  // namespace mug::training
