#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mug/numerics/params.h"
#include "mug/numerics/tape.h"
#include "mug/types.h"

namespace mug::parser {

enum class Tag : std::uint8_t { kB = 0, kI = 1, kO = 2 };
enum class Relation : std::uint8_t { kNone = 0, kPos = 1, kNeg = 2, kNeu = 3 };

inline constexpr std::size_t kNumTags = 3;
inline constexpr std::size_t kNumRelations = 4;

Relation relation_of(Sentiment s);
std::optional<Sentiment> sentiment_of(Relation r);
char tag_char(Tag t);

enum class Role { kAspect, kOpinion };

struct ParserConfig {
  std::size_t input_dim = 32;
  // Hidden widths of the tagger and biaffine feed-forward layers; 0 means input_dim.
  std::size_t tag_hidden = 0;
  std::size_t relation_hidden = 0;

  std::size_t tag_width() const { return tag_hidden == 0 ? input_dim : tag_hidden; }
  std::size_t relation_width() const { return relation_hidden == 0 ? input_dim : relation_hidden; }
};

struct TagSequence {
  numerics::Tensor probs;  // n × 3 over {B, I, O}
  std::vector<Tag> tags;
};

// n×n grid of distributions over {NONE, POS, NEG, NEU}; cell (i, j) is row i·n + j.
class SentimentRelationMap {
 public:
  SentimentRelationMap() = default;
  // Labels are the argmax of each cell (lowest label index on ties).
  static SentimentRelationMap from_probs(std::size_t n, numerics::Tensor probs);
  // One-hot distributions for the given labels.
  static SentimentRelationMap from_labels(std::size_t n, std::vector<Relation> labels);

  std::size_t size() const { return n_; }
  Relation label(std::size_t i, std::size_t j) const { return labels_[i * n_ + j]; }
  double prob(std::size_t i, std::size_t j, Relation r) const {
    return probs_[(i * n_ + j) * kNumRelations + static_cast<std::size_t>(r)];
  }
  const numerics::Tensor& probs() const { return probs_; }
  const std::vector<Relation>& labels() const { return labels_; }
  SentimentRelationMap transposed() const;

 private:
  std::size_t n_ = 0;
  numerics::Tensor probs_;
  std::vector<Relation> labels_;
};

class TripletParser {
 public:
  struct FeedForward {
    numerics::Parameter w1, b1, w2, b2;
  };
  struct Biaffine {
    numerics::Parameter head_w, head_b;  // r^(h) = ReLU(h·head_w + head_b)
    numerics::Parameter dep_w, dep_b;    // r^(d) = ReLU(h·dep_w + dep_b)
    numerics::Parameter bilinear;        // k × (4·k), one k×k block per label
    numerics::Parameter head_out;        // k × 4
    numerics::Parameter dep_out;         // k × 4
    numerics::Parameter bias;            // 4
  };

  TripletParser(const ParserConfig& config, numerics::Initializer& init);

  const ParserConfig& config() const { return config_; }

  // n × 3 tag distributions for the content hidden states.
  numerics::Var tag_probs(numerics::Tape& tape, numerics::Var content, Role role) const;
  // (n·n) × 4 relation distributions, row i·n + j for the ordered pair (i, j).
  numerics::Var relation_probs(numerics::Tape& tape, numerics::Var content) const;

  TagSequence tag(numerics::Tape& tape, numerics::Var content, Role role) const;
  SentimentRelationMap score_sentiment(numerics::Tape& tape, numerics::Var content) const;

  numerics::ParamGroup group();
  FeedForward& tagger(Role role) { return role == Role::kAspect ? aspect_ : opinion_; }
  Biaffine& scorer() { return scorer_; }

  static std::size_t param_count(const ParserConfig& config);

 private:
  ParserConfig config_;
  FeedForward aspect_;
  FeedForward opinion_;
  Biaffine scorer_;
};

// Argmax tag per row of an n × 3 distribution.
std::vector<Tag> argmax_tags(const numerics::Tensor& probs);

// Spans from BIO tags; a stray I (after O or at the start) opens a span.
std::vector<Span> decode_bio(std::span<const Tag> tags);

// Majority vote over cells (i, j) and (j, i), i ∈ aspect, j ∈ opinion, for every distinct
// aspect/opinion span pair. NONE loses ties with sentiments; tied sentiments fall back to
// the larger summed probability over the voted cells, then POS > NEG > NEU.
std::vector<Triplet> decode_grid(std::span<const Span> aspects, std::span<const Span> opinions,
                                 const SentimentRelationMap& map);

struct GoldTargets {
  std::vector<Tag> aspect_tags;
  std::vector<Tag> opinion_tags;
  std::vector<Relation> relations;  // n·n, row-major
  std::vector<std::string> warnings;
};

GoldTargets build_gold(std::size_t n, std::span<const Triplet> triplets);

}  // namespace mug::parser
