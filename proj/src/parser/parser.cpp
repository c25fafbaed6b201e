#include "mug/parser/parser.h"

#include <algorithm>
#include <array>
#include <string>

#include "mug/errors.h"
#include "mug/numerics/ops.h"

namespace mug::parser {

using numerics::Tape;
using numerics::Tensor;
using numerics::Var;
namespace ops = numerics;

Relation relation_of(Sentiment s) {
  switch (s) {
    case Sentiment::kPositive: return Relation::kPos;
    case Sentiment::kNegative: return Relation::kNeg;
    case Sentiment::kNeutral: return Relation::kNeu;
  }
  return Relation::kNone;
}

std::optional<Sentiment> sentiment_of(Relation r) {
  switch (r) {
    case Relation::kPos: return Sentiment::kPositive;
    case Relation::kNeg: return Sentiment::kNegative;
    case Relation::kNeu: return Sentiment::kNeutral;
    case Relation::kNone: break;
  }
  return std::nullopt;
}

char tag_char(Tag t) {
  switch (t) {
    case Tag::kB: return 'B';
    case Tag::kI: return 'I';
    case Tag::kO: return 'O';
  }
  return '?';
}

// ---- SentimentRelationMap --------------------------------------------------

SentimentRelationMap SentimentRelationMap::from_probs(std::size_t n, Tensor probs) {
  if (probs.rank() != 2 || probs.rows() != n * n || probs.cols() != kNumRelations) {
    throw ShapeError("relation map: expected (n*n) x 4 probabilities, got " + numerics::shape_string(probs.shape()));
  }
  SentimentRelationMap map;
  map.n_ = n;
  map.labels_.resize(n * n);
  for (std::size_t c = 0; c < n * n; ++c) {
    const auto row = probs.row(c);
    map.labels_[c] = static_cast<Relation>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  map.probs_ = std::move(probs);
  return map;
}

SentimentRelationMap SentimentRelationMap::from_labels(std::size_t n, std::vector<Relation> labels) {
  if (labels.size() != n * n) throw ShapeError("relation map: expected n*n labels");
  Tensor probs(numerics::Shape{n * n, kNumRelations}, 0.0);
  for (std::size_t c = 0; c < labels.size(); ++c) probs.at(c, static_cast<std::size_t>(labels[c])) = 1.0;
  SentimentRelationMap map;
  map.n_ = n;
  map.probs_ = std::move(probs);
  map.labels_ = std::move(labels);
  return map;
}

SentimentRelationMap SentimentRelationMap::transposed() const {
  SentimentRelationMap t;
  t.n_ = n_;
  t.probs_ = Tensor(probs_.shape());
  t.labels_.resize(labels_.size());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) {
      t.labels_[j * n_ + i] = labels_[i * n_ + j];
      for (std::size_t l = 0; l < kNumRelations; ++l) t.probs_.at(j * n_ + i, l) = probs_.at(i * n_ + j, l);
    }
  return t;
}

// ---- TripletParser ---------------------------------------------------------

TripletParser::TripletParser(const ParserConfig& config, numerics::Initializer& init) : config_(config) {
  const std::size_t d = config_.input_dim, t = config_.tag_width(), k = config_.relation_width();
  if (d == 0 || t == 0 || k == 0) throw ValidationError("parser: widths must be positive");
  auto feed_forward = [&](const std::string& prefix) {
    FeedForward ff;
    ff.w1 = init.normal(prefix + "w1", {d, t});
    ff.b1 = init.zeros(prefix + "b1", {t});
    ff.w2 = init.normal(prefix + "w2", {t, kNumTags});
    ff.b2 = init.zeros(prefix + "b2", {kNumTags});
    return ff;
  };
  aspect_ = feed_forward("parser.aspect.");
  opinion_ = feed_forward("parser.opinion.");
  scorer_.head_w = init.normal("parser.scorer.head_w", {d, k});
  scorer_.head_b = init.zeros("parser.scorer.head_b", {k});
  scorer_.dep_w = init.normal("parser.scorer.dep_w", {d, k});
  scorer_.dep_b = init.zeros("parser.scorer.dep_b", {k});
  scorer_.bilinear = init.normal("parser.scorer.bilinear", {k, kNumRelations * k});
  scorer_.head_out = init.normal("parser.scorer.head_out", {k, kNumRelations});
  scorer_.dep_out = init.normal("parser.scorer.dep_out", {k, kNumRelations});
  scorer_.bias = init.zeros("parser.scorer.bias", {kNumRelations});
}

Var TripletParser::tag_probs(Tape& tape, Var content, Role role) const {
  const FeedForward& ff = role == Role::kAspect ? aspect_ : opinion_;
  if (content.value().rank() != 2 || content.value().cols() != config_.input_dim) {
    throw ShapeError("tagger: hidden states " + numerics::shape_string(content.shape()) + " for input width " +
                     std::to_string(config_.input_dim));
  }
  Var hidden = ops::relu(ops::linear(content, tape.param(ff.w1), tape.param(ff.b1)));
  return ops::softmax(ops::linear(hidden, tape.param(ff.w2), tape.param(ff.b2)));
}

Var TripletParser::relation_probs(Tape& tape, Var content) const {
  if (content.value().rank() != 2 || content.value().cols() != config_.input_dim) {
    throw ShapeError("scorer: hidden states " + numerics::shape_string(content.shape()) + " for input width " +
                     std::to_string(config_.input_dim));
  }
  const Biaffine& s = scorer_;
  Var head = ops::relu(ops::linear(content, tape.param(s.head_w), tape.param(s.head_b)));
  Var dep = ops::relu(ops::linear(content, tape.param(s.dep_w), tape.param(s.dep_b)));
  Var bilinear = ops::pair_bilinear(ops::matmul(head, tape.param(s.bilinear)), dep, kNumRelations);
  Var unary = ops::pair_sum(ops::matmul(head, tape.param(s.head_out)), ops::matmul(dep, tape.param(s.dep_out)));
  return ops::softmax(ops::add_row(ops::add(bilinear, unary), tape.param(s.bias)));
}

TagSequence TripletParser::tag(Tape& tape, Var content, Role role) const {
  Tensor probs = tag_probs(tape, content, role).value();
  std::vector<Tag> tags = argmax_tags(probs);
  return TagSequence{std::move(probs), std::move(tags)};
}

SentimentRelationMap TripletParser::score_sentiment(Tape& tape, Var content) const {
  return SentimentRelationMap::from_probs(content.value().rows(), relation_probs(tape, content).value());
}

numerics::ParamGroup TripletParser::group() {
  numerics::ParamGroup g{numerics::GroupKind::kParser, numerics::kParserLrMultiplier, {}};
  for (FeedForward* ff : {&aspect_, &opinion_}) {
    for (numerics::Parameter* p : {&ff->w1, &ff->b1, &ff->w2, &ff->b2}) g.add(*p);
  }
  for (numerics::Parameter* p : {&scorer_.head_w, &scorer_.head_b, &scorer_.dep_w, &scorer_.dep_b,
                                 &scorer_.bilinear, &scorer_.head_out, &scorer_.dep_out, &scorer_.bias}) {
    g.add(*p);
  }
  return g;
}

std::size_t TripletParser::param_count(const ParserConfig& c) {
  const std::size_t d = c.input_dim, t = c.tag_width(), k = c.relation_width();
  const std::size_t tagger = (d * t + t) + (t * kNumTags + kNumTags);
  const std::size_t scorer = 2 * (d * k + k) + k * kNumRelations * k + 2 * k * kNumRelations + kNumRelations;
  return 2 * tagger + scorer;
}

// ---- Decoding ---------------------------------------------------------------

std::vector<Tag> argmax_tags(const Tensor& probs) {
  if (probs.rank() != 2 || probs.cols() != kNumTags) throw ShapeError("argmax_tags: expected n x 3 probabilities");
  std::vector<Tag> tags(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    tags[i] = static_cast<Tag>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return tags;
}

std::vector<Span> decode_bio(std::span<const Tag> tags) {
  std::vector<Span> spans;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    switch (tags[i]) {
      case Tag::kB:
        spans.push_back({i, i});
        open = true;
        break;
      case Tag::kI:
        if (open) {
          spans.back().end = i;
        } else {
          spans.push_back({i, i});
          open = true;
        }
        break;
      case Tag::kO:
        open = false;
        break;
    }
  }
  return spans;
}

std::vector<Triplet> decode_grid(std::span<const Span> aspects, std::span<const Span> opinions,
                                 const SentimentRelationMap& map) {
  const std::size_t n = map.size();
  std::vector<Triplet> out;
  for (const Span& a : aspects) {
    for (const Span& o : opinions) {
      if (a == o) continue;
      if (a.end >= n || o.end >= n || a.start > a.end || o.start > o.end) {
        throw IndexError("decode_grid: span outside the relation map");
      }
      std::array<std::size_t, kNumRelations> votes{};
      std::array<double, kNumRelations> mass{};
      auto cast = [&](std::size_t i, std::size_t j) {
        ++votes[static_cast<std::size_t>(map.label(i, j))];
        for (std::size_t l = 0; l < kNumRelations; ++l) mass[l] += map.prob(i, j, static_cast<Relation>(l));
      };
      for (std::size_t i = a.start; i <= a.end; ++i) {
        for (std::size_t j = o.start; j <= o.end; ++j) {
          cast(i, j);
          cast(j, i);
        }
      }
      // Best sentiment: most votes, then mass, then POS > NEG > NEU by index order.
      std::size_t best = 1;
      for (std::size_t l = 2; l < kNumRelations; ++l) {
        if (votes[l] > votes[best] || (votes[l] == votes[best] && mass[l] > mass[best])) best = l;
      }
      if (votes[best] == 0 || votes[0] > votes[best]) continue;
      out.push_back(Triplet{a, o, *sentiment_of(static_cast<Relation>(best))});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

GoldTargets build_gold(std::size_t n, std::span<const Triplet> triplets) {
  GoldTargets gold;
  gold.aspect_tags.assign(n, Tag::kO);
  gold.opinion_tags.assign(n, Tag::kO);
  gold.relations.assign(n * n, Relation::kNone);

  auto mark = [&](std::vector<Tag>& tags, const Span& span, const char* role) {
    bool clash = false;
    for (std::size_t i = span.start; i <= span.end; ++i) {
      const Tag want = i == span.start ? Tag::kB : Tag::kI;
      if (tags[i] != Tag::kO && tags[i] != want) clash = true;
    }
    // A span already tagged identically is a repeated mention of the same span.
    if (clash) {
      gold.warnings.push_back(std::string(role) + " span [" + std::to_string(span.start) + "," +
                              std::to_string(span.end) + "] overlaps an earlier span; kept the earlier tags");
      return;
    }
    for (std::size_t i = span.start; i <= span.end; ++i) tags[i] = i == span.start ? Tag::kB : Tag::kI;
  };

  for (const Triplet& t : triplets) {
    if (t.aspect.start > t.aspect.end || t.aspect.end >= n || t.opinion.start > t.opinion.end || t.opinion.end >= n) {
      throw ValidationError("build_gold: triplet span outside the sentence");
    }
    mark(gold.aspect_tags, t.aspect, "aspect");
    mark(gold.opinion_tags, t.opinion, "opinion");
    const Relation label = relation_of(t.sentiment);
    bool conflict = false;
    for (std::size_t i = t.aspect.start; i <= t.aspect.end; ++i) {
      for (std::size_t j = t.opinion.start; j <= t.opinion.end; ++j) {
        for (std::size_t cell : {i * n + j, j * n + i}) {
          if (gold.relations[cell] == Relation::kNone) {
            gold.relations[cell] = label;
          } else if (gold.relations[cell] != label) {
            conflict = true;
          }
        }
      }
    }
    if (conflict) {
      gold.warnings.push_back("triplet (" + std::to_string(t.aspect.start) + "-" + std::to_string(t.aspect.end) + ", " +
                              std::to_string(t.opinion.start) + "-" + std::to_string(t.opinion.end) +
                              ") conflicts with an earlier triplet; kept the earlier label");
    }
  }
  return gold;
}

}  // namespace mug::parser
