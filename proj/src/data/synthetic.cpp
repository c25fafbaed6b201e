#include "mug/data/synthetic.h"

#include <algorithm>
#include <array>
#include <string>

namespace mug::data {

namespace {

const std::vector<std::string> kFillers{"the", "a", "was", "is", "and", "we", "it", "very", "also", "there",
                                        "this", "of", "they", "had", "our", "at"};
const std::vector<std::string> kAspects{"food", "service", "staff", "menu", "wine", "pasta", "pizza", "price",
                                        "decor", "music", "view", "sushi"};
const std::vector<std::string> kAspectHeads{"battery", "screen", "key"};
const std::vector<std::string> kAspectTails{"life", "quality", "board"};
struct Opinion {
  const char* word;
  Sentiment sentiment;
};
const std::vector<Opinion> kOpinions{
    {"great", Sentiment::kPositive}, {"tasty", Sentiment::kPositive}, {"friendly", Sentiment::kPositive},
    {"awful", Sentiment::kNegative}, {"rude", Sentiment::kNegative},  {"bland", Sentiment::kNegative},
    {"okay", Sentiment::kNeutral},   {"average", Sentiment::kNeutral}, {"standard", Sentiment::kNeutral}};

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

std::size_t uniform(std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<int> random_tree_heads(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> heads(n, -1);
  for (std::size_t k = 1; k < n; ++k) heads[order[k]] = static_cast<int>(order[uniform(0, k - 1, rng)]);
  return heads;
}

}  // namespace

std::vector<Sentence> lexical_corpus(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Sentence> out;
  while (out.size() < size) {
    const std::size_t n = uniform(5, 9, rng);
    Sentence s;
    for (std::size_t i = 0; i < n; ++i) s.tokens.push_back(pick(kFillers, rng));
    const bool two_words = uniform(0, 3, rng) == 0;
    const std::size_t a_len = two_words ? 2 : 1;
    const std::size_t a = uniform(0, n - a_len, rng);
    std::size_t o = uniform(0, n - 1, rng);
    while (o + 1 > a && o < a + a_len) o = uniform(0, n - 1, rng);
    if (two_words) {
      const std::size_t k = uniform(0, kAspectHeads.size() - 1, rng);
      s.tokens[a] = kAspectHeads[k];
      s.tokens[a + 1] = kAspectTails[k];
    } else {
      s.tokens[a] = pick(kAspects, rng);
    }
    const Opinion& op = pick(kOpinions, rng);
    s.tokens[o] = op.word;
    s.triplets.push_back({{a, a + a_len - 1}, {o, o}, op.sentiment});
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> proximity_corpus(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Sentence> out;
  while (out.size() < size) {
    // [lead fillers] pair1 [gap fillers ≥ 2] pair2 [tail fillers]; a pair is "op asp" or "asp op".
    const std::size_t lead = uniform(0, 2, rng), gap = uniform(2, 4, rng), tail = uniform(0, 2, rng);
    Sentence s;
    std::vector<int> heads;
    auto fillers = [&](std::size_t count) {
      for (std::size_t k = 0; k < count; ++k) {
        s.tokens.push_back(pick(kFillers, rng));
        heads.push_back(-2);  // attached to the root filler below
      }
    };
    std::array<std::size_t, 2> aspect_at{};
    fillers(lead);
    for (std::size_t p = 0; p < 2; ++p) {
      if (p == 1) fillers(gap);
      const Opinion& op = pick(kOpinions, rng);
      const std::string& asp = pick(kAspects, rng);
      const std::size_t at = s.tokens.size();
      const bool opinion_first = uniform(0, 1, rng) == 1;
      const std::size_t a = opinion_first ? at + 1 : at, o = opinion_first ? at : at + 1;
      s.tokens.push_back(opinion_first ? op.word : asp);
      s.tokens.push_back(opinion_first ? asp : op.word);
      heads.push_back(opinion_first ? static_cast<int>(a) : -2);
      heads.push_back(opinion_first ? -2 : static_cast<int>(a));
      aspect_at[p] = a;
      s.triplets.push_back({{a, a}, {o, o}, op.sentiment});
    }
    fillers(tail);
    // The first aspect is the root; everything unattached hangs off it.
    for (std::size_t i = 0; i < heads.size(); ++i) {
      if (heads[i] == -2) heads[i] = i == aspect_at[0] ? -1 : static_cast<int>(aspect_at[0]);
    }
    s.heads = std::move(heads);
    out.push_back(std::move(s));
  }
  return out;
}

Sentence random_annotated_sentence(std::mt19937_64& rng, std::size_t min_tokens, std::size_t max_tokens) {
  const std::size_t n = uniform(min_tokens, max_tokens, rng);
  Sentence s;
  for (std::size_t i = 0; i < n; ++i) s.tokens.push_back("w" + std::to_string(uniform(0, 30, rng)));
  s.heads = random_tree_heads(n, rng);

  // Disjoint spans from a left-to-right walk, each assigned a role.
  std::vector<Span> aspects, opinions;
  std::size_t at = uniform(0, 1, rng);
  while (at < n) {
    const std::size_t len = uniform(1, 3, rng);
    if (at + len > n) break;
    (uniform(0, 1, rng) ? aspects : opinions).push_back({at, at + len - 1});
    at += len + uniform(0, 2, rng);
  }
  if (aspects.empty() || opinions.empty()) return s;
  const std::size_t count = uniform(1, 3, rng);
  for (std::size_t k = 0; k < count; ++k) {
    const Triplet t{pick(aspects, rng), pick(opinions, rng), static_cast<Sentiment>(uniform(0, 2, rng))};
    const bool repeat = std::any_of(s.triplets.begin(), s.triplets.end(), [&](const Triplet& u) {
      return u.aspect == t.aspect && u.opinion == t.opinion;
    });
    if (!repeat) s.triplets.push_back(t);
  }
  std::sort(s.triplets.begin(), s.triplets.end());
  return s;
}

}  // namespace mug::data
