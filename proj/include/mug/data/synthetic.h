#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "mug/data/corpus.h"

namespace mug::data {

// One aspect (one or two words) and one opinion per sentence; the opinion word fixes the
// sentiment. Learnable from lexical identity alone.
std::vector<Sentence> lexical_corpus(std::size_t size, std::uint64_t seed);

// Two aspect–opinion pairs per sentence drawn from shared lexicons. Each opinion sits directly
// next to its own aspect and at least three tokens from the other, so pairing is decided by
// proximity. Heads attach each opinion to its aspect.
std::vector<Sentence> proximity_corpus(std::size_t size, std::uint64_t seed);

// Random tokens with disjoint random spans grouped into up to three triplets; aspects and opinions
// may be shared between triplets but never swap roles. Heads form a random tree.
Sentence random_annotated_sentence(std::mt19937_64& rng, std::size_t min_tokens = 4, std::size_t max_tokens = 20);

}  // namespace mug::data
