#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mug/structure/distance.h"
#include "mug/types.h"

namespace mug::evaluation {

// Micro counts; every ratio with a zero denominator is 0.
struct MatchScores {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  double precision() const;
  double recall() const;
  double f1() const;

  MatchScores& operator+=(const MatchScores& other);
  bool operator==(const MatchScores&) const = default;
};

// Duplicates within either list count once.
MatchScores exact_match(std::span<const Triplet> predicted, std::span<const Triplet> gold);
// Sentence-aligned corpus scoring, summed counts.
MatchScores exact_match(std::span<const std::vector<Triplet>> predicted, std::span<const std::vector<Triplet>> gold);

struct Aggregate {
  std::size_t runs = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  // Population standard deviation over runs.
  double precision_std = 0.0, recall_std = 0.0, f1_std = 0.0;
};

// Mean of the per-run ratios.
Aggregate aggregate(std::span<const MatchScores> runs);

struct BenchOptions {
  std::size_t length = 128;
  // 0 picks max(1000, enough for 10^6 token pairs).
  std::size_t repetitions = 0;
  std::size_t warmup = 16;
  int tau = structure::kDefaultTau;
  std::uint64_t seed = 0;
};

struct BenchReport {
  structure::StructureKind method = structure::StructureKind::kRelative;
  std::size_t length = 0;
  std::size_t repetitions = 0;
  std::size_t tokens = 0;
  double elapsed_ms = 0.0;
  double tokens_per_ms = 0.0;
  std::string hardware;
  std::string note;
};

// Times only the derivation of one distance matrix per repetition on the calling thread.
// Dependency inputs are seeded random trees built before the clock starts.
BenchReport bench_distance(structure::StructureKind method, const BenchOptions& options = {});

std::string hardware_note();

}  // namespace mug::evaluation
