#include "mug/evaluation/evaluation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "mug/errors.h"

namespace mug::evaluation {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

structure::DependencyGraph random_tree(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(n - 1);
  for (std::size_t v = 1; v < n; ++v) edges.emplace_back(std::uniform_int_distribution<std::size_t>(0, v - 1)(rng), v);
  return structure::DependencyGraph(n, std::move(edges));
}

}  // namespace

double MatchScores::precision() const { return ratio(matched, predicted); }
double MatchScores::recall() const { return ratio(matched, gold); }
double MatchScores::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

MatchScores& MatchScores::operator+=(const MatchScores& other) {
  matched += other.matched;
  predicted += other.predicted;
  gold += other.gold;
  return *this;
}

MatchScores exact_match(std::span<const Triplet> predicted, std::span<const Triplet> gold) {
  const std::set<Triplet> p(predicted.begin(), predicted.end());
  const std::set<Triplet> g(gold.begin(), gold.end());
  MatchScores s{0, p.size(), g.size()};
  for (const Triplet& t : p) s.matched += g.count(t);
  return s;
}

MatchScores exact_match(std::span<const std::vector<Triplet>> predicted, std::span<const std::vector<Triplet>> gold) {
  if (predicted.size() != gold.size()) throw ShapeError("exact_match: prediction and gold sentence counts differ");
  MatchScores total;
  for (std::size_t i = 0; i < gold.size(); ++i) total += exact_match(predicted[i], gold[i]);
  return total;
}

Aggregate aggregate(std::span<const MatchScores> runs) {
  if (runs.empty()) throw ValidationError("aggregate: no runs");
  std::vector<double> p, r, f;
  for (const MatchScores& s : runs) {
    p.push_back(s.precision());
    r.push_back(s.recall());
    f.push_back(s.f1());
  }
  Aggregate a;
  a.runs = runs.size();
  std::tie(a.precision, a.precision_std) = mean_std(p);
  std::tie(a.recall, a.recall_std) = mean_std(r);
  std::tie(a.f1, a.f1_std) = mean_std(f);
  return a;
}

std::string hardware_note() {
  std::string model;
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      model = line.substr(line.find(':') + 2);
      break;
    }
  }
  if (model.empty()) model = "unknown cpu";
  return model + "; " + std::to_string(std::max(1u, std::thread::hardware_concurrency())) +
         " hardware threads; timed on 1 thread";
}

BenchReport bench_distance(structure::StructureKind method, const BenchOptions& options) {
  using Clock = std::chrono::steady_clock;
  const std::size_t n = options.length;
  if (n < 2) throw ValidationError("bench: sentence length must be at least 2");
  if (method == structure::StructureKind::kNone) throw ValidationError("bench: method must be rel or dep");
  structure::StructureConfig{options.tau, method}.validate();
  const std::size_t reps =
      options.repetitions > 0 ? options.repetitions : std::max<std::size_t>(1000, (1000000 + n * n - 1) / (n * n));

  std::vector<structure::DependencyGraph> trees;
  if (method == structure::StructureKind::kDependency) {
    std::mt19937_64 rng(options.seed);
    trees.reserve(reps);
    for (std::size_t k = 0; k < reps; ++k) trees.push_back(random_tree(n, rng));
  }
  auto derive = [&](std::size_t k) {
    return method == structure::StructureKind::kRelative
               ? structure::relative_distance_matrix(n, options.tau)
               : structure::dependency_distance_matrix(trees[k % trees.size()], options.tau);
  };

  // Checksum keeps every result observable.
  long long checksum = 0;
  for (std::size_t k = 0; k < options.warmup; ++k) checksum += derive(k)(0, n - 1);
  const auto start = Clock::now();
  for (std::size_t k = 0; k < reps; ++k) checksum += derive(k)(0, n - 1);
  const auto stop = Clock::now();

  BenchReport r;
  r.method = method;
  r.length = n;
  r.repetitions = reps;
  r.tokens = reps * n;
  r.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  r.tokens_per_ms = static_cast<double>(r.tokens) / std::max(r.elapsed_ms, 1e-9);
  r.hardware = hardware_note();
  r.note = "derivation only; external dependency parsing is excluded (checksum " + std::to_string(checksum) + ")";
  return r;
}

}  // namespace mug::evaluation
