#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace mug::structure {

inline constexpr int kDefaultTau = 8;
// Distances are stored as signed bytes.
inline constexpr int kMaxTau = 127;

enum class StructureKind { kNone, kRelative, kDependency };

std::string_view to_string(StructureKind kind);
StructureKind parse_structure_kind(std::string_view text);

struct StructureConfig {
  int tau = kDefaultTau;
  StructureKind kind = StructureKind::kNone;

  void validate() const;
  std::size_t relation_rows() const { return static_cast<std::size_t>(2 * tau + 1); }
};

// n×n signed clipped distances; antisymmetric with zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, int tau);

  std::size_t size() const { return n_; }
  int tau() const { return tau_; }
  int operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, int value);
  std::span<const std::int8_t> values() const { return values_; }
  std::span<std::int8_t> mutable_values() { return values_; }

  // Row-major relation-table rows, r + τ per cell.
  std::vector<std::size_t> relation_index() const;
  // Extends to m ≥ n positions; the added rows and columns hold 0.
  DistanceMatrix padded(std::size_t m) const;

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  int tau_ = kDefaultTau;
  std::vector<std::int8_t> values_;
};

// Undirected token graph; edges are normalised to (min, max) and deduplicated.
class DependencyGraph {
 public:
  DependencyGraph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges);
  // heads[i] is the 0-based head of token i, or −1 for the root.
  static DependencyGraph from_heads(std::span<const int> heads);

  std::size_t size() const { return n_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  std::vector<std::vector<std::size_t>> adjacency() const;

 private:
  std::size_t n_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

int clip_distance(long long raw, int tau);

// values[i][j] = clip(j − i, −τ, τ).
DistanceMatrix relative_distance_matrix(std::size_t n, int tau);

// |values[i][j]| = clipped shortest-path length (τ when unreachable), sign of j − i.
DistanceMatrix dependency_distance_matrix(const DependencyGraph& graph, int tau);

// Maps r ∈ [−τ, τ] onto a relation-table row in [0, 2τ].
std::size_t distance_to_index(int r, int tau);

// (n+2)×(n+2) distances over [start] t_1 … t_n [end]. Content cells follow `config.kind`;
// cells touching the markers use the relative rule. Dependency kind requires `graph`.
DistanceMatrix augmented_distance_matrix(const StructureConfig& config, std::size_t n,
                                         const DependencyGraph* graph = nullptr);

}  // namespace mug::structure
