#include "mug/structure/distance.h"

#include <algorithm>
#include <cstring>
#include <string>

#include "mug/errors.h"

namespace mug::structure {

std::string_view to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::kNone: return "none";
    case StructureKind::kRelative: return "rel";
    case StructureKind::kDependency: return "dep";
  }
  return "?";
}

StructureKind parse_structure_kind(std::string_view text) {
  if (text == "none") return StructureKind::kNone;
  if (text == "rel" || text == "relative") return StructureKind::kRelative;
  if (text == "dep" || text == "dependency") return StructureKind::kDependency;
  throw ValidationError("unknown adapter kind '" + std::string(text) + "' (expected none, rel or dep)");
}

void StructureConfig::validate() const {
  if (tau < 1 || tau > kMaxTau) {
    throw ValidationError("tau must lie in [1, " + std::to_string(kMaxTau) + "], got " + std::to_string(tau));
  }
}

DistanceMatrix::DistanceMatrix(std::size_t n, int tau) : n_(n), tau_(tau), values_(n * n, 0) {
  StructureConfig{tau, StructureKind::kRelative}.validate();
}

void DistanceMatrix::set(std::size_t i, std::size_t j, int value) {
  if (i >= n_ || j >= n_) throw IndexError("distance matrix: cell out of range");
  if (value < -tau_ || value > tau_) throw IndexError("distance matrix: value exceeds tau");
  values_[i * n_ + j] = static_cast<std::int8_t>(value);
}

std::vector<std::size_t> DistanceMatrix::relation_index() const {
  std::vector<std::size_t> index(values_.size());
  for (std::size_t c = 0; c < values_.size(); ++c) index[c] = static_cast<std::size_t>(values_[c] + tau_);
  return index;
}

DistanceMatrix DistanceMatrix::padded(std::size_t m) const {
  if (m < n_) throw ShapeError("distance matrix: cannot pad to a smaller size");
  DistanceMatrix out(m, tau_);
  for (std::size_t i = 0; i < n_; ++i)
    std::memcpy(out.values_.data() + i * m, values_.data() + i * n_, n_);
  return out;
}

DependencyGraph::DependencyGraph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges)
    : n_(n), edges_(std::move(edges)) {
  for (auto& [u, v] : edges_) {
    if (u >= n_ || v >= n_) {
      throw ValidationError("dependency edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") out of range for " + std::to_string(n_) + " tokens");
    }
    if (u == v) throw ValidationError("dependency edge: self-loop at " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

DependencyGraph DependencyGraph::from_heads(std::span<const int> heads) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i] == -1) continue;
    if (heads[i] < -1) throw ValidationError("dependency head " + std::to_string(heads[i]) + " is invalid");
    edges.emplace_back(static_cast<std::size_t>(heads[i]), i);
  }
  return DependencyGraph(heads.size(), std::move(edges));
}

std::vector<std::vector<std::size_t>> DependencyGraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(n_);
  for (const auto& [u, v] : edges_) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

int clip_distance(long long raw, int tau) {
  return static_cast<int>(std::clamp<long long>(raw, -tau, tau));
}

DistanceMatrix relative_distance_matrix(std::size_t n, int tau) {
  if (n == 0) throw ValidationError("relative distance: empty input");
  DistanceMatrix out(n, tau);
  // Every row is a window onto one clipped band: row i = band[n-1-i, 2n-1-i).
  std::vector<std::int8_t> band(2 * n - 1);
  for (std::size_t k = 0; k < band.size(); ++k) {
    band[k] = static_cast<std::int8_t>(clip_distance(static_cast<long long>(k) - static_cast<long long>(n - 1), tau));
  }
  std::int8_t* dst = out.mutable_values().data();
  for (std::size_t i = 0; i < n; ++i) std::memcpy(dst + i * n, band.data() + (n - 1 - i), n);
  return out;
}

DistanceMatrix dependency_distance_matrix(const DependencyGraph& graph, int tau) {
  const std::size_t n = graph.size();
  if (n == 0) throw ValidationError("dependency distance: empty input");
  DistanceMatrix out(n, tau);
  const auto adj = graph.adjacency();
  constexpr int kUnseen = -1;
  std::vector<int> dist(n);
  std::vector<std::size_t> queue(n);
  std::int8_t* dst = out.mutable_values().data();
  for (std::size_t src = 0; src < n; ++src) {
    std::fill(dist.begin(), dist.end(), kUnseen);
    dist[src] = 0;
    std::size_t head = 0, tail = 0;
    queue[tail++] = src;
    while (head < tail) {
      const std::size_t u = queue[head++];
      for (std::size_t v : adj[u]) {
        if (dist[v] == kUnseen) {
          dist[v] = dist[u] + 1;
          queue[tail++] = v;
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      const int magnitude = dist[j] == kUnseen ? tau : std::min(dist[j], tau);
      const int sign = j > src ? 1 : (j < src ? -1 : 0);
      dst[src * n + j] = static_cast<std::int8_t>(sign * magnitude);
    }
  }
  return out;
}

std::size_t distance_to_index(int r, int tau) {
  if (r < -tau || r > tau) {
    throw IndexError("distance " + std::to_string(r) + " exceeds tau " + std::to_string(tau) + "; clip first");
  }
  return static_cast<std::size_t>(r + tau);
}

DistanceMatrix augmented_distance_matrix(const StructureConfig& config, std::size_t n, const DependencyGraph* graph) {
  config.validate();
  DistanceMatrix out = relative_distance_matrix(n + 2, config.tau);
  switch (config.kind) {
    case StructureKind::kRelative:
      return out;
    case StructureKind::kDependency: {
      if (graph == nullptr) throw ValidationError("dependency adapter: sentence has no dependency heads");
      if (graph->size() != n) throw ShapeError("dependency adapter: graph size differs from sentence length");
      const DistanceMatrix inner = dependency_distance_matrix(*graph, config.tau);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.set(i + 1, j + 1, inner(i, j));
      return out;
    }
    case StructureKind::kNone:
      break;
  }
  throw ValidationError("augmented distances requested with the adapter disabled");
}

}  // namespace mug::structure
