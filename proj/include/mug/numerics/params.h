#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mug/numerics/tensor.h"

namespace mug::numerics {

struct Parameter {
  std::string name;
  Tensor value;
};

enum class GroupKind { kEncoder, kAdapter, kParser };

std::string_view to_string(GroupKind kind);

// Non-owning view over the trainable tensors of one optimisation group.
struct ParamGroup {
  GroupKind kind = GroupKind::kEncoder;
  double lr_multiplier = 1.0;
  std::vector<Parameter*> params;

  void add(Parameter& p);
  std::size_t count() const;
};

inline constexpr double kParserLrMultiplier = 10.0;
inline constexpr double kInitStddev = 0.02;

// Seeded generator for weight initialisation.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Parameter normal(std::string name, Shape shape, double stddev = kInitStddev);
  Parameter zeros(std::string name, Shape shape);
  Parameter ones(std::string name, Shape shape);

 private:
  std::mt19937_64 rng_;
};

}  // namespace mug::numerics
