#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "mug/numerics/params.h"
#include "mug/numerics/tape.h"

namespace mug::numerics {

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates checked per parameter; larger tensors are sampled.
  std::size_t max_coords_per_param = 48;
  std::uint64_t seed = 0;
};

using ScalarFn = std::function<Var(Tape&)>;

// Max over checked coordinates of |analytic − central difference| / max(1, |central difference|).
// `f` must build its value from tape.param(...) of the given parameters.
double grad_check(const ScalarFn& f, std::span<Parameter* const> params, const GradCheckOptions& options = {});
double grad_check(const ScalarFn& f, const ParamGroup& group, const GradCheckOptions& options = {});

}  // namespace mug::numerics
