#include "mug/numerics/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mug/errors.h"

namespace mug::numerics {
namespace {

double evaluate(const ScalarFn& f) {
  Tape tape(false);
  const double v = f(tape).value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: objective is not finite");
  return v;
}

}  // namespace

double grad_check(const ScalarFn& f, std::span<Parameter* const> params, const GradCheckOptions& options) {
  Tape tape(true);
  const Var loss = f(tape);
  if (!std::isfinite(loss.value().item())) throw NumericError("grad_check: objective is not finite");
  tape.backward(loss);

  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  for (Parameter* p : params) {
    const Tensor* grad = tape.grad(*p);
    std::vector<std::size_t> coords(p->value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t c : coords) {
      const double saved = p->value[c];
      p->value[c] = saved + options.eps;
      const double plus = evaluate(f);
      p->value[c] = saved - options.eps;
      const double minus = evaluate(f);
      p->value[c] = saved;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double analytic = grad != nullptr ? (*grad)[c] : 0.0;
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric)));
    }
  }
  return worst;
}

double grad_check(const ScalarFn& f, const ParamGroup& group, const GradCheckOptions& options) {
  return grad_check(f, std::span<Parameter* const>(group.params), options);
}

}  // namespace mug::numerics
