#include "mug/numerics/params.h"

#include <algorithm>

#include "mug/errors.h"

namespace mug::numerics {

std::string_view to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::kEncoder: return "encoder";
    case GroupKind::kAdapter: return "adapter";
    case GroupKind::kParser: return "parser";
  }
  return "?";
}

void ParamGroup::add(Parameter& p) {
  const bool taken = std::any_of(params.begin(), params.end(),
                                 [&](const Parameter* q) { return q->name == p.name; });
  if (taken) throw ValidationError("param group " + std::string(to_string(kind)) + ": duplicate name " + p.name);
  params.push_back(&p);
}

std::size_t ParamGroup::count() const {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

Parameter Initializer::normal(std::string name, Shape shape, double stddev) {
  Parameter p{std::move(name), Tensor(std::move(shape))};
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : p.value.data()) v = dist(rng_);
  return p;
}

Parameter Initializer::zeros(std::string name, Shape shape) {
  return Parameter{std::move(name), Tensor(std::move(shape), 0.0)};
}

Parameter Initializer::ones(std::string name, Shape shape) {
  return Parameter{std::move(name), Tensor(std::move(shape), 1.0)};
}

}  // namespace mug::numerics
