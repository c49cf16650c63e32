#pragma once

#include <random>

#include "qpar/maxwell_op.hpp"

namespace qpar::test {

inline Field random_field(const DiscreteOperator& op, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Field f = op.zero_field();
  for (auto& v : f.e) v = {n(rng), n(rng)};
  for (auto& v : f.h) v = {n(rng), n(rng)};
  return f;
}

}  // namespace qpar::test
