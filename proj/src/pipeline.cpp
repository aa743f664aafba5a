#include "hevt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hevt {

PreparedData prepare_data(SpeedSample sample, SingletonPolicy policy, Warnings* warnings) {
  sample.validate();
  PreparedData data;
  data.ordered = sort_ascending(sample.values);
  if (sample.min_group_size() >= 2) {
    data.lambda_sample = sample;
    data.lambda_ranks = data.ordered.ranks;
  } else {
    data.lambda_sample = prepare_for_lambda(sample, policy, warnings);
    // Duplicated singletons tie with themselves; rank copies by position.
    data.lambda_ranks = sort_ascending(data.lambda_sample.values, TieHandling::by_position).ranks;
  }
  data.sample = std::move(sample);
  return data;
}

std::size_t k_from_fraction(std::size_t n, double k_frac) {
  if (n < 2) throw std::invalid_argument("k_from_fraction: need at least two observations");
  if (!(k_frac > 0.0 && k_frac < 1.0)) {
    throw std::invalid_argument("k_from_fraction: fraction must lie in (0, 1)");
  }
  const auto k = static_cast<std::size_t>(std::llround(k_frac * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

}  // namespace hevt
