#pragma once

#include <vector>

#include "hevt/errors.hpp"
#include "hevt/evt_core.hpp"
#include "hevt/inference.hpp"
#include "hevt/ingest.hpp"
#include "hevt/sample.hpp"

namespace hevt {

/// A sample with its order statistics and the singleton-free copy the
/// heterogeneity estimator needs.
struct PreparedData {
  SpeedSample sample;
  OrderedSample ordered;
  SpeedSample lambda_sample;
  std::vector<std::size_t> lambda_ranks;

  [[nodiscard]] EstimationInput input() const {
    return {&ordered, &lambda_sample, lambda_ranks};
  }
};

PreparedData prepare_data(SpeedSample sample, SingletonPolicy policy = SingletonPolicy::drop,
                          Warnings* warnings = nullptr);

/// k = round(k_frac * n), kept inside [1, n - 1].
[[nodiscard]] std::size_t k_from_fraction(std::size_t n, double k_frac);

}  // namespace hevt
