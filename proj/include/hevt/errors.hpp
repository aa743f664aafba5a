#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hevt {

/// Non-fatal conditions collected during a run (clamping, excluded k,
/// perturbed ties, dropped singletons). Callers surface them in reports.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

/// Malformed or missing input data.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Log-spacing moments satisfy M2 <= M1^2, so V_n is undefined.
class DegenerateSpacingsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The extreme value index estimate is non-negative; no finite endpoint.
class NoFiniteEndpointError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace hevt
