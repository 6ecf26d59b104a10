#pragma once

#include <stdexcept>
#include <string>

namespace cxbench {

/// Tensor or layer dimensions that do not fit together.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (family/view, widths, stability guards).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an API precondition, e.g. backward() on a non-scalar loss.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Sample too close to a non-differentiable locus for a derivative to be meaningful.
class FlaggedSample : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DegenerateInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sweep grid is incomplete or otherwise unusable for selection/reporting.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cxbench
