#pragma once

#include <stdexcept>
#include <string>

namespace cavityrc {

/// Bad geometry, placements, parameter ranges; raised before any compute.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unknown-key configuration input.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Corpus/manifest problems during dataset ingestion.
class IngestError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The wave field left the finite range (NaN/Inf) during a run.
class InstabilityError : public std::runtime_error {
public:
  explicit InstabilityError(long step_index)
      : std::runtime_error("wave field became non-finite at step " +
                           std::to_string(step_index)),
        step_index_(step_index) {}

  long step_index() const noexcept { return step_index_; }

private:
  long step_index_;
};

} // namespace cavityrc
