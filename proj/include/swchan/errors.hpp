#pragma once

#include <stdexcept>
#include <string>

namespace swchan {

// Invalid channel/plant/experiment parameters. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A well-formed request that an analysis could not complete (exit code 3).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive search would exceed a configured resource cap (exit code 4).
class ResourceCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swchan
