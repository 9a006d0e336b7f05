#pragma once

#include <stdexcept>
#include <string>

namespace rfmag {

/// Failures caused by user input: bad config files, invalid parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failures of a numerical operation on otherwise valid input.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rfmag
