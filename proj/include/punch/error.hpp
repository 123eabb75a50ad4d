#pragma once

#include <stdexcept>
#include <string>

namespace punch {

// Exception families map one-to-one onto CLI exit codes (2, 3, 4).

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace punch
