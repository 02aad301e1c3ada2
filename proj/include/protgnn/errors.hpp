#pragma once

#include <stdexcept>
#include <string>

namespace protgnn {

// Error taxonomy shared across the library. The CLI maps these onto its
// exit codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace protgnn
