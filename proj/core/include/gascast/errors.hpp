#pragma once

#include <stdexcept>
#include <string>

namespace gascast {

// Error taxonomy maps onto the CLI exit-code contract:
// usage/config errors -> 1, data errors -> 2, numerical failures -> 3.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gascast
