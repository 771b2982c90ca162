#pragma once

#include <stdexcept>
#include <string>

namespace advmimo {

// Invalid configuration: bad JSON, out-of-range parameters, unreadable config
// files. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problems with the data itself: malformed CSV, empty datasets, infeasible
// attacks or classifiers. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace advmimo
