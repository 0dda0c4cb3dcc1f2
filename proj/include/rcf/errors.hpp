#pragma once

#include <stdexcept>
#include <string>

namespace rcf {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: ConfigError/usage -> 1, data-shaped problems -> 2, numeric -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct StateError : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace rcf
