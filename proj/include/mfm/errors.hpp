#pragma once

#include <stdexcept>
#include <string>

namespace mfm {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes (usage=2, io=3, numeric=4), so new failure modes should pick one
// of these categories rather than throwing std::runtime_error directly.

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotPsdError : NumericError {
    explicit NotPsdError(const std::string& msg) : NumericError(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mfm
