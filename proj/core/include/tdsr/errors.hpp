#pragma once

#include <stdexcept>
#include <string>

namespace tdsr {

// Bad configuration, bad flag values, malformed config files. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

// A required earlier-stage artifact (checkpoint, dataset) is missing. Exit 3.
struct PrereqError : std::runtime_error {
    explicit PrereqError(const std::string& m) : std::runtime_error(m) {}
};

// Training divergence guard tripped. Exit 4.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& m) : std::runtime_error(m) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace tdsr
