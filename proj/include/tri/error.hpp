#pragma once

#include <stdexcept>
#include <string>

namespace tri {

// Parameter / validation problems: bad dimensions, bad rates, malformed files.
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical breakdowns: eigensolver failure, ill-conditioned cluster,
// singular restricted part, non-summable series.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A computed object violates a structural contract it was required to satisfy
// (non-converged input, inconsistent projector series, ...).
class structure_error : public std::runtime_error {
public:
    explicit structure_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tri
