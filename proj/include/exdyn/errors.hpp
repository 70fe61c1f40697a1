#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace exdyn {

// Invalid input parameters or configuration documents.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A hierarchy would not fit the configured memory budget.
class MemoryBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Divergence, invariant violation or failed quadrature.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Short scientific notation for messages.
inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace exdyn
