#pragma once

#include <stdexcept>
#include <string>

namespace nvdnp {

// Exit codes used by the CLI: 0 success, 2 validation, 3 numerical, 4 I/O.
enum ExitCode : int {
    exit_ok = 0,
    exit_validation = 2,
    exit_numerical = 3,
    exit_io = 4,
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical-invariant violations (trace drift, step size, negative kernel, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e)) return exit_validation;
    if (dynamic_cast<const NumericalError*>(&e)) return exit_numerical;
    if (dynamic_cast<const IoError*>(&e)) return exit_io;
    return exit_numerical;
}

} // namespace nvdnp
