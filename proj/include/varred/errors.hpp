#pragma once

#include <stdexcept>
#include <string>

namespace varred {

/// A validated hypothesis failed on the supplied model (CLI exit code 2).
struct HypothesisError : std::runtime_error {
    explicit HypothesisError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solve exhausted its budget (CLI exit code 3).
struct NonConvergenceError : std::runtime_error {
    explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// A computed object failed its a-posteriori certificate (CLI exit code 4).
struct CertificateError : std::runtime_error {
    explicit CertificateError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace varred
