#pragma once

#include <stdexcept>
#include <string>

namespace rainbow {

/// A computation could not produce a trustworthy result (series did not
/// converge, factorization failed, grid became degenerate). Input validation
/// failures use std::invalid_argument / std::domain_error instead.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rainbow
