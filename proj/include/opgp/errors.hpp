#pragma once

#include <stdexcept>
#include <string>

namespace opgp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched rows/cols/variable counts between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed operator spec, kernel spec, config or CSV.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A derivative multi-index exceeds what the closed-form kernel derivatives support.
class UnsupportedOrder : public Error {
public:
    using Error::Error;
};

/// Cholesky failed even after the last jitter escalation step.
class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(const std::string& what, double last_jitter = 0.0)
        : Error(what), last_jitter_(last_jitter) {}
    [[nodiscard]] double last_jitter() const noexcept { return last_jitter_; }

private:
    double last_jitter_;
};

/// Every ansatz tried up to the requested degree produced an empty nullspace.
/// This does not prove that no polynomial annihilator exists.
class NoAnnihilatorFound : public Error {
public:
    explicit NoAnnihilatorFound(int max_degree)
        : Error("no annihilating operator found for ansatz degrees up to " + std::to_string(max_degree)),
          max_degree_(max_degree) {}
    [[nodiscard]] int max_degree() const noexcept { return max_degree_; }

private:
    int max_degree_;
};

} // namespace opgp
