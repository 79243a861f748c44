#pragma once

#include <stdexcept>
#include <string>

namespace kis {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested state does not fit in the truncated Fock basis.
class BasisTooSmall : public Error {
public:
    using Error::Error;
};

/// Population leaked into the guard band (or the norm drifted) during propagation.
class TruncationOverflow : public Error {
public:
    TruncationOverflow(const std::string& what, int kick, double tail_mass)
        : Error(what), kick_(kick), tail_mass_(tail_mass) {}

    /// Kick index at which the overflow was detected (-1 when not tied to a kick).
    int kick() const noexcept { return kick_; }
    double tail_mass() const noexcept { return tail_mass_; }

private:
    int kick_;
    double tail_mass_;
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class EigensolverFailure : public Error {
public:
    using Error::Error;
};

/// Newton polish of a period-1 root candidate failed.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain where an operation is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace kis
