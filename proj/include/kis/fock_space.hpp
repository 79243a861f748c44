#pragma once

// Truncated Fock-basis states and operators for a single bosonic mode.
//
// Quadrature convention: a = X1 + i X2, so [X1, X2] = i/2 and
// X1^2 + X2^2 = a^dagger a + 1/2. The vacuum has Var(X1) = Var(X2) = 1/4.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "errors.hpp"

namespace kis {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Default bound on population allowed in the guard band.
inline constexpr double kDefaultTailTolerance = 1e-8;
/// Fraction of the top levels reserved as guard band.
inline constexpr double kDefaultGuardFraction = 0.1;
inline constexpr int kDefaultDim = 128;

class FockBasis {
public:
    explicit FockBasis(int dim = kDefaultDim, double guard_fraction = kDefaultGuardFraction)
        : dim_(dim) {
        if (dim < 2) {
            throw DomainError("Fock basis needs at least two levels, got " + std::to_string(dim));
        }
        if (!(guard_fraction >= 0.0 && guard_fraction < 1.0)) {
            throw DomainError("guard fraction must lie in [0, 1)");
        }
        guard_ = std::clamp(static_cast<int>(std::ceil(guard_fraction * dim)), 1, dim - 1);
    }

    int dim() const noexcept { return dim_; }
    int guard_levels() const noexcept { return guard_; }
    /// Levels n < first_guard_level() are the trusted, non-guard part of the basis.
    int first_guard_level() const noexcept { return dim_ - guard_; }

    friend bool operator==(const FockBasis&, const FockBasis&) = default;

private:
    int dim_;
    int guard_;
};

/// Pure state over a truncated Fock basis.
///
/// tail_mass is the truncation loss estimate carried with the state: the
/// discarded analytic weight for constructed states, the guard-band
/// population for propagated ones.
class QuantumState {
public:
    QuantumState(FockBasis basis, CVector amps, double tail_mass = 0.0)
        : basis_(basis), amps_(std::move(amps)), tail_mass_(tail_mass) {
        if (amps_.size() != basis_.dim()) {
            throw DomainError("amplitude vector length does not match basis dimension");
        }
    }

    /// Rescales amps to unit norm.
    static QuantumState normalized(FockBasis basis, CVector amps, double tail_mass = 0.0) {
        const double n = amps.norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw DomainError("cannot normalize a zero or non-finite state");
        }
        amps /= n;
        return QuantumState(basis, std::move(amps), tail_mass);
    }

    const FockBasis& basis() const noexcept { return basis_; }
    const CVector& amps() const noexcept { return amps_; }
    double tail_mass() const noexcept { return tail_mass_; }
    double norm() const { return amps_.norm(); }

    double guard_population() const {
        const int first = basis_.first_guard_level();
        return amps_.tail(basis_.dim() - first).squaredNorm();
    }

private:
    FockBasis basis_;
    CVector amps_;
    double tail_mass_;
};

struct Operator {
    FockBasis basis;
    CMatrix matrix;
};

inline QuantumState fock_state(const FockBasis& basis, int n) {
    if (n < 0 || n >= basis.dim()) {
        throw BasisTooSmall("Fock level " + std::to_string(n) + " outside basis of dimension " +
                            std::to_string(basis.dim()));
    }
    CVector amps = CVector::Zero(basis.dim());
    amps[n] = 1.0;
    return QuantumState(basis, std::move(amps));
}

namespace detail {

// Poisson weight sum_{n >= first} e^{-m} m^n / n!, summed directly so that
// tiny tails are not lost to cancellation against 1.
inline double poisson_upper_tail(double mean, int first) {
    if (mean == 0.0) return 0.0;
    const double log_mean = std::log(mean);
    double total = 0.0;
    for (int n = first;; ++n) {
        const double term = std::exp(-mean + n * log_mean - std::lgamma(n + 1.0));
        total += term;
        if (n > mean && term < 1e-300 + total * 1e-17) break;
    }
    return total;
}

}  // namespace detail

/// Coherent state |alpha> normalized over the truncated basis.
inline QuantumState coherent_state(const FockBasis& basis, Complex alpha,
                                   double eps_tail = kDefaultTailTolerance) {
    const double mod = std::abs(alpha);
    const double mean = mod * mod;
    if (!(mean + 6.0 * mod + 10.0 < basis.dim())) {
        throw BasisTooSmall("coherent state |alpha| = " + std::to_string(mod) +
                            " needs more than " + std::to_string(basis.dim()) + " levels");
    }
    const double discarded = detail::poisson_upper_tail(mean, basis.dim());
    if (discarded > eps_tail) {
        throw BasisTooSmall("coherent state discards Poisson weight " + std::to_string(discarded));
    }
    CVector amps(basis.dim());
    amps[0] = std::exp(-0.5 * mean);
    for (int n = 1; n < basis.dim(); ++n) {
        amps[n] = amps[n - 1] * alpha / std::sqrt(static_cast<double>(n));
    }
    return QuantumState::normalized(basis, std::move(amps), discarded);
}

/// <a> = <X1> + i <X2>.
inline Complex mean_annihilation(const QuantumState& state) {
    const CVector& c = state.amps();
    Complex acc = 0.0;
    for (int n = 1; n < c.size(); ++n) {
        acc += std::conj(c[n - 1]) * std::sqrt(static_cast<double>(n)) * c[n];
    }
    return acc;
}

inline Operator annihilation_operator(const FockBasis& basis) {
    CMatrix m = CMatrix::Zero(basis.dim(), basis.dim());
    for (int n = 1; n < basis.dim(); ++n) {
        m(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return {basis, std::move(m)};
}

/// a^dagger a: diagonal n.
inline Operator number_operator(const FockBasis& basis) {
    CMatrix m = CMatrix::Zero(basis.dim(), basis.dim());
    for (int n = 0; n < basis.dim(); ++n) m(n, n) = static_cast<double>(n);
    return {basis, std::move(m)};
}

/// (a^dagger)^2 a^2: diagonal n(n-1).
inline Operator nonlinear_operator(const FockBasis& basis) {
    CMatrix m = CMatrix::Zero(basis.dim(), basis.dim());
    for (int n = 0; n < basis.dim(); ++n) m(n, n) = static_cast<double>(n) * (n - 1);
    return {basis, std::move(m)};
}

/// Anti-Hermitian exponent (r/2)((a^dagger)^2 - a^2) of the squeeze kick.
inline Operator squeeze_generator(const FockBasis& basis, double r) {
    CMatrix m = CMatrix::Zero(basis.dim(), basis.dim());
    for (int n = 0; n + 2 < basis.dim(); ++n) {
        const double e = 0.5 * r * std::sqrt((n + 1.0) * (n + 2.0));
        m(n + 2, n) = e;
        m(n, n + 2) = -e;
    }
    return {basis, std::move(m)};
}

/// max |(U^dagger U - I)_ij| over the non-guard block (or the whole matrix).
inline double unitarity_defect(const Operator& u, bool exclude_guard = true) {
    const int k = exclude_guard ? u.basis.first_guard_level() : u.basis.dim();
    const CMatrix gram = u.matrix.adjoint() * u.matrix;
    const CMatrix block = gram.topLeftCorner(k, k) - CMatrix::Identity(k, k);
    return block.cwiseAbs().maxCoeff();
}

inline double anti_hermitian_defect(const CMatrix& k) {
    return (k + k.adjoint()).cwiseAbs().maxCoeff();
}

/// exp(K) for anti-Hermitian K by scaling and squaring with a Taylor kernel.
///
/// Taylor terms multiply by a sparse copy of the scaled generator, so banded
/// generators cost O(dim^2) per term; only the squarings are dense products.
/// The result is checked a posteriori: the unitarity defect on the non-guard
/// block must stay below 1e-10, otherwise ConvergenceFailure is thrown.
inline Operator expm_unitary(const Operator& k) {
    constexpr double kAntiHermitianTol = 1e-12;
    constexpr double kMaxDefect = 1e-10;
    constexpr double kScaledNorm = 2.0;
    constexpr int kMaxTerms = 80;

    const int dim = k.basis.dim();
    if (k.matrix.rows() != dim || k.matrix.cols() != dim) {
        throw DomainError("generator shape does not match its basis");
    }
    if (anti_hermitian_defect(k.matrix) > kAntiHermitianTol) {
        throw DomainError("expm_unitary requires an anti-Hermitian generator");
    }

    // Induced 1-norm.
    const double norm1 = k.matrix.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > kScaledNorm) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / kScaledNorm)));
    }
    const double scale = std::ldexp(1.0, squarings);
    const Eigen::SparseMatrix<Complex> a = (k.matrix / scale).sparseView();
    const double a_norm = norm1 / scale;

    CMatrix result = CMatrix::Identity(dim, dim);
    CMatrix term = CMatrix::Identity(dim, dim);
    double term_bound = 1.0;
    bool converged = a_norm == 0.0;
    for (int j = 1; j <= kMaxTerms && !converged; ++j) {
        term = (term * a) / static_cast<double>(j);
        result += term;
        term_bound *= a_norm / j;
        // Remaining series is bounded by a geometric tail of the next term.
        const double ratio = a_norm / (j + 2);
        if (ratio < 1.0 && term_bound * a_norm / (j + 1) / (1.0 - ratio) < 1e-18) {
            converged = true;
        }
    }
    if (!converged) {
        throw ConvergenceFailure("Taylor kernel did not converge");
    }
    for (int s = 0; s < squarings; ++s) {
        result = (result * result).eval();
    }

    Operator u{k.basis, std::move(result)};
    const double defect = unitarity_defect(u);
    if (!(defect <= kMaxDefect)) {
        throw ConvergenceFailure("matrix exponential unitarity defect " + std::to_string(defect));
    }
    return u;
}

}  // namespace kis
