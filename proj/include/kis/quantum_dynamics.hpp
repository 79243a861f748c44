#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fock_space.hpp"
#include "map_params.hpp"

namespace kis {

/// One kick of the quantum map: squeeze first, then the intensity-dependent rotation.
struct KickPropagator {
    MapParams params;
    FockBasis basis;
    Operator u_nl;
    Operator u_pa;
    Operator u_kick;

    CVector apply(const CVector& amps) const { return u_kick.matrix * amps; }
};

inline Operator nonlinear_rotation(const FockBasis& basis, double theta, double mu) {
    CMatrix m = CMatrix::Zero(basis.dim(), basis.dim());
    for (int n = 0; n < basis.dim(); ++n) {
        const double phase = theta * n + 0.5 * mu * n * (n - 1.0);
        m(n, n) = std::polar(1.0, -phase);
    }
    return {basis, std::move(m)};
}

inline KickPropagator build_kick(const MapParams& params, const FockBasis& basis) {
    params.validate();
    Operator u_nl = nonlinear_rotation(basis, params.theta, params.mu);
    Operator u_pa = expm_unitary(squeeze_generator(basis, params.r));
    // u_nl is diagonal, so the product only rescales rows of u_pa.
    CMatrix kick = u_nl.matrix.diagonal().asDiagonal() * u_pa.matrix;
    Operator u_kick{basis, std::move(kick)};
    return {params, basis, std::move(u_nl), std::move(u_pa), std::move(u_kick)};
}

struct TrajectoryFailure {
    int kick;
    double tail_mass;
    std::string reason;
};

/// States after kicks 0..n (index = kick number).
struct Trajectory {
    std::vector<QuantumState> states;
    /// |norm - 1| measured before renormalizing, per kick (0 for the initial state).
    std::vector<double> norm_drift;
    std::optional<TrajectoryFailure> failure;
};

inline constexpr double kMaxNormDrift = 1e-10;

/// Iterates the map, stopping early (with failure set) on guard-band overflow.
inline Trajectory try_evolve(const QuantumState& initial, const KickPropagator& prop, int n_kicks,
                             double eps_tail = kDefaultTailTolerance) {
    if (!(initial.basis() == prop.basis)) {
        throw DomainError("state and propagator live on different bases");
    }
    if (n_kicks < 0) {
        throw DomainError("kick count must be non-negative");
    }
    Trajectory traj;
    traj.states.reserve(static_cast<std::size_t>(n_kicks) + 1);
    traj.norm_drift.reserve(static_cast<std::size_t>(n_kicks) + 1);

    const double guard0 = initial.guard_population();
    traj.states.emplace_back(initial.basis(), initial.amps(), std::max(initial.tail_mass(), guard0));
    traj.norm_drift.push_back(0.0);
    if (guard0 > eps_tail) {
        traj.failure = TrajectoryFailure{0, guard0, "initial state populates the guard band"};
        return traj;
    }

    CVector amps = initial.amps();
    for (int k = 1; k <= n_kicks; ++k) {
        amps = prop.apply(amps);
        const double norm = amps.norm();
        const double drift = std::abs(norm - 1.0);
        amps /= norm;
        QuantumState next(prop.basis, amps, 0.0);
        const double guard = next.guard_population();
        traj.states.emplace_back(prop.basis, amps, guard);
        traj.norm_drift.push_back(drift);
        if (guard > eps_tail) {
            traj.failure = TrajectoryFailure{k, guard, "guard-band population exceeded tolerance"};
            return traj;
        }
        if (drift > kMaxNormDrift) {
            traj.failure = TrajectoryFailure{k, guard, "norm drift exceeded tolerance"};
            return traj;
        }
    }
    return traj;
}

/// Like try_evolve but throws TruncationOverflow carrying the failing kick.
inline Trajectory evolve(const QuantumState& initial, const KickPropagator& prop, int n_kicks,
                         double eps_tail = kDefaultTailTolerance) {
    Trajectory traj = try_evolve(initial, prop, n_kicks, eps_tail);
    if (traj.failure) {
        const auto& f = *traj.failure;
        throw TruncationOverflow(f.reason + " at kick " + std::to_string(f.kick) +
                                     " (tail mass " + std::to_string(f.tail_mass) + ")",
                                 f.kick, f.tail_mass);
    }
    return traj;
}

inline std::vector<double> number_distribution(const QuantumState& state) {
    std::vector<double> p(static_cast<std::size_t>(state.basis().dim()));
    for (int n = 0; n < state.basis().dim(); ++n) p[n] = std::norm(state.amps()[n]);
    return p;
}

inline double mean_number(const QuantumState& state) {
    double acc = 0.0;
    for (int n = 1; n < state.basis().dim(); ++n) acc += n * std::norm(state.amps()[n]);
    return acc;
}

/// Readout probability sum_n P(n) cos^2(phi_tau * n).
inline double ground_state_probability(std::span<const double> p, double phi_tau) {
    double acc = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        const double c = std::cos(phi_tau * static_cast<double>(n));
        acc += p[n] * c * c;
    }
    return acc;
}

/// Quasi-energy decomposition of the one-kick operator, sorted by eigenphase.
struct FloquetSpectrum {
    Eigen::VectorXd eigenphases;  // in (-pi, pi]
    CMatrix eigenvectors;         // columns
    Eigen::VectorXd overlaps;     // |<phi_k|psi>|^2 for the analysed state

    Eigen::VectorXd overlaps_of(const QuantumState& state) const {
        return (eigenvectors.adjoint() * state.amps()).cwiseAbs2();
    }
};

struct FloquetAnalysis {
    FloquetSpectrum spectrum;
    /// Inverse participation ratio 1 / sum_k p_k^2.
    double participation;
};

inline double inverse_participation(const Eigen::VectorXd& populations) {
    return 1.0 / populations.squaredNorm();
}

inline FloquetAnalysis floquet_analysis(const KickPropagator& prop, const QuantumState& state) {
    constexpr double kNormalityTol = 1e-8;
    if (!(state.basis() == prop.basis)) {
        throw DomainError("state and propagator live on different bases");
    }
    if (unitarity_defect(prop.u_kick) > 1e-8) {
        throw EigensolverFailure("kick operator is not unitary on the non-guard block");
    }

    // Schur form of a normal matrix is diagonal with a unitary basis, which
    // stays orthonormal inside degenerate eigenspaces.
    Eigen::ComplexSchur<CMatrix> schur(prop.u_kick.matrix);
    if (schur.info() != Eigen::Success) {
        throw EigensolverFailure("complex Schur decomposition failed");
    }
    const CMatrix& t = schur.matrixT();
    const int dim = prop.basis.dim();
    double off_diag = 0.0;
    for (int j = 1; j < dim; ++j) {
        off_diag = std::max(off_diag, t.col(j).head(j).cwiseAbs().maxCoeff());
    }
    if (off_diag > kNormalityTol) {
        throw EigensolverFailure("Schur factor not diagonal (off-diagonal " +
                                 std::to_string(off_diag) + ")");
    }

    std::vector<std::pair<double, int>> order(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
        double phase = std::arg(t(k, k));
        if (phase <= -std::numbers::pi) phase += 2.0 * std::numbers::pi;
        order[k] = {phase, k};
    }
    std::sort(order.begin(), order.end());

    FloquetSpectrum spec;
    spec.eigenphases.resize(dim);
    spec.eigenvectors.resize(dim, dim);
    for (int k = 0; k < dim; ++k) {
        spec.eigenphases[k] = order[k].first;
        spec.eigenvectors.col(k) = schur.matrixU().col(order[k].second);
    }
    spec.overlaps = spec.overlaps_of(state);
    const double ipr = inverse_participation(spec.overlaps);
    return {std::move(spec), ipr};
}

}  // namespace kis
