#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "map_params.hpp"
#include "parallel.hpp"

namespace kis {

struct ClassicalPoint {
    double x1 = 0.0;
    double x2 = 0.0;

    double radius_sq() const { return x1 * x1 + x2 * x2; }
    friend bool operator==(const ClassicalPoint&, const ClassicalPoint&) = default;
};

/// One kick of the classical map: rotate by theta + mu R^2 (pre-kick R^2),
/// then stretch X1 by g and compress X2 by 1/g.
inline ClassicalPoint classical_kick(const ClassicalPoint& p, const MapParams& params) {
    const double g = params.gain();
    const double angle = params.theta + params.mu * p.radius_sq();
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {g * (c * p.x1 + s * p.x2), (c * p.x2 - s * p.x1) / g};
}

/// Analytic Jacobian of classical_kick, including the R^2 dependence of the angle.
inline Eigen::Matrix2d jacobian(const ClassicalPoint& p, const MapParams& params) {
    const double g = params.gain();
    const double angle = params.theta + params.mu * p.radius_sq();
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    // d/d(angle) of the rotated point
    const double u = -s * p.x1 + c * p.x2;
    const double v = -c * p.x1 - s * p.x2;
    const double d1 = 2.0 * params.mu * p.x1;
    const double d2 = 2.0 * params.mu * p.x2;
    Eigen::Matrix2d j;
    j << g * (c + u * d1), g * (s + u * d2),
         (-s + v * d1) / g, (c + v * d2) / g;
    return j;
}

// ---------------------------------------------------------------------------
// Poincare sections

inline constexpr double kDefaultEscapeRadiusSq = 1e4;

struct OrbitRecord {
    std::size_t seed_id = 0;
    /// points[k] is the state after k kicks; the last point is the escaping one
    /// when escape_kick is set.
    std::vector<ClassicalPoint> points;
    std::optional<int> escape_kick;
};

/// Uniform n x n grid of seeds over [lo, hi]^2, row-major in x2 then x1.
inline std::vector<ClassicalPoint> seed_grid(int n, double lo, double hi) {
    if (n < 1) throw DomainError("seed grid needs at least one point per side");
    std::vector<ClassicalPoint> seeds;
    seeds.reserve(static_cast<std::size_t>(n) * n);
    const double step = n > 1 ? (hi - lo) / (n - 1) : 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            seeds.push_back({lo + step * j, lo + step * i});
        }
    }
    return seeds;
}

inline OrbitRecord iterate_orbit(const ClassicalPoint& seed, const MapParams& params, int n_kicks,
                                 double escape_radius_sq = kDefaultEscapeRadiusSq) {
    OrbitRecord orbit;
    orbit.points.reserve(static_cast<std::size_t>(n_kicks) + 1);
    orbit.points.push_back(seed);
    ClassicalPoint p = seed;
    for (int k = 1; k <= n_kicks; ++k) {
        p = classical_kick(p, params);
        orbit.points.push_back(p);
        if (!(p.radius_sq() <= escape_radius_sq)) {
            orbit.escape_kick = k;
            break;
        }
    }
    return orbit;
}

/// Stroboscopic orbits of every seed, in seed order.
inline std::vector<OrbitRecord> poincare_section(std::span<const ClassicalPoint> seeds,
                                                 const MapParams& params, int n_kicks,
                                                 double escape_radius_sq = kDefaultEscapeRadiusSq,
                                                 unsigned threads = 1) {
    if (n_kicks < 1) throw DomainError("Poincare section needs at least one kick");
    params.validate();
    std::vector<OrbitRecord> orbits(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t i) {
        orbits[i] = iterate_orbit(seeds[i], params, n_kicks, escape_radius_sq);
        orbits[i].seed_id = i;
    });
    return orbits;
}

// ---------------------------------------------------------------------------
// Gaussian ensembles

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent stream for sample `index` under `seed`, so samples can be drawn in any order.
inline std::uint64_t stream_state(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t mixed = splitmix64(s);
    std::uint64_t t = mixed ^ (index * 0xD1B54A32D192ED03ULL);
    return splitmix64(t);
}

/// Uniform in (0, 1].
inline double unit_open_closed(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace detail

/// Standard-normal pair for sample `index` (Box-Muller on a per-sample stream).
inline std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = detail::stream_state(seed, index);
    const double u1 = detail::unit_open_closed(detail::splitmix64(state));
    const double u2 = detail::unit_open_closed(detail::splitmix64(state));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Quadrature standard deviation of the vacuum / coherent states (variance 1/4).
inline constexpr double kVacuumQuadratureSigma = 0.5;

struct Ensemble {
    std::vector<ClassicalPoint> points;
    std::uint64_t rng_seed = 0;
};

inline Ensemble gaussian_ensemble(const ClassicalPoint& center, std::size_t n, std::uint64_t seed,
                                  double sigma = kVacuumQuadratureSigma) {
    if (n < 1) throw DomainError("ensemble needs at least one point");
    Ensemble ens;
    ens.rng_seed = seed;
    ens.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [z1, z2] = normal_pair(seed, i);
        ens.points[i] = {center.x1 + sigma * z1, center.x2 + sigma * z2};
    }
    return ens;
}

/// Offset subtracted from <R^2> so the vacuum-moment ensemble has energy 0,
/// matching <n> for the quantum vacuum.
inline constexpr double kClassicalEnergyOffset = 0.5;

/// E_k = <X1^2 + X2^2> - 1/2 after k = 0..n_kicks kicks.
///
/// Points are summed in fixed blocks combined in block order, so the result
/// does not depend on the thread count.
inline std::vector<double> ensemble_energy_trace(const Ensemble& ens, const MapParams& params,
                                                 int n_kicks, unsigned threads = 1) {
    constexpr std::size_t kBlock = 4096;
    if (n_kicks < 0) throw DomainError("kick count must be non-negative");
    params.validate();
    const std::size_t n = ens.points.size();
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    const std::size_t width = static_cast<std::size_t>(n_kicks) + 1;
    std::vector<double> partial(blocks * width, 0.0);
    parallel_for(blocks, threads, [&](std::size_t b) {
        double* sums = partial.data() + b * width;
        const std::size_t end = std::min(n, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < end; ++i) {
            ClassicalPoint p = ens.points[i];
            sums[0] += p.radius_sq();
            for (std::size_t k = 1; k < width; ++k) {
                p = classical_kick(p, params);
                sums[k] += p.radius_sq();
            }
        }
    });
    std::vector<double> energy(width, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t k = 0; k < width; ++k) energy[k] += partial[b * width + k];
    }
    for (double& e : energy) e = e / static_cast<double>(n) - kClassicalEnergyOffset;
    return energy;
}

/// cos^2(phi_tau * E_k), the classical counterpart of the readout probability.
inline std::vector<double> classical_readout(std::span<const double> energy, double phi_tau) {
    std::vector<double> out(energy.size());
    for (std::size_t k = 0; k < energy.size(); ++k) {
        const double c = std::cos(phi_tau * energy[k]);
        out[k] = c * c;
    }
    return out;
}

}  // namespace kis
