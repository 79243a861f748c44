#pragma once

// Linear stability of the origin and of the period-1 orbits of the classical
// kicked map, plus the analytic bifurcation curves in the (r, theta) plane.
//
// Period-1 orbits sit where the rotation angle phi = theta + mu R^2 solves
// tan(phi) = +-sinh r. On branches with cos(phi) > 0 the solutions are true
// fixed points F(p) = p; on branches with cos(phi) < 0 they are antipodal
// orbits F(p) = -p, which are period-1 orbits of the map modulo the p -> -p
// symmetry. Both kinds share the stability test 0 < mu R^2 tan(phi) < 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "classical_dynamics.hpp"
#include "errors.hpp"
#include "map_params.hpp"

namespace kis {

enum class Stability { Elliptic, Hyperbolic, Parabolic };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::Elliptic: return "elliptic";
        case Stability::Hyperbolic: return "hyperbolic";
        case Stability::Parabolic: return "parabolic";
    }
    return "?";
}

/// Width of the band around |trace| = 2 reported as Parabolic.
inline constexpr double kParabolicTolerance = 1e-9;

/// Area-preserving classification from the Jacobian trace.
inline Stability classify_trace(double trace, double tol = kParabolicTolerance) {
    const double d = std::abs(trace) - 2.0;
    if (std::abs(d) <= tol) return Stability::Parabolic;
    return d < 0.0 ? Stability::Elliptic : Stability::Hyperbolic;
}

inline std::array<std::complex<double>, 2> eigenvalues(const Eigen::Matrix2d& j) {
    Eigen::EigenSolver<Eigen::Matrix2d> es(j, false);
    const auto ev = es.eigenvalues();
    return {ev[0], ev[1]};
}

/// Classification from numerically computed eigenvalues: a complex-conjugate
/// pair on the unit circle is elliptic, a real reciprocal pair hyperbolic.
inline Stability classify_eigenvalues(const std::array<std::complex<double>, 2>& ev,
                                      double tol = kParabolicTolerance) {
    const double spread = std::max(std::abs(ev[0]), std::abs(ev[1])) - 1.0;
    const double imag = std::max(std::abs(ev[0].imag()), std::abs(ev[1].imag()));
    if (imag > 0.0 && std::abs(spread) <= tol) return Stability::Elliptic;
    if (imag == 0.0 && spread > tol) return Stability::Hyperbolic;
    return Stability::Parabolic;
}

/// Origin: elliptic iff |cosh r cos theta| < 1 (Jacobian trace 2 cosh r cos theta).
inline Stability origin_stability(const MapParams& params, double tol = kParabolicTolerance) {
    return classify_trace(2.0 * std::cosh(params.r) * std::cos(params.theta), tol);
}

// ---------------------------------------------------------------------------
// Period-1 orbits

enum class OrbitKind { Fixed, Antipodal };

inline const char* to_string(OrbitKind k) { return k == OrbitKind::Fixed ? "fixed" : "antipodal"; }

struct FixedPointRecord {
    ClassicalPoint point;
    double radius_sq = 0.0;
    int quadrant = 0;
    OrbitKind kind = OrbitKind::Fixed;
    std::array<std::complex<double>, 2> eigenvalues{};
    double trace = 0.0;
    Stability stability = Stability::Parabolic;
    /// mu R^2 tan(theta + mu R^2); elliptic iff it lies in (0, 1).
    double criterion = 0.0;
    bool criterion_stable = false;
    /// |F(p) - p| for fixed points, |F(p) + p| for antipodal ones.
    double residual = 0.0;
    bool near_boundary = false;
};

inline int quadrant_of(const ClassicalPoint& p) {
    if (p.x1 >= 0.0) return p.x2 >= 0.0 ? 1 : 4;
    return p.x2 >= 0.0 ? 2 : 3;
}

inline double orbit_residual(const ClassicalPoint& p, const MapParams& params, OrbitKind kind) {
    const ClassicalPoint f = classical_kick(p, params);
    const double sign = kind == OrbitKind::Fixed ? 1.0 : -1.0;
    return std::hypot(f.x1 - sign * p.x1, f.x2 - sign * p.x2);
}

/// Radius R^2 at which tan(theta + mu R^2) = target, one per tangent branch.
struct TangentRoot {
    double radius_sq;
    double angle;
    double target;
};

namespace detail {

// Increasing tan(phi) - target on the open branch (lo, hi) clipped to [a, b].
inline std::optional<double> bisect_tangent(double lo, double hi, double a, double b, double target) {
    const double left = std::max(lo, a);
    const double right = std::min(hi, b);
    if (!(left < right)) return std::nullopt;
    auto h = [&](double phi) { return std::tan(phi) - target; };
    // Open branch ends behave as -inf / +inf.
    const bool left_open = left == lo;
    const bool right_open = right == hi;
    if (!left_open && h(left) > 0.0) return std::nullopt;
    if (!right_open && h(right) < 0.0) return std::nullopt;
    double x0 = left;
    double x1 = right;
    for (int it = 0; it < 200 && x1 - x0 > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x1); ++it) {
        const double mid = 0.5 * (x0 + x1);
        if (mid <= x0 || mid >= x1) break;
        if (h(mid) < 0.0) x0 = mid; else x1 = mid;
    }
    return 0.5 * (x0 + x1);
}

}  // namespace detail

/// Bracket every tangent branch crossing (0, r_sq_max] and bisect both targets +-sinh r.
inline std::vector<TangentRoot> tangent_roots(const MapParams& params, double r_sq_max) {
    if (params.mu == 0.0) throw DomainError("period-1 orbit radii are undefined for mu = 0");
    if (!(r_sq_max > 0.0)) throw DomainError("r_sq_max must be positive");
    const double pi = std::numbers::pi;
    const double phi_a = std::min(params.theta, params.theta + params.mu * r_sq_max);
    const double phi_b = std::max(params.theta, params.theta + params.mu * r_sq_max);
    const double sinh_r = std::sinh(params.r);
    std::vector<double> targets{sinh_r};
    if (sinh_r != 0.0) targets.push_back(-sinh_r);

    std::vector<TangentRoot> roots;
    const long k_first = static_cast<long>(std::floor((phi_a + pi / 2.0) / pi));
    const long k_last = static_cast<long>(std::ceil((phi_b + pi / 2.0) / pi));
    for (long k = k_first; k <= k_last; ++k) {
        const double lo = -pi / 2.0 + k * pi;
        const double hi = pi / 2.0 + k * pi;
        for (double target : targets) {
            const auto phi = detail::bisect_tangent(lo, hi, phi_a, phi_b, target);
            if (!phi) continue;
            const double r_sq = (*phi - params.theta) / params.mu;
            if (r_sq > 0.0 && r_sq <= r_sq_max) roots.push_back({r_sq, *phi, target});
        }
    }
    std::sort(roots.begin(), roots.end(),
              [](const TangentRoot& a, const TangentRoot& b) { return a.radius_sq < b.radius_sq; });
    return roots;
}

struct NewtonResult {
    ClassicalPoint point;
    double residual;
    bool converged;
};

/// Newton iteration on F(p) - sign * p.
inline NewtonResult newton_polish(ClassicalPoint p, const MapParams& params, OrbitKind kind,
                                  int max_iter = 60) {
    constexpr double kTarget = 1e-12;
    const double sign = kind == OrbitKind::Fixed ? 1.0 : -1.0;
    double residual = orbit_residual(p, params, kind);
    for (int it = 0; it < max_iter && residual >= kTarget; ++it) {
        const ClassicalPoint f = classical_kick(p, params);
        const Eigen::Vector2d g(f.x1 - sign * p.x1, f.x2 - sign * p.x2);
        Eigen::Matrix2d dg = jacobian(p, params);
        dg(0, 0) -= sign;
        dg(1, 1) -= sign;
        const double det = dg.determinant();
        if (!std::isfinite(det) || std::abs(det) < 1e-300) break;
        const Eigen::Vector2d step = dg.inverse() * g;
        const ClassicalPoint next{p.x1 - step[0], p.x2 - step[1]};
        const double next_residual = orbit_residual(next, params, kind);
        if (!std::isfinite(next_residual)) break;
        if (next_residual >= residual && step.norm() <= 1e-15 * (1.0 + std::hypot(p.x1, p.x2))) break;
        p = next;
        residual = next_residual;
    }
    return {p, residual, residual < kTarget};
}

inline FixedPointRecord make_record(const ClassicalPoint& p, const MapParams& params, OrbitKind kind) {
    FixedPointRecord rec;
    rec.point = p;
    rec.radius_sq = p.radius_sq();
    rec.quadrant = quadrant_of(p);
    rec.kind = kind;
    const Eigen::Matrix2d j = jacobian(p, params);
    rec.eigenvalues = eigenvalues(j);
    rec.trace = j.trace();
    rec.stability = classify_trace(rec.trace);
    rec.criterion = params.mu * rec.radius_sq * std::tan(params.theta + params.mu * rec.radius_sq);
    rec.criterion_stable = rec.criterion > 0.0 && rec.criterion < 1.0;
    rec.residual = orbit_residual(p, params, kind);
    rec.near_boundary = std::abs(std::abs(rec.trace) - 2.0) <= kParabolicTolerance;
    return rec;
}

/// Default search radius: the partial tangent branch containing theta plus the
/// next two full branches in the direction of increasing mu R^2.
inline double default_r_sq_max(const MapParams& params) {
    if (params.mu == 0.0) throw DomainError("period-1 orbit radii are undefined for mu = 0");
    const double pi = std::numbers::pi;
    const double phi = params.theta;
    double end;
    if (params.mu > 0.0) {
        double first = pi / 2.0 + std::ceil((phi - pi / 2.0) / pi) * pi;
        if (first <= phi) first += pi;
        end = first + 2.0 * pi;
    } else {
        double first = pi / 2.0 + std::floor((phi - pi / 2.0) / pi) * pi;
        if (first >= phi) first -= pi;
        end = first - 2.0 * pi;
    }
    return (end - phi) / params.mu;
}

/// Period-1 orbits (fixed and antipodal) with 0 < R^2 <= r_sq_max, sorted by
/// R^2 then quadrant.
///
/// Each tangent root seeds four candidates on the two slope +-e^{-r} lines;
/// candidates are Newton-polished on the full map as fixed and as antipodal
/// orbits, and only those converging to the same radius on the same line are
/// kept. A root with no surviving candidate raises NoConvergence.
inline std::vector<FixedPointRecord> find_period1_orbits(const MapParams& params, double r_sq_max) {
    params.validate();
    if (params.r == 0.0) {
        throw DomainError("at g = 1 the period-1 orbits form continuous circles");
    }
    const auto roots = tangent_roots(params, r_sq_max);
    const double slope = std::exp(-params.r);

    std::vector<FixedPointRecord> records;
    std::vector<double> failed;
    for (const auto& root : roots) {
        std::vector<ClassicalPoint> accepted;
        std::vector<OrbitKind> kinds;
        for (double m : {-slope, slope}) {
            const double x = std::sqrt(root.radius_sq / (1.0 + m * m));
            for (double side : {1.0, -1.0}) {
                const ClassicalPoint cand{side * x, side * m * x};
                for (OrbitKind kind : {OrbitKind::Fixed, OrbitKind::Antipodal}) {
                    const NewtonResult nr = newton_polish(cand, params, kind);
                    if (!nr.converged) continue;
                    const double scale = std::max(1.0, root.radius_sq);
                    if (std::abs(nr.point.radius_sq() - root.radius_sq) > 1e-6 * scale) continue;
                    if (std::hypot(nr.point.x1 - cand.x1, nr.point.x2 - cand.x2) >
                        1e-6 * std::sqrt(scale)) {
                        continue;
                    }
                    const bool dup = std::any_of(accepted.begin(), accepted.end(), [&](const ClassicalPoint& q) {
                        return std::hypot(q.x1 - nr.point.x1, q.x2 - nr.point.x2) < 1e-8;
                    });
                    if (!dup) {
                        accepted.push_back(nr.point);
                        kinds.push_back(kind);
                    }
                }
            }
        }
        if (accepted.empty()) {
            failed.push_back(root.radius_sq);
            continue;
        }
        for (std::size_t i = 0; i < accepted.size(); ++i) {
            records.push_back(make_record(accepted[i], params, kinds[i]));
        }
    }
    if (!failed.empty()) {
        std::ostringstream msg;
        msg << "Newton polish failed for period-1 roots at R^2 =";
        for (double r2 : failed) msg << ' ' << r2;
        throw NoConvergence(msg.str());
    }
    std::sort(records.begin(), records.end(), [](const FixedPointRecord& a, const FixedPointRecord& b) {
        if (a.radius_sq != b.radius_sq) return a.radius_sq < b.radius_sq;
        return a.quadrant < b.quadrant;
    });
    return records;
}

// ---------------------------------------------------------------------------
// Region labels

struct RegionLabel {
    /// Origin letter followed by one letter per even-quadrant orbit pair, outward.
    std::string letters;
    /// Some classification fell inside the parabolic band.
    bool on_boundary = false;

    /// Letters up to the first hyperbolic orbit pair. mu R^2 tan(phi) grows
    /// with every further even-quadrant pair, so everything beyond it is H too.
    std::string canonical() const {
        const auto h = letters.find('H', 1);
        return h == std::string::npos ? letters : letters.substr(0, h + 1);
    }
};

inline char stability_letter(Stability s) { return s == Stability::Elliptic ? 'E' : 'H'; }

inline RegionLabel label_region(const MapParams& params, std::optional<double> r_sq_max = std::nullopt) {
    const double limit = r_sq_max ? *r_sq_max : default_r_sq_max(params);
    RegionLabel label;
    const Stability origin = origin_stability(params);
    label.letters.push_back(stability_letter(origin));
    label.on_boundary = origin == Stability::Parabolic;

    const auto records = find_period1_orbits(params, limit);
    double last_radius = -1.0;
    for (const auto& rec : records) {
        if (rec.quadrant != 2 && rec.quadrant != 4) continue;
        // The two members of a pair share R^2 up to polishing noise.
        if (last_radius >= 0.0 && std::abs(rec.radius_sq - last_radius) <= 1e-8 * std::max(1.0, last_radius)) {
            continue;
        }
        last_radius = rec.radius_sq;
        label.letters.push_back(stability_letter(rec.stability));
        label.on_boundary = label.on_boundary || rec.stability == Stability::Parabolic;
    }
    return label;
}

// ---------------------------------------------------------------------------
// Bifurcation curves

enum class CurveFamily { Solid, Dashed };

inline const char* to_string(CurveFamily f) { return f == CurveFamily::Solid ? "solid" : "dashed"; }

/// Origin boundary theta = sign * arccos(1 / cosh r) + n pi.
inline double solid_curve_theta(double r, int n, int sign) {
    return sign * std::acos(1.0 / std::cosh(r)) + n * std::numbers::pi;
}

/// Period-1 stability boundary theta = arctan(sinh r) - 1 / sinh r + n pi.
inline double dashed_curve_theta(double r, int n) {
    if (r == 0.0) throw DomainError("dashed bifurcation curve is singular at r = 0");
    const double s = std::sinh(r);
    return std::atan(s) - 1.0 / s + n * std::numbers::pi;
}

struct BifurcationCurve {
    CurveFamily family;
    int n;
    int sign;
    std::vector<std::pair<double, double>> points;  // (r, theta)
};

struct CurveRequest {
    double r_lo = 0.0;  // exclusive
    double r_hi = 2.0;  // inclusive
    int samples = 200;
    int n_min = -1;
    int n_max = 1;
    bool solid = true;
    bool dashed = true;
};

/// Samples r_i = r_lo + (r_hi - r_lo) (i + 1) / samples, i = 0..samples-1.
inline std::vector<BifurcationCurve> bifurcation_curves(const CurveRequest& req) {
    if (!(req.r_hi > req.r_lo) || req.samples < 1 || req.n_max < req.n_min) {
        throw DomainError("empty bifurcation curve request");
    }
    if (req.dashed && req.r_lo < 0.0) {
        throw DomainError("dashed bifurcation curves need a strictly positive r range");
    }
    std::vector<double> rs(static_cast<std::size_t>(req.samples));
    for (int i = 0; i < req.samples; ++i) {
        rs[i] = req.r_lo + (req.r_hi - req.r_lo) * (i + 1.0) / req.samples;
    }
    std::vector<BifurcationCurve> curves;
    for (int n = req.n_min; n <= req.n_max; ++n) {
        if (req.solid) {
            for (int sign : {1, -1}) {
                BifurcationCurve c{CurveFamily::Solid, n, sign, {}};
                for (double r : rs) c.points.emplace_back(r, solid_curve_theta(r, n, sign));
                curves.push_back(std::move(c));
            }
        }
        if (req.dashed) {
            BifurcationCurve c{CurveFamily::Dashed, n, 1, {}};
            for (double r : rs) c.points.emplace_back(r, dashed_curve_theta(r, n));
            curves.push_back(std::move(c));
        }
    }
    return curves;
}

}  // namespace kis
