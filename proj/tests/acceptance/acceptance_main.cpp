// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <cli_harness.hpp>
#include <thresholds.hpp>

#include <kis/kis.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace kis;
using namespace kis::acceptance;

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Report {
public:
    void fail(const std::string& why) {
        out_.pass = false;
        if (!failures_.empty()) failures_ += "; ";
        failures_ += why;
    }
    void note(const std::string& s) {
        if (!notes_.empty()) notes_ += "; ";
        notes_ += s;
    }
    Outcome done() {
        out_.detail = out_.pass ? notes_ : failures_ + (notes_.empty() ? "" : " | " + notes_);
        return out_;
    }

private:
    Outcome out_;
    std::string failures_, notes_;
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

MapParams full_turn(double g) { return MapParams::from_gain(2.0 * kPi, 0.01 * kPi, g); }

// ---------------------------------------------------------------------------

Outcome unitarity() {
    Report rep;
    const FockBasis basis(kUnitarityDim);
    double worst = 0.0;
    for (double g : {1.0, 1.2, 1.5, 2.0}) {
        const double d = unitarity_defect(build_kick(full_turn(g), basis).u_kick);
        worst = std::max(worst, d);
        if (d > kUnitarityTol) rep.fail("g=" + sci(g) + " defect " + sci(d));
    }
    rep.note("max defect " + sci(worst));
    return rep.done();
}

Outcome squeezed_vacuum() {
    Report rep;
    const FockBasis basis(kSqueezeDim);
    double worst = 0.0;
    for (double g : {1.2, 1.5, 2.0}) {
        const auto traj = evolve(coherent_state(basis, 0.0), build_kick(full_turn(g), basis), 1);
        const double s = std::sinh(std::log(g));
        const double err = std::abs(mean_number(traj.states[1]) - s * s);
        worst = std::max(worst, err);
        if (err > kSqueezeTol) rep.fail("g=" + sci(g) + " error " + sci(err));
    }
    rep.note("max |<n> - sinh^2 r| " + sci(worst));
    return rep.done();
}

Outcome identity_limits() {
    Report rep;
    const FockBasis basis(kRegularDim);
    const auto params = full_turn(1.0);
    const auto traj = evolve(coherent_state(basis, Complex(1.0, 0.5)), build_kick(params, basis), kIdentityKicks);
    double q_worst = 0.0;
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        const auto a = number_distribution(traj.states[k - 1]);
        const auto b = number_distribution(traj.states[k]);
        for (std::size_t n = 0; n < a.size(); ++n) q_worst = std::max(q_worst, std::abs(a[n] - b[n]));
    }
    if (q_worst > kIdentityDistributionTol) rep.fail("P(n) drift " + sci(q_worst));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double c_worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        ClassicalPoint p{u(rng), u(rng)};
        for (int k = 0; k < kIdentityKicks; ++k) {
            const ClassicalPoint q = classical_kick(p, params);
            c_worst = std::max(c_worst, std::abs(q.radius_sq() - p.radius_sq()));
            p = q;
        }
    }
    if (c_worst > kIdentityRadiusTol) rep.fail("R^2 drift " + sci(c_worst));
    rep.note("P(n) per-kick drift " + sci(q_worst) + ", R^2 per-kick drift " + sci(c_worst));
    return rep.done();
}

Outcome origin_criterion() {
    Report rep;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> rd(0.0, 2.5), td(-2.0 * kPi, 2.0 * kPi);
    int compared = 0, mismatched = 0;
    for (int i = 0; i < kOriginDraws; ++i) {
        const MapParams p{td(rng), 0.01 * kPi, rd(rng), 0};
        const double c = std::cosh(p.r) * std::cos(p.theta);
        if (std::abs(2.0 * std::abs(c) - 2.0) <= kBoundaryBand) continue;
        const Stability by_criterion = std::abs(c) < 1.0 ? Stability::Elliptic : Stability::Hyperbolic;
        const Stability by_eigen = classify_eigenvalues(eigenvalues(jacobian({0.0, 0.0}, p)));
        ++compared;
        if (by_criterion != by_eigen || origin_stability(p) != by_criterion) ++mismatched;
    }
    if (mismatched) rep.fail(std::to_string(mismatched) + " of " + std::to_string(compared) + " draws disagree");
    for (double g : {1.2, 1.5, 2.0}) {
        if (origin_stability(full_turn(g)) != Stability::Hyperbolic) rep.fail("origin not a saddle at g=" + sci(g));
    }
    rep.note(std::to_string(compared) + " draws agree; origin hyperbolic at theta=2pi");
    return rep.done();
}

Outcome fixed_points() {
    Report rep;
    std::size_t total = 0;
    double worst_res = 0.0, worst_line = 0.0;
    for (double g : {1.2, 1.5}) {
        const auto params = full_turn(g);
        std::vector<FixedPointRecord> recs;
        try {
            recs = find_period1_orbits(params, default_r_sq_max(params));
        } catch (const std::exception& e) {
            rep.fail(std::string("g=") + sci(g) + ": " + e.what());
            continue;
        }
        if (recs.empty()) rep.fail("no orbits at g=" + sci(g));
        const double m = std::exp(-params.r);
        for (const auto& rec : recs) {
            ++total;
            const double res = orbit_residual(rec.point, params, rec.kind);
            worst_res = std::max(worst_res, res);
            const bool even = rec.quadrant == 2 || rec.quadrant == 4;
            const double slope = even ? -m : m;
            const double line = std::abs(rec.point.x2 - slope * rec.point.x1) / std::hypot(1.0, slope);
            worst_line = std::max(worst_line, line);
            if (res >= kOrbitResidualTol) rep.fail("residual " + sci(res) + " at R^2=" + sci(rec.radius_sq));
            if (line > kOrbitLineTol) rep.fail("off slope line by " + sci(line));
            if (!even && rec.stability != Stability::Hyperbolic) rep.fail("odd-quadrant orbit not hyperbolic");
            const double trace_band = std::abs(std::abs(rec.trace) - 2.0);
            if (trace_band > kBoundaryBand) {
                const bool eig_elliptic = classify_eigenvalues(rec.eigenvalues) == Stability::Elliptic;
                const double v = params.mu * rec.radius_sq * std::tan(params.theta + params.mu * rec.radius_sq);
                const bool criterion = v > 0.0 && v < 1.0;
                if (criterion != eig_elliptic) rep.fail("stability criterion disagrees at R^2=" + sci(rec.radius_sq));
            }
        }
    }
    rep.note(std::to_string(total) + " orbits, max residual " + sci(worst_res) + ", max line offset " +
             sci(worst_line));
    return rep.done();
}

Outcome jacobian_fd() {
    Report rep;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> pu(-3.0, 3.0), tu(-2 * kPi, 2 * kPi), mu(-0.2, 0.2), ru(-1.0, 1.0);
    const double h = kJacobianStep;
    double worst = 0.0;
    for (int i = 0; i < kJacobianDraws; ++i) {
        const MapParams params{tu(rng), mu(rng), ru(rng), 0};
        const ClassicalPoint p{pu(rng), pu(rng)};
        Eigen::Matrix2d fd;
        const auto a = classical_kick({p.x1 + h, p.x2}, params), b = classical_kick({p.x1 - h, p.x2}, params);
        const auto c = classical_kick({p.x1, p.x2 + h}, params), d = classical_kick({p.x1, p.x2 - h}, params);
        fd << (a.x1 - b.x1) / (2 * h), (c.x1 - d.x1) / (2 * h), (a.x2 - b.x2) / (2 * h), (c.x2 - d.x2) / (2 * h);
        const Eigen::Matrix2d j = jacobian(p, params);
        const double rel = (j - fd).norm() / std::max(1.0, j.norm());
        worst = std::max(worst, rel);
    }
    if (worst >= kJacobianRelTol) rep.fail("max relative error " + sci(worst));
    rep.note("max relative error " + sci(worst));
    return rep.done();
}

Outcome correspondence() {
    Report rep;
    struct Case {
        const char* name;
        double g;
        ClassicalPoint center;
    };
    for (const Case& c : {Case{"regular", 1.2, {0.0, 0.0}}, Case{"chaotic", 1.5, {1.0, 0.0}}}) {
        const auto params = full_turn(c.g);
        const FockBasis basis(kCorrespondenceDim);
        const auto traj = evolve(coherent_state(basis, Complex(c.center.x1, c.center.x2)), build_kick(params, basis),
                                 kCorrespondenceKicks);
        const auto energy = ensemble_energy_trace(gaussian_ensemble(c.center, kEnsembleSize, 1), params,
                                                  kCorrespondenceKicks, thread_budget());
        std::string row = std::string(c.name) + ":";
        for (int k = 1; k <= kCorrespondenceKicks; ++k) {
            const double n = mean_number(traj.states[k]);
            const double tol = std::max(kCorrespondenceRelTol * std::abs(n), kCorrespondenceAbsFloor);
            if (std::abs(energy[k] - n) > tol) {
                rep.fail(std::string(c.name) + " kick " + std::to_string(k) + ": <n>=" + sci(n) + " E=" + sci(energy[k]));
            }
            row += " " + sci(n) + "/" + sci(energy[k]);
        }
        rep.note(row);
    }
    return rep.done();
}

Outcome participation_ordering() {
    Report rep;
    const FockBasis basis(kFloquetDim);
    const double regular = floquet_analysis(build_kick(full_turn(1.2), basis), coherent_state(basis, 0.0)).participation;
    const double chaotic = floquet_analysis(build_kick(full_turn(1.5), basis), coherent_state(basis, 1.0)).participation;
    if (!(chaotic > regular)) rep.fail("chaotic " + sci(chaotic) + " <= regular " + sci(regular));
    rep.note("IPR regular " + sci(regular) + ", chaotic " + sci(chaotic));
    return rep.done();
}

std::vector<double> readout_trace(double g, Complex alpha, int dim, double eps_tail, Report& rep) {
    const FockBasis basis(dim);
    const auto traj = try_evolve(coherent_state(basis, alpha), build_kick(full_turn(g), basis), kRevivalKicks, eps_tail);
    if (traj.failure) {
        rep.fail("dim " + std::to_string(dim) + ": " + traj.failure->reason + " at kick " +
                 std::to_string(traj.failure->kick));
    }
    std::vector<double> p_g;
    for (const auto& s : traj.states) {
        const auto p = number_distribution(s);
        p_g.push_back(ground_state_probability(p, kReadoutPhase));
    }
    return p_g;
}

int zero_crossings(const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    int count = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if ((x[i - 1] - mean) * (x[i] - mean) < 0.0) ++count;
    }
    return count;
}

// Windowed variance falls below the collapse fraction of its peak after the peak,
// then recovers above the revival fraction.
bool collapse_and_revival(const std::vector<double>& x, std::string& summary) {
    std::vector<double> var;
    for (std::size_t s = 0; s + kVarianceWindow <= x.size(); ++s) {
        double m = 0.0;
        for (int i = 0; i < kVarianceWindow; ++i) m += x[s + i];
        m /= kVarianceWindow;
        double v = 0.0;
        for (int i = 0; i < kVarianceWindow; ++i) v += (x[s + i] - m) * (x[s + i] - m);
        var.push_back(v / kVarianceWindow);
    }
    const auto peak_it = std::max_element(var.begin(), var.end());
    const double peak = *peak_it;
    double low = peak, recovered = 0.0;
    bool collapsed = false;
    for (auto it = peak_it; it != var.end(); ++it) {
        if (!collapsed) {
            low = std::min(low, *it);
            if (*it < kCollapseFraction * peak) collapsed = true;
        } else {
            recovered = std::max(recovered, *it);
        }
    }
    summary = "window variance min/peak " + sci(low / peak) + ", recovery/peak " + sci(recovered / peak);
    return collapsed && recovered > kRevivalFraction * peak;
}

Outcome revival_structure() {
    Report rep;
    const auto regular = readout_trace(1.2, 0.0, kRegularDim, kDefaultTailTolerance, rep);
    std::string summary;
    if (!collapse_and_revival(regular, summary)) rep.fail("no collapse-revival cycle in the regular trace");
    rep.note("regular: " + summary);

    const auto chaotic = readout_trace(1.5, 1.0, kChaoticDim, kChaoticTailTol, rep);
    const auto check = readout_trace(1.5, 1.0, kChaoticCheckDim, kChaoticTailTol, rep);
    double diff = 0.0;
    for (std::size_t k = 0; k < std::min(chaotic.size(), check.size()); ++k) {
        diff = std::max(diff, std::abs(chaotic[k] - check[k]));
    }
    if (diff >= kChaoticConvergenceTol) rep.fail("chaotic trace not converged in dim: max |dP_g| " + sci(diff));
    const int zr = zero_crossings(regular);
    const int zc = zero_crossings(chaotic);
    if (zero_crossings(check) != zc) rep.fail("chaotic zero-crossing count depends on dim");
    if (!(zc > zr)) rep.fail("zero crossings chaotic " + std::to_string(zc) + " <= regular " + std::to_string(zr));
    rep.note("zero crossings regular " + std::to_string(zr) + ", chaotic " + std::to_string(zc) + " (dim " +
             std::to_string(kChaoticDim) + " vs " + std::to_string(kChaoticCheckDim) + " max |dP_g| " + sci(diff) +
             ")");
    return rep.done();
}

Outcome ion_formulas() {
    Report rep;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    double worst = 0.0;
    auto rel = [&](double got, double want) {
        const double e = want == 0.0 ? std::abs(got) : std::abs(got / want - 1.0);
        worst = std::max(worst, e);
    };
    for (int i = 0; i < kIonDraws; ++i) {
        IonParams ion;
        ion.omega = 2e6 * u(rng);
        ion.eta = 0.3 * u(rng);
        ion.t_carrier = 2e-5 * u(rng);
        ion.omega1 = 1e6 * u(rng);
        ion.omega2 = 1e6 * u(rng);
        ion.eta_r = 0.3 * u(rng);
        ion.delta1 = 1e7 * u(rng);
        ion.delta2 = 1e7 * u(rng);
        ion.t_raman = 1e-3 * u(rng);
        const auto c = carrier_to_map(ion);
        const auto r = raman_to_map(ion);
        // Independent arithmetic, written out term by term.
        const double eta2 = ion.eta * ion.eta;
        const double eta4 = eta2 * eta2;
        const double kappa = (ion.omega1 * ion.omega2) * (ion.eta_r * ion.eta_r) / (8.0 * ion.delta1 * ion.delta2);
        rel(c.theta, ion.t_carrier * ion.omega * eta2);
        rel(c.mu, 0.5 * ion.t_carrier * ion.omega * eta4);
        rel(r.kappa, kappa);
        rel(r.g, std::exp(kappa * ion.t_raman));
        rel(c.mu / c.theta, 0.5 * eta2);
    }
    if (worst > kIonRelTol) rep.fail("max relative error " + sci(worst));
    rep.note("max relative error " + sci(worst));
    return rep.done();
}

Outcome cli_determinism() {
    Report rep;
    const std::string cfg = KIS_CONFIG_DIR;
    const std::vector<std::vector<std::string>> runs{
        {"poincare", "--config", cfg + "/fig2c.cfg", "--kicks", "100"},
        {"quantum", "--kicks", "40"},
        {"classical", "--kicks", "40", "--set", "ensemble=20000", "--seed", "5"},
        {"compare", "--config", cfg + "/fig3.cfg", "--kicks", "20", "--set", "ensemble=20000"},
        {"bifurcation", "--config", cfg + "/bifurcation.cfg"},
        {"fixed-points", "--g", "1.5"},
        {"floquet", "--dim", "64"},
        {"ion-params", "--config", cfg + "/ion.cfg"}};
    for (const auto& args : runs) {
        ::setenv("KIS_THREADS", "1", 1);
        const auto a = kis::testing::run_cli(args);
        ::setenv("KIS_THREADS", "4", 1);
        const auto b = kis::testing::run_cli(args);
        ::unsetenv("KIS_THREADS");
        if (a.code != 0 || b.code != 0) {
            rep.fail(args[0] + " exited " + std::to_string(a.code) + ": " + a.err);
            continue;
        }
        if (kis::testing::strip_timestamp(a.out) != kis::testing::strip_timestamp(b.out)) {
            rep.fail(args[0] + " output differs between runs");
        }
    }
    rep.note(std::to_string(runs.size()) + " subcommands byte-identical across reruns and thread counts");
    return rep.done();
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"unitarity", unitarity},
        {"squeezed-vacuum", squeezed_vacuum},
        {"identity-limits", identity_limits},
        {"origin-criterion", origin_criterion},
        {"fixed-points", fixed_points},
        {"jacobian-finite-difference", jacobian_fd},
        {"quantum-classical-correspondence", correspondence},
        {"participation-ordering", participation_ordering},
        {"revival-structure", revival_structure},
        {"ion-formulas", ion_formulas},
        {"cli-determinism", cli_determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << sci(secs) << " s): " << o.detail << std::endl;
        failed += o.pass ? 0 : 1;
    }
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criterion(s) failed" : "acceptance: all passed")
              << std::endl;
    return failed ? 1 : 0;
}
