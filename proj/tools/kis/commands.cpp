#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#ifdef KIS_CLI11_SINGLE_HEADER
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <kis/kis.hpp>

namespace kis::cli {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Output helpers

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_metadata(std::ostream& out, const std::string& command, const Config& cfg,
                    const std::vector<std::pair<std::string, std::string>>& extra = {}) {
    out << "# kis " << kVersion << '\n';
    out << "# command = " << command << '\n';
    out << "# generated = " << utc_timestamp() << '\n';
    for (const auto& [key, value] : cfg.resolved()) {
        out << "# config." << key << " = " << value << '\n';
    }
    for (const auto& [key, value] : extra) {
        out << "# " << key << " = " << value << '\n';
    }
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

std::string fmt(double v) { return format_double(v); }

void write_ok(std::ostream& out) { out << "# status = ok\n"; }

// ---------------------------------------------------------------------------
// Config blocks. Every block reads all of its keys before any computation.

const std::set<std::string> kCommonKeys{"seed"};
const std::set<std::string> kMapKeys{"theta", "mu", "g", "r", "kicks"};
const std::set<std::string> kQuantumKeys{"dim", "guard_fraction", "eps_tail", "center_x1", "center_x2",
                                         "phi_tau"};
const std::set<std::string> kClassicalKeys{"ensemble", "center_x1", "center_x2", "phi_tau"};

std::set<std::string> merge(std::initializer_list<std::set<std::string>> sets) {
    std::set<std::string> out;
    for (const auto& s : sets) out.insert(s.begin(), s.end());
    return out;
}

[[noreturn]] void field_error(const std::string& key, const std::string& msg) {
    throw ConfigError("field '" + key + "': " + msg);
}

MapParams read_map(Config& cfg, double default_g, long default_kicks) {
    if (cfg.has("g") && cfg.has("r")) {
        throw ConfigError("fields 'g' and 'r' are mutually exclusive");
    }
    MapParams p;
    p.theta = cfg.get_double("theta", 2.0 * kPi);
    p.mu = cfg.get_double("mu", 0.01 * kPi);
    if (cfg.has("r")) {
        p.r = cfg.get_double("r", 0.0);
    } else {
        const double g = cfg.get_double("g", default_g);
        if (!(g > 0.0)) field_error("g", "gain must be positive");
        p.r = std::log(g);
    }
    const long kicks = cfg.get_int("kicks", default_kicks);
    if (kicks < 0 || kicks > 1'000'000) field_error("kicks", "must lie in [0, 1e6]");
    p.kicks = static_cast<int>(kicks);
    return p;
}

std::uint64_t read_seed(Config& cfg) { return cfg.get_u64("seed", 1); }

ClassicalPoint read_center(Config& cfg) {
    return {cfg.get_double("center_x1", 0.0), cfg.get_double("center_x2", 0.0)};
}

struct QuantumBlock {
    int dim;
    double guard_fraction;
    double eps_tail;
    ClassicalPoint center;
    double phi_tau;
};

QuantumBlock read_quantum(Config& cfg) {
    QuantumBlock q;
    const long dim = cfg.get_int("dim", kDefaultDim);
    if (dim < 2 || dim > 4096) field_error("dim", "must lie in [2, 4096]");
    q.dim = static_cast<int>(dim);
    q.guard_fraction = cfg.get_double("guard_fraction", kDefaultGuardFraction);
    if (!(q.guard_fraction > 0.0 && q.guard_fraction < 1.0)) field_error("guard_fraction", "must lie in (0, 1)");
    q.eps_tail = cfg.get_double("eps_tail", kDefaultTailTolerance);
    if (!(q.eps_tail > 0.0 && q.eps_tail <= 1.0)) field_error("eps_tail", "must lie in (0, 1]");
    q.center = read_center(cfg);
    q.phi_tau = cfg.get_double("phi_tau", 0.01);
    return q;
}

struct ClassicalBlock {
    std::size_t ensemble;
    ClassicalPoint center;
    double phi_tau;
};

ClassicalBlock read_classical(Config& cfg) {
    ClassicalBlock c;
    const long n = cfg.get_int("ensemble", 100000);
    if (n < 1 || n > 100'000'000) field_error("ensemble", "must lie in [1, 1e8]");
    c.ensemble = static_cast<std::size_t>(n);
    c.center = read_center(cfg);
    c.phi_tau = cfg.get_double("phi_tau", 0.01);
    return c;
}

// ---------------------------------------------------------------------------
// Quantum / classical traces

struct QuantumTrace {
    std::vector<double> mean_n;
    std::vector<double> p_g;
    std::vector<double> tail;
    std::optional<TrajectoryFailure> failure;
};

QuantumTrace quantum_trace(const MapParams& params, const QuantumBlock& q) {
    const FockBasis basis(q.dim, q.guard_fraction);
    const QuantumState psi0 = coherent_state(basis, Complex(q.center.x1, q.center.x2), q.eps_tail);
    const KickPropagator prop = build_kick(params, basis);
    const Trajectory traj = try_evolve(psi0, prop, params.kicks, q.eps_tail);
    QuantumTrace out;
    for (const auto& s : traj.states) {
        out.mean_n.push_back(mean_number(s));
        out.p_g.push_back(ground_state_probability(number_distribution(s), q.phi_tau));
        out.tail.push_back(s.tail_mass());
    }
    out.failure = traj.failure;
    return out;
}

void write_failure(std::ostream& out, const TrajectoryFailure& f) {
    out << "# status = failed: TruncationOverflow at kick " << f.kick << " (tail_mass " << fmt(f.tail_mass)
        << "): " << f.reason << '\n';
}

const std::pair<std::string, std::string> kEnergyNote{
    "note", "E_classical = <X1^2 + X2^2> - 1/2 so the vacuum-moment ensemble starts at 0 like <n>"};

int cmd_quantum(Config& cfg, std::ostream& out) {
    cfg.require_known(merge({kCommonKeys, kMapKeys, kQuantumKeys}));
    read_seed(cfg);
    const MapParams params = read_map(cfg, 1.2, 100);
    const QuantumBlock q = read_quantum(cfg);

    const QuantumTrace trace = quantum_trace(params, q);
    write_metadata(out, "quantum", cfg);
    write_row(out, {"kick", "mean_n", "P_g", "tail_mass"});
    for (std::size_t k = 0; k < trace.mean_n.size(); ++k) {
        write_row(out, {std::to_string(k), fmt(trace.mean_n[k]), fmt(trace.p_g[k]), fmt(trace.tail[k])});
    }
    if (trace.failure) {
        write_failure(out, *trace.failure);
        return kExitNumeric;
    }
    write_ok(out);
    return kExitOk;
}

int cmd_classical(Config& cfg, std::ostream& out) {
    cfg.require_known(merge({kCommonKeys, kMapKeys, kClassicalKeys}));
    const std::uint64_t seed = read_seed(cfg);
    const MapParams params = read_map(cfg, 1.2, 100);
    const ClassicalBlock c = read_classical(cfg);

    const Ensemble ens = gaussian_ensemble(c.center, c.ensemble, seed);
    const auto energy = ensemble_energy_trace(ens, params, params.kicks, thread_budget());
    const auto readout = classical_readout(energy, c.phi_tau);
    write_metadata(out, "classical", cfg, {kEnergyNote});
    write_row(out, {"kick", "E_classical", "cos2_phi_tau_E"});
    for (std::size_t k = 0; k < energy.size(); ++k) {
        write_row(out, {std::to_string(k), fmt(energy[k]), fmt(readout[k])});
    }
    write_ok(out);
    return kExitOk;
}

int cmd_compare(Config& cfg, std::ostream& out) {
    cfg.require_known(merge({kCommonKeys, kMapKeys, kQuantumKeys, kClassicalKeys}));
    const std::uint64_t seed = read_seed(cfg);
    const MapParams params = read_map(cfg, 1.2, 100);
    const QuantumBlock q = read_quantum(cfg);
    const ClassicalBlock c = read_classical(cfg);

    const QuantumTrace trace = quantum_trace(params, q);
    const Ensemble ens = gaussian_ensemble(c.center, c.ensemble, seed);
    const auto energy = ensemble_energy_trace(ens, params, params.kicks, thread_budget());
    const auto readout = classical_readout(energy, c.phi_tau);

    write_metadata(out, "compare", cfg, {kEnergyNote});
    write_row(out, {"kick", "mean_n", "P_g", "E_classical", "cos2_phi_tau_E", "tail_mass"});
    for (std::size_t k = 0; k < trace.mean_n.size(); ++k) {
        write_row(out, {std::to_string(k), fmt(trace.mean_n[k]), fmt(trace.p_g[k]), fmt(energy[k]),
                        fmt(readout[k]), fmt(trace.tail[k])});
    }
    if (trace.failure) {
        write_failure(out, *trace.failure);
        return kExitNumeric;
    }
    write_ok(out);
    return kExitOk;
}

int cmd_poincare(Config& cfg, std::ostream& out) {
    cfg.require_known(merge({kCommonKeys, kMapKeys, {"grid_n", "grid_min", "grid_max", "escape_r_sq"}}));
    read_seed(cfg);
    const MapParams params = read_map(cfg, 1.0, 500);
    if (params.kicks < 1) field_error("kicks", "Poincare sections need at least one kick");
    const long grid_n = cfg.get_int("grid_n", 20);
    if (grid_n < 1 || grid_n > 2000) field_error("grid_n", "must lie in [1, 2000]");
    const double lo = cfg.get_double("grid_min", -3.0);
    const double hi = cfg.get_double("grid_max", 3.0);
    if (!(hi >= lo)) field_error("grid_max", "must not be below grid_min");
    const double escape = cfg.get_double("escape_r_sq", kDefaultEscapeRadiusSq);
    if (!(escape > 0.0)) field_error("escape_r_sq", "must be positive");

    const auto seeds = seed_grid(static_cast<int>(grid_n), lo, hi);
    const auto orbits = poincare_section(seeds, params, params.kicks, escape, thread_budget());
    write_metadata(out, "poincare", cfg);
    write_row(out, {"seed_id", "kick", "x1", "x2", "escaped"});
    for (const auto& orbit : orbits) {
        for (std::size_t k = 0; k < orbit.points.size(); ++k) {
            const bool escaped = orbit.escape_kick && static_cast<int>(k) == *orbit.escape_kick;
            write_row(out, {std::to_string(orbit.seed_id), std::to_string(k), fmt(orbit.points[k].x1),
                            fmt(orbit.points[k].x2), escaped ? "1" : "0"});
        }
    }
    write_ok(out);
    return kExitOk;
}

int cmd_bifurcation(Config& cfg, std::ostream& out) {
    cfg.require_known(merge({kCommonKeys,
                             {"r_min", "r_max", "samples", "n_min", "n_max", "label_mu", "label_r_samples",
                              "label_theta_samples", "label_theta_min", "label_theta_max"}}));
    read_seed(cfg);
    CurveRequest req;
    req.r_lo = cfg.get_double("r_min", 0.0);
    req.r_hi = cfg.get_double("r_max", 2.0);
    if (!(req.r_lo >= 0.0)) field_error("r_min", "must be non-negative");
    if (!(req.r_hi > req.r_lo)) field_error("r_max", "must exceed r_min");
    const long samples = cfg.get_int("samples", 200);
    if (samples < 1 || samples > 1'000'000) field_error("samples", "must lie in [1, 1e6]");
    req.samples = static_cast<int>(samples);
    req.n_min = static_cast<int>(cfg.get_int("n_min", -1));
    req.n_max = static_cast<int>(cfg.get_int("n_max", 1));
    if (req.n_max < req.n_min) field_error("n_max", "must not be below n_min");
    const double label_mu = cfg.get_double("label_mu", 0.01 * kPi);
    if (label_mu == 0.0) field_error("label_mu", "must be non-zero");
    const long label_r = cfg.get_int("label_r_samples", 8);
    const long label_t = cfg.get_int("label_theta_samples", 12);
    if (label_r < 0 || label_t < 0 || label_r * label_t > 1'000'000) {
        field_error("label_r_samples", "label grid must be non-negative and at most 1e6 cells");
    }
    const double t_lo = cfg.get_double("label_theta_min", -kPi);
    const double t_hi = cfg.get_double("label_theta_max", 2.0 * kPi);
    if (!(t_hi > t_lo)) field_error("label_theta_max", "must exceed label_theta_min");

    const auto curves = bifurcation_curves(req);
    write_metadata(out, "bifurcation", cfg);
    write_row(out, {"family", "n", "sign", "r", "theta", "label"});
    for (const auto& c : curves) {
        for (const auto& [r, theta] : c.points) {
            write_row(out, {to_string(c.family), std::to_string(c.n), std::to_string(c.sign), fmt(r), fmt(theta), ""});
        }
    }
    // Region labels at cell centres of the label grid.
    for (long i = 0; i < label_r; ++i) {
        const double r = req.r_lo + (req.r_hi - req.r_lo) * (i + 0.5) / label_r;
        for (long j = 0; j < label_t; ++j) {
            const double theta = t_lo + (t_hi - t_lo) * (j + 0.5) / label_t;
            const MapParams p{theta, label_mu, r, 0};
            write_row(out, {"label", "", "", fmt(r), fmt(theta), label_region(p).canonical()});
        }
    }
    write_ok(out);
    return kExitOk;
}

int cmd_fixed_points(Config& cfg, std::ostream& out) {
    cfg.require_known(merge({kCommonKeys, kMapKeys, {"r_sq_max"}}));
    read_seed(cfg);
    const MapParams params = read_map(cfg, 1.5, 0);
    if (params.mu == 0.0) field_error("mu", "period-1 orbits need mu != 0");
    if (params.r == 0.0) field_error("g", "period-1 orbits are degenerate circles at g = 1");
    const double r_sq_max = cfg.get_double("r_sq_max", default_r_sq_max(params));
    if (!(r_sq_max > 0.0)) field_error("r_sq_max", "must be positive");

    const auto records = find_period1_orbits(params, r_sq_max);
    const RegionLabel label = label_region(params, r_sq_max);
    write_metadata(out, "fixed-points", cfg,
                   {{"origin_stability", to_string(origin_stability(params))},
                    {"region_label", label.letters},
                    {"canonical_label", label.canonical()},
                    {"label_on_boundary", label.on_boundary ? "true" : "false"}});
    write_row(out, {"kind", "quadrant", "radius_sq", "x1", "x2", "trace", "eig1_re", "eig1_im", "eig2_re",
                    "eig2_im", "stability", "criterion", "criterion_stable", "residual"});
    for (const auto& rec : records) {
        write_row(out, {to_string(rec.kind), std::to_string(rec.quadrant), fmt(rec.radius_sq), fmt(rec.point.x1),
                        fmt(rec.point.x2), fmt(rec.trace), fmt(rec.eigenvalues[0].real()),
                        fmt(rec.eigenvalues[0].imag()), fmt(rec.eigenvalues[1].real()),
                        fmt(rec.eigenvalues[1].imag()), to_string(rec.stability), fmt(rec.criterion),
                        rec.criterion_stable ? "1" : "0", fmt(rec.residual)});
    }
    write_ok(out);
    return kExitOk;
}

int cmd_floquet(Config& cfg, std::ostream& out) {
    cfg.require_known(merge({kCommonKeys, kMapKeys, kQuantumKeys}));
    read_seed(cfg);
    const MapParams params = read_map(cfg, 1.2, 0);
    const QuantumBlock q = read_quantum(cfg);

    const FockBasis basis(q.dim, q.guard_fraction);
    const QuantumState psi = coherent_state(basis, Complex(q.center.x1, q.center.x2), q.eps_tail);
    const KickPropagator prop = build_kick(params, basis);
    const FloquetAnalysis fa = floquet_analysis(prop, psi);
    write_metadata(out, "floquet", cfg, {{"participation", fmt(fa.participation)}});
    write_row(out, {"index", "eigenphase", "overlap"});
    for (int k = 0; k < fa.spectrum.eigenphases.size(); ++k) {
        write_row(out, {std::to_string(k), fmt(fa.spectrum.eigenphases[k]), fmt(fa.spectrum.overlaps[k])});
    }
    write_ok(out);
    return kExitOk;
}

int cmd_ion_params(Config& cfg, std::ostream& out) {
    static const std::set<std::string> raman_keys{"omega1", "omega2", "eta_r", "delta1", "delta2", "t_raman"};
    cfg.require_known(merge({kCommonKeys, raman_keys,
                             {"omega", "eta", "t_carrier", "target_g", "target_theta", "sigma_x_prepared"}}));
    read_seed(cfg);
    IonParams ion;
    ion.omega = cfg.get_frequency("omega", 1e6);
    ion.eta = cfg.get_double("eta", 0.2);
    ion.t_carrier = cfg.get_duration("t_carrier", 10e-6);
    ion.sigma_x_prepared = cfg.get_bool("sigma_x_prepared", true);
    if (!(ion.omega >= 0.0)) field_error("omega", "must be non-negative");
    if (!(ion.t_carrier >= 0.0)) field_error("t_carrier", "must be non-negative");

    std::size_t raman_given = 0;
    for (const auto& k : raman_keys) raman_given += cfg.has(k) ? 1 : 0;
    const bool has_raman = raman_given == raman_keys.size();
    if (raman_given != 0 && !has_raman) {
        throw ConfigError("Raman parameters omega1, omega2, eta_r, delta1, delta2, t_raman must be given together");
    }
    if (has_raman) {
        ion.omega1 = cfg.get_frequency("omega1", 0.0);
        ion.omega2 = cfg.get_frequency("omega2", 0.0);
        ion.eta_r = cfg.get_double("eta_r", 0.0);
        ion.delta1 = cfg.get_frequency("delta1", 0.0);
        ion.delta2 = cfg.get_frequency("delta2", 0.0);
        ion.t_raman = cfg.get_duration("t_raman", 0.0);
        if (ion.delta1 == 0.0 || ion.delta2 == 0.0) field_error("delta1", "Raman detunings must be non-zero");
    }
    const double target_g = cfg.get_double("target_g", 6.0);
    if (!(target_g > 0.0)) field_error("target_g", "must be positive");
    const std::optional<double> target_theta = cfg.get_optional_double("target_theta");

    const CarrierMap cm = carrier_to_map(ion);
    write_metadata(out, "ion-params", cfg);
    out << "carrier pulse\n";
    out << "  Omega      = " << fmt(ion.omega) << " rad/s\n";
    out << "  eta        = " << fmt(ion.eta) << '\n';
    out << "  T_carrier  = " << fmt(ion.t_carrier) << " s\n";
    out << "  theta      = T Omega eta^2       = " << fmt(cm.theta) << " rad\n";
    out << "  mu         = T Omega eta^4 / 2   = " << fmt(cm.mu) << " rad\n";
    out << "  mu / theta = eta^2 / 2           = " << fmt(ion.eta * ion.eta / 2.0) << '\n';
    out << "  phi        = Omega eta^2 / 2     = " << fmt(cm.phi) << " rad/s\n";
    out << "  sigma_x eigenstate prepared: " << (ion.sigma_x_prepared ? "yes" : "no (nonlinear rotation not realised)")
        << '\n';
    if (target_theta) {
        out << "  T_carrier for theta = " << fmt(*target_theta) << ": "
            << fmt(required_carrier_time(*target_theta, ion)) << " s\n";
    }
    out << "raman pulse\n";
    if (has_raman) {
        const RamanMap rm = raman_to_map(ion);
        out << "  kappa      = Omega1 Omega2 eta_R^2 / (8 delta1 delta2) = " << fmt(rm.kappa) << " 1/s\n";
        out << "  g          = exp(kappa T_raman) = " << fmt(rm.g) << '\n';
        out << "  r          = kappa T_raman      = " << fmt(rm.kappa * ion.t_raman) << '\n';
    } else {
        out << "  not configured (set omega1, omega2, eta_r, delta1, delta2, t_raman)\n";
    }
    out << "  target g   = " << fmt(target_g) << " requires kappa T = ln g = " << fmt(std::log(target_g)) << '\n';
    if (has_raman && raman_kappa(ion) != 0.0) {
        out << "  T_raman for target g = " << fmt(required_raman_time(target_g, ion)) << " s\n";
    }
    out << "note: for Omega = 1e6 rad/s, eta = 0.2, T = 10 us these formulas give theta = 0.4 and mu = 0.008;"
           " the frequently quoted estimate theta ~ 1.0, mu ~ 0.02 for the same inputs does not follow from them.\n";
    write_ok(out);
    return kExitOk;
}

using Handler = int (*)(Config&, std::ostream&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table{
        {"poincare", cmd_poincare},   {"quantum", cmd_quantum},       {"classical", cmd_classical},
        {"compare", cmd_compare},     {"bifurcation", cmd_bifurcation}, {"fixed-points", cmd_fixed_points},
        {"floquet", cmd_floquet},     {"ion-params", cmd_ion_params}};
    return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"poincare",    "quantum",      "classical", "compare",
                                                "bifurcation", "fixed-points", "floquet",   "ion-params"};
    return names;
}

int run_command(const std::string& name, Config& cfg, std::ostream& out) {
    const auto it = handlers().find(name);
    if (it == handlers().end()) throw ConfigError("unknown command '" + name + "'");
    return it->second(cfg, out);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kicked nonlinear oscillator: quantum and classical simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    struct Options {
        std::string config;
        std::string out;
        std::vector<std::string> sets;
        std::map<std::string, std::string> flags;
    } opts;

    static const std::vector<std::pair<std::string, std::string>> flag_keys{
        {"--seed", "seed"}, {"--dim", "dim"}, {"--kicks", "kicks"}, {"--g", "g"},
        {"--theta", "theta"}, {"--mu", "mu"}, {"--phi-tau", "phi_tau"}};

    static const std::map<std::string, std::string> summaries{
        {"poincare", "stroboscopic orbits of a seed grid (seed_id,kick,x1,x2,escaped)"},
        {"quantum", "Fock-space trajectory: <n>, P_g and guard-band mass per kick"},
        {"classical", "Gaussian-ensemble mean energy and cos^2(phi_tau E) per kick"},
        {"compare", "quantum and classical traces on one kick axis"},
        {"bifurcation", "origin and period-1 bifurcation curves plus region labels"},
        {"fixed-points", "period-1 orbits with eigenvalues and stability"},
        {"floquet", "quasi-energy spectrum, state overlaps and participation ratio"},
        {"ion-params", "trapped-ion pulse parameters mapped to theta, mu and g"}};

    for (const auto& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name, summaries.at(name));
        sub->add_option("--config", opts.config, "key = value config file");
        sub->add_option("--out", opts.out, "output path (default stdout)");
        sub->add_option("--set", opts.sets, "override any config key, key=value")->take_all();
        for (const auto& [flag, key] : flag_keys) {
            sub->add_option_function<std::string>(
                flag, [&opts, key = key](const std::string& v) { opts.flags[key] = v; }, "override '" + key + "'");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    std::string command;
    for (const auto& name : command_names()) {
        if (app.got_subcommand(name)) command = name;
    }

    try {
        Config cfg = opts.config.empty() ? Config{} : Config::from_file(opts.config);
        for (const auto& kv : opts.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1), {"command line", 0});
        }
        for (const auto& [key, value] : opts.flags) cfg.set(key, value, {"command line", 0});

        if (opts.out.empty()) return run_command(command, cfg, out);

        // Buffer so a config error never leaves a truncated file behind.
        std::ostringstream buffer;
        int code = kExitOk;
        try {
            code = run_command(command, cfg, buffer);
        } catch (...) {
            if (!buffer.str().empty()) {
                std::ofstream partial(opts.out, std::ios::binary);
                partial << buffer.str();
            }
            throw;
        }
        std::ofstream file(opts.out, std::ios::binary);
        if (!file) throw IoError("cannot open output file " + opts.out);
        file << buffer.str();
        file.flush();
        if (!file) throw IoError("failed writing output file " + opts.out);
        return code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const DomainError& e) {
        err << "invalid parameters: " << e.what() << '\n';
        return kExitConfig;
    } catch (const kis::Error& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace kis::cli
