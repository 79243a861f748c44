#pragma once

// Trapped-ion pulse parameters and their image in the map parameters.
//
// Units: frequencies in rad/s, durations in s, angles in rad.

#include <cmath>

#include "errors.hpp"
#include "map_params.hpp"

namespace kis {

struct IonParams {
    double omega = 0.0;      // carrier Rabi frequency
    double eta = 0.0;        // Lamb-Dicke parameter of the carrier standing wave
    double omega1 = 0.0;     // Raman Rabi frequencies
    double omega2 = 0.0;
    double eta_r = 0.0;      // Raman Lamb-Dicke parameter, delta_k * x0
    double delta1 = 0.0;     // Raman detunings; delta1 - delta2 = 2 nu is not enforced
    double delta2 = 0.0;
    double t_carrier = 0.0;  // carrier pulse duration
    double t_raman = 0.0;    // Raman pulse duration
    /// Electronic state prepared in a sigma_x eigenstate by a pi/2 pulse.
    bool sigma_x_prepared = true;
};

struct CarrierMap {
    double theta;
    double mu;
    /// Readout precession rate Omega eta^2 / 2.
    double phi;
};

struct RamanMap {
    double kappa;
    double g;
};

inline CarrierMap carrier_to_map(const IonParams& ion) {
    const double eta2 = ion.eta * ion.eta;
    return {ion.t_carrier * ion.omega * eta2,
            ion.t_carrier * ion.omega * eta2 * eta2 / 2.0,
            ion.omega * eta2 / 2.0};
}

inline double raman_kappa(const IonParams& ion) {
    if (ion.delta1 == 0.0 || ion.delta2 == 0.0) {
        throw DomainError("Raman detunings must be non-zero");
    }
    return ion.omega1 * ion.omega2 * ion.eta_r * ion.eta_r / (8.0 * ion.delta1 * ion.delta2);
}

inline RamanMap raman_to_map(const IonParams& ion) {
    const double kappa = raman_kappa(ion);
    return {kappa, std::exp(kappa * ion.t_raman)};
}

/// Carrier duration that produces rotation angle theta.
inline double required_carrier_time(double theta, const IonParams& ion) {
    const double rate = ion.omega * ion.eta * ion.eta;
    if (rate == 0.0) throw DomainError("carrier coupling Omega eta^2 is zero");
    return theta / rate;
}

/// Raman duration that produces gain g.
inline double required_raman_time(double g, const IonParams& ion) {
    if (!(g > 0.0)) throw DomainError("gain must be positive");
    const double kappa = raman_kappa(ion);
    if (kappa == 0.0) throw DomainError("Raman coupling kappa is zero");
    return std::log(g) / kappa;
}

inline MapParams to_map_params(const IonParams& ion, int kicks = 0) {
    if (!ion.sigma_x_prepared) {
        throw DomainError("the nonlinear rotation requires the sigma_x-eigenstate preparation");
    }
    const CarrierMap c = carrier_to_map(ion);
    const RamanMap r = raman_to_map(ion);
    MapParams p{c.theta, c.mu, r.kappa * ion.t_raman, kicks};
    p.validate();
    return p;
}

}  // namespace kis
