#pragma once

#include <cmath>

#include "errors.hpp"

namespace kis {

/// The map triple shared by the quantum and classical dynamics.
///
/// theta is the linear rotation per kick, mu the intensity-dependent
/// rotation coefficient and r the squeeze parameter, with gain g = e^r.
struct MapParams {
    double theta = 0.0;
    double mu = 0.0;
    double r = 0.0;
    int kicks = 0;

    double gain() const { return std::exp(r); }

    static MapParams from_gain(double theta, double mu, double g, int kicks = 0) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw DomainError("parametric gain g must be finite and positive");
        }
        MapParams p{theta, mu, std::log(g), kicks};
        p.validate();
        return p;
    }

    void validate() const {
        if (!std::isfinite(theta) || !std::isfinite(mu) || !std::isfinite(r)) {
            throw DomainError("map parameters must be finite");
        }
        if (kicks < 0) {
            throw DomainError("kick count must be non-negative");
        }
    }
};

}  // namespace kis
