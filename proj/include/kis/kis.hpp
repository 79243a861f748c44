#pragma once

#include "classical_dynamics.hpp"
#include "errors.hpp"
#include "fock_space.hpp"
#include "ion_params.hpp"
#include "map_params.hpp"
#include "parallel.hpp"
#include "quantum_dynamics.hpp"
#include "stability_analysis.hpp"
