#pragma once

// Umbrella header: continuous magnetic-field sensing with a CPT dark-state
// emitter -- bath simulation, photon statistics, causal Bayesian estimators,
// and the matching Cramer-Rao bounds.

#include "cpt.hpp"        // IWYU pragma: export
#include "crlb.hpp"       // IWYU pragma: export
#include "errors.hpp"     // IWYU pragma: export
#include "estimators.hpp" // IWYU pragma: export
#include "harness.hpp"    // IWYU pragma: export
#include "liouville.hpp"  // IWYU pragma: export
#include "ou.hpp"         // IWYU pragma: export
#include "photon.hpp"     // IWYU pragma: export
#include "quadrature.hpp" // IWYU pragma: export
#include "rng.hpp"        // IWYU pragma: export
#include "scenario.hpp"   // IWYU pragma: export
#include "units.hpp"      // IWYU pragma: export
#include "version.hpp"    // IWYU pragma: export
