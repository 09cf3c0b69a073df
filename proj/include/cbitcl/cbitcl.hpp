#pragma once

// Umbrella header: CBI-time-changed Levy models, their Fourier-Laplace
// transforms, exponential-moment explosion times, Esscher-type measure
// changes, Monte Carlo simulation and Fourier call pricing.

#include "cbitcl/errors.hpp"
#include "cbitcl/levy_spec.hpp"
#include "cbitcl/measure.hpp"
#include "cbitcl/mechanisms.hpp"
#include "cbitcl/model_io.hpp"
#include "cbitcl/moments.hpp"
#include "cbitcl/numeric.hpp"
#include "cbitcl/pricing.hpp"
#include "cbitcl/quadrature.hpp"
#include "cbitcl/riccati.hpp"
#include "cbitcl/rng.hpp"
#include "cbitcl/simulate.hpp"
