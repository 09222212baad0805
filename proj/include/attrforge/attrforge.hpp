#pragma once

// Umbrella header for the attrforge library: finite attractor
// approximations driven by covering certificates, stability-property
// certification on sampled dynamics, and the associated dimension bounds.

#include "attrforge/builder.hpp"
#include "attrforge/capacity.hpp"
#include "attrforge/certifiers.hpp"
#include "attrforge/common.hpp"
#include "attrforge/covering.hpp"
#include "attrforge/metric.hpp"
#include "attrforge/parallel.hpp"
#include "attrforge/pointset_io.hpp"
#include "attrforge/rng.hpp"
#include "attrforge/semigroup.hpp"
#include "attrforge/systems.hpp"
