#pragma once

// Umbrella header.
#include "tpsurf/core.hpp"
#include "tpsurf/exact_sum.hpp"
#include "tpsurf/parallel.hpp"
#include "tpsurf/grassmann.hpp"
#include "tpsurf/geometry.hpp"
#include "tpsurf/spatial.hpp"
#include "tpsurf/complex.hpp"
#include "tpsurf/shapes.hpp"
#include "tpsurf/tpe.hpp"
#include "tpsurf/linkdiag.hpp"
#include "tpsurf/regdiag.hpp"
#include "tpsurf/flow.hpp"

namespace tpsurf {
inline constexpr const char* version = "0.1.0";
}
