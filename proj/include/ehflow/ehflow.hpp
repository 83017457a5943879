#pragma once

// Umbrella header for the energy-harvesting max-flow library.

#include "ehflow/errors.hpp"
#include "ehflow/rate.hpp"
#include "ehflow/network.hpp"
#include "ehflow/convex.hpp"
#include "ehflow/layer_solver.hpp"
#include "ehflow/flowmax.hpp"
#include "ehflow/oracle.hpp"
#include "ehflow/scheduler.hpp"
#include "ehflow/io.hpp"
