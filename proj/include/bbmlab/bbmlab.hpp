#pragma once

// Convenience umbrella: pulls in the whole library in dependency order.

#include "bbmlab/core.hpp"
#include "bbmlab/kernels.hpp"
#include "bbmlab/geometry.hpp"
#include "bbmlab/geometry_smooth.hpp"
#include "bbmlab/fields.hpp"
#include "bbmlab/quadrature.hpp"
#include "bbmlab/limits.hpp"
#include "bbmlab/config.hpp"
#include "bbmlab/cli.hpp"
