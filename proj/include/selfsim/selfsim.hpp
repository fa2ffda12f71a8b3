#pragma once

/// @file selfsim.hpp
/// @brief Umbrella header for the numerical library (the CLI lives in cli.hpp).

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/field_io.hpp"
#include "selfsim/gas.hpp"
#include "selfsim/hodge.hpp"
#include "selfsim/linear.hpp"
#include "selfsim/potential.hpp"
#include "selfsim/quasipotential.hpp"
#include "selfsim/regime.hpp"
#include "selfsim/vorticity.hpp"
