#pragma once

/// \file irlw.hpp
/// \brief Umbrella header.

#include "irlw/errors.hpp"
#include "irlw/geometry.hpp"
#include "irlw/constants.hpp"
#include "irlw/regression.hpp"
#include "irlw/problems.hpp"
#include "irlw/solver.hpp"
#include "irlw/analysis.hpp"
#include "irlw/config.hpp"
#include "irlw/experiment.hpp"
