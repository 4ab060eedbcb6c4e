// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sphcov/assimilation.hpp"
#include "sphcov/covariance.hpp"
#include "sphcov/error.hpp"
#include "sphcov/euclidean.hpp"
#include "sphcov/fitting.hpp"
#include "sphcov/harmonics.hpp"
#include "sphcov/kriging.hpp"
#include "sphcov/linalg.hpp"
#include "sphcov/model_io.hpp"
#include "sphcov/random.hpp"
#include "sphcov/simulation.hpp"
#include "sphcov/sphere_geometry.hpp"
#include "sphcov/temporal.hpp"
#include "sphcov/validation.hpp"
