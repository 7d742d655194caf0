#pragma once

// Umbrella header: converging lower/upper eigenenergy bounds for
// Schrodinger-type problems with moment-equation representations, via
// orthonormal-polynomial projection of the missing-moment coefficients.

#include "oppq/basis.hpp"
#include "oppq/bound.hpp"
#include "oppq/cache.hpp"
#include "oppq/cdr.hpp"
#include "oppq/config.hpp"
#include "oppq/errors.hpp"
#include "oppq/indexing.hpp"
#include "oppq/linalg.hpp"
#include "oppq/mer.hpp"
#include "oppq/problems.hpp"
#include "oppq/quadrature.hpp"
#include "oppq/real.hpp"
#include "oppq/run.hpp"
#include "oppq/serialize.hpp"
#include "oppq/version.hpp"
#include "oppq/weight.hpp"
