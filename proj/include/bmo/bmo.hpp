#pragma once

#include "bmo/bellman.hpp"
#include "bmo/counterexamples.hpp"
#include "bmo/dyadic.hpp"
#include "bmo/error.hpp"
#include "bmo/functionals.hpp"
#include "bmo/gauge.hpp"
#include "bmo/gauge_spec.hpp"
#include "bmo/oracle.hpp"
#include "bmo/quadrature.hpp"
#include "bmo/random.hpp"
#include "bmo/regularize.hpp"
#include "bmo/rising_sun.hpp"
