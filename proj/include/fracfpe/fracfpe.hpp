#pragma once

#include "fracfpe/errors.hpp"
#include "fracfpe/specfun.hpp"
#include "fracfpe/quadrature.hpp"
#include "fracfpe/ode.hpp"
#include "fracfpe/frac_ops.hpp"
#include "fracfpe/exact_solutions.hpp"
#include "fracfpe/oracle.hpp"
#include "fracfpe/analysis.hpp"
#include "fracfpe/config.hpp"
#include "fracfpe/csv.hpp"
#include "fracfpe/cli.hpp"
