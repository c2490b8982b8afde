#pragma once

// Umbrella header for the ergodiff library: ergodic control of pure-jump
// dynamics, their diffusive-limit approximation, policy extraction and
// evaluation, and the experiment harness.

#include "config.hpp"
#include "correction.hpp"
#include "csv.hpp"
#include "empirical.hpp"
#include "errors.hpp"
#include "fd_kernel.hpp"
#include "grid.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "mollify.hpp"
#include "noise.hpp"
#include "policy.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "ratefit.hpp"
#include "residual.hpp"
#include "reward.hpp"
#include "simulate.hpp"
#include "solvers.hpp"
#include "sweep.hpp"
