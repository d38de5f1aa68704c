#pragma once

#include "hdqkd/decoy_bounds.hpp"
#include "hdqkd/errors.hpp"
#include "hdqkd/estimation.hpp"
#include "hdqkd/finite_stats.hpp"
#include "hdqkd/keyrate.hpp"
#include "hdqkd/mc_sim.hpp"
#include "hdqkd/phys_model.hpp"
#include "hdqkd/scenario.hpp"
#include "hdqkd/security_model.hpp"
#include "hdqkd/sweep.hpp"
