#pragma once

#include "mpm/double_auction.hpp"
#include "mpm/errors.hpp"
#include "mpm/harness.hpp"
#include "mpm/ledger.hpp"
#include "mpm/market.hpp"
#include "mpm/random.hpp"
#include "mpm/scoring.hpp"
#include "mpm/serialization.hpp"
#include "mpm/settlement.hpp"
#include "mpm/solver.hpp"
