#pragma once

#include "mua/auction.hpp"
#include "mua/banded_cdf.hpp"
#include "mua/bid_vector.hpp"
#include "mua/distributions.hpp"
#include "mua/ecdf.hpp"
#include "mua/errors.hpp"
#include "mua/harness.hpp"
#include "mua/learners.hpp"
#include "mua/marginal.hpp"
#include "mua/order_stats.hpp"
#include "mua/rng.hpp"
#include "mua/utility.hpp"
