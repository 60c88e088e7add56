#pragma once

// Umbrella header for the whole library.

#include "mallows/experiments.hpp"
#include "mallows/fenwick.hpp"
#include "mallows/oracle.hpp"
#include "mallows/permstat.hpp"
#include "mallows/permutation.hpp"
#include "mallows/qparam.hpp"
#include "mallows/qseries.hpp"
#include "mallows/rng.hpp"
#include "mallows/sampler.hpp"
#include "mallows/stats.hpp"
