#pragma once

#include "matchlab/assignment.hpp"
#include "matchlab/bounds.hpp"
#include "matchlab/core.hpp"
#include "matchlab/cutoff.hpp"
#include "matchlab/densities.hpp"
#include "matchlab/harness.hpp"
#include "matchlab/network_simplex.hpp"
#include "matchlab/numerics.hpp"
#include "matchlab/partition.hpp"
#include "matchlab/random.hpp"
#include "matchlab/transport.hpp"
