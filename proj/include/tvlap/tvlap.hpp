#pragma once

// Umbrella header for the library part (the CLI lives in simcli.hpp).

#include "tvlap/analysis.hpp"
#include "tvlap/filter.hpp"
#include "tvlap/matrix.hpp"
#include "tvlap/model.hpp"
#include "tvlap/noise.hpp"
#include "tvlap/simgen.hpp"
#include "tvlap/state_space.hpp"
#include "tvlap/verify.hpp"
