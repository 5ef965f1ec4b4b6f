#pragma once

#include "bcm/benchmark.hpp"
#include "bcm/estimation.hpp"
#include "bcm/grid.hpp"
#include "bcm/likelihood.hpp"
#include "bcm/metrics.hpp"
#include "bcm/model.hpp"
#include "bcm/msm.hpp"
#include "bcm/optimize.hpp"
#include "bcm/report.hpp"
#include "bcm/rng.hpp"
#include "bcm/scenarios.hpp"
#include "bcm/trace_io.hpp"
