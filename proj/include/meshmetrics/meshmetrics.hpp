#pragma once

#include "meshmetrics/error.hpp"
#include "meshmetrics/core.hpp"
#include "meshmetrics/random.hpp"
#include "meshmetrics/linksim.hpp"
#include "meshmetrics/metrics.hpp"
#include "meshmetrics/routing.hpp"
#include "meshmetrics/harness.hpp"
#include "meshmetrics/scenario_io.hpp"
