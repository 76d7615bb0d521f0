#pragma once

#include "hant/ants.hpp"
#include "hant/clustering.hpp"
#include "hant/error.hpp"
#include "hant/maintenance.hpp"
#include "hant/net_model.hpp"
#include "hant/qos_metrics.hpp"
#include "hant/rng.hpp"
#include "hant/routing.hpp"
#include "hant/scenario.hpp"
#include "hant/sim.hpp"
#include "hant/sweep.hpp"
#include "hant/trace.hpp"
