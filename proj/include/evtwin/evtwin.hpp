#ifndef EVTWIN_EVTWIN_HPP
#define EVTWIN_EVTWIN_HPP

#include "evtwin/rng.hpp"
#include "evtwin/energy.hpp"
#include "evtwin/site.hpp"
#include "evtwin/weather.hpp"
#include "evtwin/config.hpp"
#include "evtwin/sim.hpp"
#include "evtwin/metrics.hpp"
#include "evtwin/optimizer.hpp"
#include "evtwin/stats.hpp"
#include "evtwin/experiment.hpp"
#include "evtwin/twin.hpp"

#endif // EVTWIN_EVTWIN_HPP
