// evtail.hpp: convenience umbrella for the whole library.

#pragma once

#include "evtail/baseline.hpp"
#include "evtail/diagnostics.hpp"
#include "evtail/errors.hpp"
#include "evtail/predict.hpp"
#include "evtail/report.hpp"
#include "evtail/tailfit.hpp"
#include "evtail/threshold.hpp"
#include "evtail/trace.hpp"
#include "evtail/version.hpp"
#include "evtail/workloads.hpp"
