#pragma once

#include "vasculink/channel.hpp"
#include "vasculink/detect.hpp"
#include "vasculink/error.hpp"
#include "vasculink/flow.hpp"
#include "vasculink/mcsim.hpp"
#include "vasculink/metrics.hpp"
#include "vasculink/network.hpp"
#include "vasculink/parallel.hpp"
#include "vasculink/paths.hpp"
#include "vasculink/random.hpp"
#include "vasculink/spectrum.hpp"
