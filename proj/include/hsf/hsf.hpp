#pragma once

#include "hsf/error.hpp"
#include "hsf/basis.hpp"
#include "hsf/ops.hpp"
#include "hsf/model.hpp"
#include "hsf/timeseries.hpp"
#include "hsf/floquet.hpp"
#include "hsf/frag.hpp"
#include "hsf/obs.hpp"
