#pragma once

#include "esnoc/averaging.hpp"
#include "esnoc/config.hpp"
#include "esnoc/control.hpp"
#include "esnoc/errors.hpp"
#include "esnoc/jet.hpp"
#include "esnoc/model.hpp"
#include "esnoc/polynomial.hpp"
#include "esnoc/sim.hpp"
#include "esnoc/sweep.hpp"
#include "esnoc/synth.hpp"
