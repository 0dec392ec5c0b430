#pragma once

#include "maximin/baselines.hpp"
#include "maximin/bench.hpp"
#include "maximin/core.hpp"
#include "maximin/data.hpp"
#include "maximin/lagrangian.hpp"
#include "maximin/loss.hpp"
#include "maximin/random.hpp"
#include "maximin/solver.hpp"
#include "maximin/theory.hpp"
