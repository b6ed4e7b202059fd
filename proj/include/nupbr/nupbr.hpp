#pragma once

#include "core_types.hpp"
#include "errors.hpp"
#include "measure_change.hpp"
#include "model_zoo.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "strategies.hpp"
#include "verifiers.hpp"
