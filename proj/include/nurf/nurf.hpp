#pragma once

#include "nurf/activation.hpp"
#include "nurf/benchmarks.hpp"
#include "nurf/dataset.hpp"
#include "nurf/error.hpp"
#include "nurf/experiment.hpp"
#include "nurf/geometry.hpp"
#include "nurf/kernels.hpp"
#include "nurf/psi_table.hpp"
#include "nurf/regression.hpp"
#include "nurf/rng.hpp"
#include "nurf/samplers.hpp"
