#pragma once

#include "ftle/bench.hpp"
#include "ftle/core.hpp"
#include "ftle/error.hpp"
#include "ftle/flows.hpp"
#include "ftle/io.hpp"
#include "ftle/kernels.hpp"
#include "ftle/parallel.hpp"
