#pragma once

#include "vbal/baselines.hpp"
#include "vbal/bench.hpp"
#include "vbal/core.hpp"
#include "vbal/density.hpp"
#include "vbal/errors.hpp"
#include "vbal/gkk.hpp"
#include "vbal/io.hpp"
#include "vbal/prdc.hpp"
#include "vbal/quadrature.hpp"
#include "vbal/reduce.hpp"
#include "vbal/rng.hpp"
#include "vbal/serialize.hpp"
#include "vbal/theory.hpp"
