#pragma once

// Everything except the command-line layer.

#include "gsu/core/error.hpp"
#include "gsu/core/numeric.hpp"
#include "gsu/core/parallel.hpp"
#include "gsu/core/rng.hpp"
#include "gsu/gsucore/gsu_test.hpp"
#include "gsu/gsucore/pvalue.hpp"
#include "gsu/gsucore/spectrum.hpp"
#include "gsu/gsucore/statistic.hpp"
#include "gsu/power/power.hpp"
#include "gsu/qfdist/davies.hpp"
#include "gsu/qfdist/liu.hpp"
#include "gsu/qfdist/mixture.hpp"
#include "gsu/qfdist/montecarlo.hpp"
#include "gsu/qfdist/tail.hpp"
#include "gsu/simkernel/genotype.hpp"
#include "gsu/simkernel/phenotype.hpp"
#include "gsu/simkernel/similarity.hpp"
#include "gsu/simlab/experiment.hpp"
#include "gsu/simlab/simulate.hpp"
#include "gsu/version.hpp"
