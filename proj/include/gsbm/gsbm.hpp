#pragma once

#include "gsbm/config.hpp"
#include "gsbm/eigensolver.hpp"
#include "gsbm/graph.hpp"
#include "gsbm/harness.hpp"
#include "gsbm/io.hpp"
#include "gsbm/model.hpp"
#include "gsbm/operator_spectrum.hpp"
#include "gsbm/procrustes.hpp"
#include "gsbm/random.hpp"
#include "gsbm/spectral.hpp"
#include "gsbm/tree_threshold.hpp"
#include "gsbm/weighing.hpp"
