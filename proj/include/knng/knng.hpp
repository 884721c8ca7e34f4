#pragma once

#include "knng/dataset.hpp"
#include "knng/descent.hpp"
#include "knng/distance.hpp"
#include "knng/graph.hpp"
#include "knng/oracle.hpp"
#include "knng/permutation.hpp"
#include "knng/reorder.hpp"
#include "knng/selection.hpp"
