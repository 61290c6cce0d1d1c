#pragma once

#include "treecp/calculators.hpp"
#include "treecp/cmj.hpp"
#include "treecp/common.hpp"
#include "treecp/coupling.hpp"
#include "treecp/ctmc.hpp"
#include "treecp/estimators.hpp"
#include "treecp/lazy_tree.hpp"
#include "treecp/offspring.hpp"
#include "treecp/parallel.hpp"
#include "treecp/process.hpp"
#include "treecp/records.hpp"
#include "treecp/restriction.hpp"
#include "treecp/rng.hpp"
#include "treecp/stats.hpp"
#include "treecp/topology.hpp"
