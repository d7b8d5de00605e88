#pragma once

#include "mixlab/adapted_walks.hpp"
#include "mixlab/binomial.hpp"
#include "mixlab/chain_core.hpp"
#include "mixlab/coupling_sst.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/geometry_bounds.hpp"
#include "mixlab/graph_builders.hpp"
#include "mixlab/group_walks.hpp"
#include "mixlab/longrange.hpp"
#include "mixlab/random.hpp"
#include "mixlab/spectral_metrics.hpp"

namespace mixlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mixlab
