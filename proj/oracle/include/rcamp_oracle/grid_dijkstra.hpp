#pragma once

// Shortest path on the 8-connected cell graph of a traversable mask, used as
// the reference length for randomized planner results. Diagonal moves need
// both side cells free so the path never cuts a wall corner.

#include <optional>

#include "rcamp/trav_map.hpp"

namespace rcamp::oracle {

/// Metric length (m) between cell centres, or nullopt when unreachable.
std::optional<double> grid_shortest_path(const trav::TraversableMask& mask, trav::CellIndex start,
                                         trav::CellIndex goal);

}  // namespace rcamp::oracle
