#pragma once

#include <cstdint>

#include "wsn/topology.hpp"

namespace wsn {

/// Random connected sensor field: n nodes placed uniformly in
/// [0,width] x [0,height], all with the same radio range; node 0 is the base
/// station. Resamples until the unit-disk graph is connected; throws
/// TopologyError after 1000 failed attempts. Deterministic per seed.
Topology generate_topology(std::size_t n, double width, double height, double range,
                           std::uint64_t seed);

}  // namespace wsn
