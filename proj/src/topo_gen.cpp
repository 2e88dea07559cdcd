#include "wsn/topo_gen.hpp"

#include <deque>
#include <random>
#include <set>
#include <vector>

namespace wsn {

namespace {

// Same fixed-point-free reduction as the simulator: top 53 generator bits
// scaled into [0, 1), identical on every platform.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

bool connected(const Topology& topo) {
    const auto& nodes = topo.nodes();
    if (nodes.empty()) return false;
    std::set<NodeId> seen{topo.base_station()};
    std::deque<NodeId> frontier{topo.base_station()};
    while (!frontier.empty()) {
        const NodeId here = frontier.front();
        frontier.pop_front();
        for (NodeId nb : topo.neighbors(here))
            if (seen.insert(nb).second) frontier.push_back(nb);
    }
    return seen.size() == nodes.size();
}

}  // namespace

Topology generate_topology(std::size_t n, double width, double height, double range,
                           std::uint64_t seed) {
    if (n == 0) throw TopologyError("cannot generate an empty network");
    if (width < 0 || height < 0) throw TopologyError("field dimensions must not be negative");
    if (range <= 0) throw TopologyError("radio range must be positive");
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<NodePlacement> placements;
        placements.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            NodePlacement p;
            p.id = static_cast<NodeId>(i);
            p.x = unit_uniform(rng) * width;
            p.y = unit_uniform(rng) * height;
            p.range = range;
            placements.push_back(p);
        }
        Topology topo = build_unit_disk(placements, 0);
        if (connected(topo)) return topo;
    }
    throw TopologyError("no connected placement found in 1000 attempts");
}

}  // namespace wsn
