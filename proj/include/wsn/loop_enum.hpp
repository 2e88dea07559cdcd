#pragma once

#include <set>
#include <string>
#include <vector>

#include "wsn/topology.hpp"

namespace wsn {

/// A simple cycle through a source node, recorded as the closed visit
/// sequence: front() == back() == source, interior nodes pairwise distinct.
struct Loop {
    std::vector<NodeId> nodes;
    bool operator==(const Loop&) const = default;
};

/// Loops sharing their second node: all loops that leave the source along the
/// same line are collected into one block.
struct Block {
    NodeId second_node = 0;
    std::vector<Loop> loops;
};

struct LoopReport {
    NodeId source = 0;
    std::vector<Block> blocks;  // discovery order; only non-empty blocks
    std::size_t nblock = 0;     // == blocks.size()

    std::size_t total_loops() const;
};

/// Orientation- and rotation-invariant identity of a cycle, used to compare
/// enumerations that may discover the same cycle in different directions.
using CycleKey = std::vector<NodeId>;

/// Throws TopologyError if the loop is not a closed simple cycle of at least
/// three distinct nodes.
CycleKey canonicalize(const Loop& loop);

std::string format_loop(const Loop& loop);            // "1->2->3->1"
std::string format_cycle_key(const CycleKey& key);    // "1-2-3"

/// All simple cycles through `source`, each exactly once, grouped into blocks.
/// Search order per block: depth first over the incidence rows in line-id
/// order; after a block is exhausted its starting line is removed, so a cycle
/// is only ever found from its lower-numbered source line. A source of degree
/// < 2 yields an empty report. Throws TopologyError on an unknown source.
LoopReport enumerate_loops_from_source(const Topology& topo, NodeId source);

/// Every simple cycle of the graph exactly once: sources are taken in
/// ascending node id, each enumerated on the network with all previous
/// sources' lines removed; stops when fewer than three nodes remain.
std::vector<LoopReport> enumerate_all_loops(const Topology& topo);

/// Independent check implementation: exhaustive DFS over simple paths between
/// pairs of the source's neighbors, avoiding the source. Shares no code with
/// the block search above. Returns canonical cycle keys.
std::set<CycleKey> oracle_cycles_through(const Topology& topo, NodeId source);

/// Canonical keys of every loop in a report (for comparisons against the
/// oracle); throws if the report contains duplicate cycles.
std::set<CycleKey> report_keys(const LoopReport& report);

}  // namespace wsn
