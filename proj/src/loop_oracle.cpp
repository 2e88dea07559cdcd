// Brute-force reference for the loop enumeration. Deliberately built on plain
// adjacency sets and recursive path search so it shares nothing with the
// incidence-matrix block search it is checking.

#include <map>

#include "wsn/loop_enum.hpp"

namespace wsn {

namespace {

using Adjacency = std::map<NodeId, std::set<NodeId>>;

void extend_paths(const Adjacency& adj, NodeId here, NodeId goal, NodeId source,
                  std::vector<NodeId>& path, std::set<NodeId>& on_path,
                  std::set<CycleKey>& found) {
    if (here == goal) {
        Loop loop;
        loop.nodes.push_back(source);
        loop.nodes.insert(loop.nodes.end(), path.begin(), path.end());
        loop.nodes.push_back(source);
        found.insert(canonicalize(loop));
        return;
    }
    for (NodeId next : adj.at(here)) {
        if (next == source || on_path.count(next)) continue;
        path.push_back(next);
        on_path.insert(next);
        extend_paths(adj, next, goal, source, path, on_path, found);
        on_path.erase(next);
        path.pop_back();
    }
}

}  // namespace

std::set<CycleKey> oracle_cycles_through(const Topology& topo, NodeId source) {
    if (!topo.has_node(source))
        throw TopologyError("unknown source node " + std::to_string(source));
    Adjacency adj;
    for (NodeId n : topo.nodes()) adj[n];
    for (const auto& e : topo.edges()) {
        adj[e.a].insert(e.b);
        adj[e.b].insert(e.a);
    }

    // Each cycle through the source uses exactly one unordered pair of its
    // neighbors; enumerate simple paths u -> v avoiding the source.
    std::set<CycleKey> found;
    const auto& nbrs = adj[source];
    for (auto u = nbrs.begin(); u != nbrs.end(); ++u) {
        for (auto v = std::next(u); v != nbrs.end(); ++v) {
            std::vector<NodeId> path{*u};
            std::set<NodeId> on_path{*u};
            extend_paths(adj, *u, *v, source, path, on_path, found);
        }
    }
    return found;
}

}  // namespace wsn
