#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wsn/types.hpp"

namespace wsn {

struct NodePlacement {
    NodeId id = 0;
    double x = 0.0;
    double y = 0.0;
    double range = 0.0;
};

// Undirected link; endpoints stored with a < b.
struct Edge {
    LineId line = 0;
    NodeId a = 0;
    NodeId b = 0;

    bool operator==(const Edge&) const = default;
};

/// Static network graph. Two construction modes:
///  - placement mode: nodes have coordinates and radio ranges, links are
///    derived (unit disk: within range of both endpoints);
///  - explicit mode: links are given directly, no geometry.
/// Immutable; "modified" topologies are new values.
class Topology {
  public:
    Topology() = default;

    const std::vector<NodeId>& nodes() const { return nodes_; }       // ascending
    const std::vector<Edge>& edges() const { return edges_; }         // ascending LineId
    NodeId base_station() const { return base_; }
    bool placement_mode() const { return !placements_.empty(); }

    bool has_node(NodeId id) const;
    const std::vector<NodeId>& neighbors(NodeId id) const;  // ascending
    std::optional<Vec2> position(NodeId id) const;
    std::optional<NodePlacement> placement(NodeId id) const;
    std::optional<Edge> edge_by_line(LineId line) const;
    std::size_t degree(NodeId id) const { return neighbors(id).size(); }

    /// Topology with one link removed (keeps all nodes and other line ids).
    Topology without_line(LineId line) const;
    /// Topology with a node and all its links removed.
    Topology without_node(NodeId id) const;
    /// Placement mode only: add a node and recompute its unit-disk links.
    /// Existing line ids are preserved; new links get fresh ascending ids.
    Topology with_placement(const NodePlacement& p) const;

    friend Topology build_unit_disk(const std::vector<NodePlacement>& placements, NodeId base);
    friend Topology build_explicit(const std::vector<Edge>& edges,
                                   const std::vector<NodeId>& extra_nodes, NodeId base);

  private:
    void index_edges();

    std::vector<NodeId> nodes_;
    std::vector<Edge> edges_;
    std::vector<NodePlacement> placements_;  // empty in explicit mode
    NodeId base_ = 0;
    std::map<NodeId, std::vector<NodeId>> adjacency_;
};

/// Derive links from geometry: a-b linked iff dist(a,b) <= min(range a, range b).
/// Line ids are assigned 1,2,... over edges sorted by (min id, max id), so the
/// same placements always yield the same topology. Throws TopologyError on
/// duplicate node ids or a base id that is not placed.
Topology build_unit_disk(const std::vector<NodePlacement>& placements, NodeId base);

/// Explicit link list (abstract graphs). Node set is the union of endpoints,
/// extra_nodes and the base id. Rejects self-loops, duplicate line ids and
/// duplicate node pairs.
Topology build_explicit(const std::vector<Edge>& edges,
                        const std::vector<NodeId>& extra_nodes, NodeId base);

/// Line-node incidence structure driving the loop search: one row per node,
/// listing incident lines with the node on the far end. Rows keep their
/// construction order (ascending line id); removals preserve relative order.
class IncidenceTable {
  public:
    struct Entry {
        LineId line = 0;
        NodeId far = 0;
        bool operator==(const Entry&) const = default;
    };

    IncidenceTable() = default;

    const std::vector<Entry>& row(NodeId id) const;  // throws on unknown node
    bool has_node(NodeId id) const { return rows_.count(id) != 0; }
    bool has_line(LineId line) const;
    std::vector<NodeId> node_ids() const;  // ascending
    std::size_t total_entries() const;     // sum of row lengths (= 2 * lines)

    bool operator==(const IncidenceTable&) const = default;

    friend IncidenceTable build_incidence(const Topology& topo);
    friend IncidenceTable remove_line(const IncidenceTable& m, LineId line);
    friend IncidenceTable remove_node_lines(const IncidenceTable& m, NodeId id);

    // In-place variants for the loop search's working copy.
    void erase_line(LineId line);      // throws if absent
    void erase_node_lines(NodeId id);  // throws if node unknown

  private:
    std::map<NodeId, std::vector<Entry>> rows_;
};

IncidenceTable build_incidence(const Topology& topo);
IncidenceTable remove_line(const IncidenceTable& m, LineId line);
IncidenceTable remove_node_lines(const IncidenceTable& m, NodeId id);

/// Topology file, line oriented:
///   node <id> <x> <y> <range>     (placement mode)
///   edge <line_id> <a> <b>        (explicit mode)
///   base <id>
///   # comment / blank lines ignored
/// node and edge records must not be mixed. Without a base record the
/// smallest node id is the base station.
Topology parse_topology(std::istream& in, const std::string& source_name);
Topology load_topology(const std::string& path);
void write_topology(std::ostream& out, const Topology& topo);

}  // namespace wsn
