#include "wsn/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace wsn {

namespace {

const std::vector<NodeId> kEmptyRow;

bool in_range(const NodePlacement& a, const NodePlacement& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dist = std::sqrt(dx * dx + dy * dy);
    return dist <= std::min(a.range, b.range);
}

}  // namespace

bool Topology::has_node(NodeId id) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), id);
}

const std::vector<NodeId>& Topology::neighbors(NodeId id) const {
    auto it = adjacency_.find(id);
    return it == adjacency_.end() ? kEmptyRow : it->second;
}

std::optional<Vec2> Topology::position(NodeId id) const {
    for (const auto& p : placements_)
        if (p.id == id) return Vec2{p.x, p.y};
    return std::nullopt;
}

std::optional<NodePlacement> Topology::placement(NodeId id) const {
    for (const auto& p : placements_)
        if (p.id == id) return p;
    return std::nullopt;
}

std::optional<Edge> Topology::edge_by_line(LineId line) const {
    for (const auto& e : edges_)
        if (e.line == line) return e;
    return std::nullopt;
}

void Topology::index_edges() {
    adjacency_.clear();
    for (NodeId n : nodes_) adjacency_[n];  // nodes with no links get empty rows
    for (const auto& e : edges_) {
        adjacency_[e.a].push_back(e.b);
        adjacency_[e.b].push_back(e.a);
    }
    for (auto& [id, row] : adjacency_) std::sort(row.begin(), row.end());
}

Topology Topology::without_line(LineId line) const {
    if (!edge_by_line(line))
        throw TopologyError("unknown line id " + std::to_string(line));
    Topology t(*this);
    std::erase_if(t.edges_, [&](const Edge& e) { return e.line == line; });
    t.index_edges();
    return t;
}

Topology Topology::without_node(NodeId id) const {
    if (!has_node(id)) throw TopologyError("unknown node id " + std::to_string(id));
    Topology t(*this);
    std::erase(t.nodes_, id);
    std::erase_if(t.edges_, [&](const Edge& e) { return e.a == id || e.b == id; });
    std::erase_if(t.placements_, [&](const NodePlacement& p) { return p.id == id; });
    t.index_edges();
    return t;
}

Topology Topology::with_placement(const NodePlacement& p) const {
    if (!placement_mode()) throw TopologyError("with_placement requires placement mode");
    if (has_node(p.id))
        throw TopologyError("node id " + std::to_string(p.id) + " already exists");
    Topology t(*this);
    LineId next = 0;
    for (const auto& e : t.edges_) next = std::max(next, e.line);
    for (const auto& other : t.placements_) {  // ascending id: deterministic line ids
        if (in_range(other, p)) {
            NodeId a = std::min(other.id, p.id), b = std::max(other.id, p.id);
            t.edges_.push_back(Edge{++next, a, b});
        }
    }
    t.placements_.push_back(p);
    std::sort(t.placements_.begin(), t.placements_.end(),
              [](const NodePlacement& l, const NodePlacement& r) { return l.id < r.id; });
    t.nodes_.insert(std::upper_bound(t.nodes_.begin(), t.nodes_.end(), p.id), p.id);
    std::sort(t.edges_.begin(), t.edges_.end(),
              [](const Edge& l, const Edge& r) { return l.line < r.line; });
    t.index_edges();
    return t;
}

Topology build_unit_disk(const std::vector<NodePlacement>& placements, NodeId base) {
    Topology t;
    t.placements_ = placements;
    std::sort(t.placements_.begin(), t.placements_.end(),
              [](const NodePlacement& l, const NodePlacement& r) { return l.id < r.id; });
    for (std::size_t i = 1; i < t.placements_.size(); ++i)
        if (t.placements_[i].id == t.placements_[i - 1].id)
            throw TopologyError("duplicate node id " + std::to_string(t.placements_[i].id));
    for (const auto& p : t.placements_) t.nodes_.push_back(p.id);
    if (!std::binary_search(t.nodes_.begin(), t.nodes_.end(), base))
        throw TopologyError("base station id " + std::to_string(base) + " is not placed");
    t.base_ = base;
    LineId next = 0;
    for (std::size_t i = 0; i < t.placements_.size(); ++i)
        for (std::size_t j = i + 1; j < t.placements_.size(); ++j)
            if (in_range(t.placements_[i], t.placements_[j]))
                t.edges_.push_back(Edge{++next, t.placements_[i].id, t.placements_[j].id});
    t.index_edges();
    return t;
}

Topology build_explicit(const std::vector<Edge>& edges, const std::vector<NodeId>& extra_nodes,
                        NodeId base) {
    Topology t;
    std::set<LineId> line_ids;
    std::set<std::pair<NodeId, NodeId>> pairs;
    std::set<NodeId> nodes(extra_nodes.begin(), extra_nodes.end());
    nodes.insert(base);
    for (const auto& e : edges) {
        if (e.a == e.b)
            throw TopologyError("self-loop on node " + std::to_string(e.a));
        if (!line_ids.insert(e.line).second)
            throw TopologyError("duplicate line id " + std::to_string(e.line));
        NodeId a = std::min(e.a, e.b), b = std::max(e.a, e.b);
        if (!pairs.insert({a, b}).second)
            throw TopologyError("duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
        t.edges_.push_back(Edge{e.line, a, b});
        nodes.insert(a);
        nodes.insert(b);
    }
    std::sort(t.edges_.begin(), t.edges_.end(),
              [](const Edge& l, const Edge& r) { return l.line < r.line; });
    t.nodes_.assign(nodes.begin(), nodes.end());
    t.base_ = base;
    t.index_edges();
    return t;
}

// --- IncidenceTable ---

const std::vector<IncidenceTable::Entry>& IncidenceTable::row(NodeId id) const {
    auto it = rows_.find(id);
    if (it == rows_.end())
        throw TopologyError("unknown node id " + std::to_string(id));
    return it->second;
}

bool IncidenceTable::has_line(LineId line) const {
    for (const auto& [id, row] : rows_)
        for (const auto& e : row)
            if (e.line == line) return true;
    return false;
}

std::vector<NodeId> IncidenceTable::node_ids() const {
    std::vector<NodeId> ids;
    ids.reserve(rows_.size());
    for (const auto& [id, row] : rows_) ids.push_back(id);
    return ids;
}

std::size_t IncidenceTable::total_entries() const {
    std::size_t n = 0;
    for (const auto& [id, row] : rows_) n += row.size();
    return n;
}

void IncidenceTable::erase_line(LineId line) {
    bool found = false;
    for (auto& [id, row] : rows_) {
        auto before = row.size();
        std::erase_if(row, [&](const Entry& e) { return e.line == line; });
        found = found || row.size() != before;
    }
    if (!found) throw TopologyError("unknown line id " + std::to_string(line));
}

void IncidenceTable::erase_node_lines(NodeId id) {
    auto it = rows_.find(id);
    if (it == rows_.end())
        throw TopologyError("unknown node id " + std::to_string(id));
    it->second.clear();
    for (auto& [other, row] : rows_)
        std::erase_if(row, [&](const Entry& e) { return e.far == id; });
}

IncidenceTable build_incidence(const Topology& topo) {
    IncidenceTable m;
    for (NodeId n : topo.nodes()) m.rows_[n];
    for (const auto& e : topo.edges()) {  // edges ascending by line id
        m.rows_[e.a].push_back({e.line, e.b});
        m.rows_[e.b].push_back({e.line, e.a});
    }
    return m;
}

IncidenceTable remove_line(const IncidenceTable& m, LineId line) {
    IncidenceTable out(m);
    out.erase_line(line);
    return out;
}

IncidenceTable remove_node_lines(const IncidenceTable& m, NodeId id) {
    IncidenceTable out(m);
    out.erase_node_lines(id);
    return out;
}

// --- file format ---

Topology parse_topology(std::istream& in, const std::string& source_name) {
    std::vector<NodePlacement> placements;
    std::vector<Edge> edges;
    std::optional<NodeId> base;
    bool saw_node = false, saw_edge = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok) || tok[0] == '#') continue;
        if (tok == "node") {
            NodePlacement p;
            if (!(ls >> p.id >> p.x >> p.y >> p.range))
                throw ParseError(source_name, lineno, "expected: node <id> <x> <y> <range>");
            placements.push_back(p);
            saw_node = true;
        } else if (tok == "edge") {
            Edge e;
            if (!(ls >> e.line >> e.a >> e.b))
                throw ParseError(source_name, lineno, "expected: edge <line_id> <a> <b>");
            edges.push_back(e);
            saw_edge = true;
        } else if (tok == "base") {
            NodeId id;
            if (!(ls >> id)) throw ParseError(source_name, lineno, "expected: base <id>");
            base = id;
        } else {
            throw ParseError(source_name, lineno, "unknown record '" + tok + "'");
        }
        if (saw_node && saw_edge)
            throw ParseError(source_name, lineno, "node and edge records cannot be mixed");
    }
    if (!saw_node && !saw_edge)
        throw ParseError(source_name, lineno, "no node or edge records");
    try {
        if (saw_node) {
            NodeId b = base ? *base : std::min_element(placements.begin(), placements.end(),
                                                       [](const NodePlacement& l,
                                                          const NodePlacement& r) {
                                                           return l.id < r.id;
                                                       })
                                          ->id;
            return build_unit_disk(placements, b);
        }
        NodeId b = base.value_or([&] {
            NodeId m = std::numeric_limits<NodeId>::max();
            for (const auto& e : edges) m = std::min({m, e.a, e.b});
            return m;
        }());
        return build_explicit(edges, {}, b);
    } catch (const TopologyError& err) {
        throw ParseError(source_name, lineno, err.what());
    }
}

Topology load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return parse_topology(in, path);
}

void write_topology(std::ostream& out, const Topology& topo) {
    if (topo.placement_mode()) {
        for (NodeId n : topo.nodes()) {
            auto p = topo.placement(n);
            char buf[128];
            std::snprintf(buf, sizeof buf, "node %u %.3f %.3f %.3f\n", p->id, p->x, p->y,
                          p->range);
            out << buf;
        }
    } else {
        for (const auto& e : topo.edges())
            out << "edge " << e.line << ' ' << e.a << ' ' << e.b << '\n';
    }
    out << "base " << topo.base_station() << '\n';
}

}  // namespace wsn
