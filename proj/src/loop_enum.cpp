#include "wsn/loop_enum.hpp"

#include <algorithm>
#include <sstream>

namespace wsn {

std::size_t LoopReport::total_loops() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.loops.size();
    return n;
}

CycleKey canonicalize(const Loop& loop) {
    const auto& v = loop.nodes;
    if (v.size() < 4) throw TopologyError("loop too short: a cycle needs three nodes");
    if (v.front() != v.back()) throw TopologyError("loop is not closed");
    std::vector<NodeId> seq(v.begin(), v.end() - 1);
    std::set<NodeId> distinct(seq.begin(), seq.end());
    if (distinct.size() != seq.size()) throw TopologyError("loop revisits a node");

    // Lexicographically smallest rotation over both directions.
    const std::size_t k = seq.size();
    CycleKey best;
    for (int dir = 0; dir < 2; ++dir) {
        for (std::size_t start = 0; start < k; ++start) {
            CycleKey cand(k);
            for (std::size_t i = 0; i < k; ++i) cand[i] = seq[(start + i) % k];
            if (best.empty() || cand < best) best = std::move(cand);
        }
        std::reverse(seq.begin(), seq.end());
    }
    return best;
}

std::string format_loop(const Loop& loop) {
    std::ostringstream out;
    for (std::size_t i = 0; i < loop.nodes.size(); ++i) {
        if (i) out << "->";
        out << loop.nodes[i];
    }
    return out.str();
}

std::string format_cycle_key(const CycleKey& key) {
    std::ostringstream out;
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (i) out << '-';
        out << key[i];
    }
    return out.str();
}

namespace {

/// Working state of one block enumeration: the partial loop under
/// construction, the lines it travelled (so a line is never reused within a
/// loop, but becomes free again on backtracking), and a per-level cursor into
/// the incidence row being scanned.
struct SearchState {
    std::vector<NodeId> path;        // path[0] == source
    std::vector<LineId> path_lines;  // path_lines[i] joins path[i] and path[i+1]
    std::vector<std::size_t> cursor; // next row index to try at each level

    bool line_used(LineId line) const {
        return std::find(path_lines.begin(), path_lines.end(), line) != path_lines.end();
    }
    bool node_visited(NodeId id) const {
        return std::find(path.begin(), path.end(), id) != path.end();
    }
};

/// All loops that leave `source` along `start`: depth-first scan of the
/// incidence rows; any remaining source line closes a loop. `m` must no
/// longer contain the starting line itself.
Block search_block(const IncidenceTable& m, NodeId source, const IncidenceTable::Entry& start) {
    Block block;
    block.second_node = start.far;

    SearchState st;
    st.path = {source, start.far};
    st.path_lines = {start.line};
    st.cursor = {0};

    while (!st.cursor.empty()) {
        const NodeId here = st.path.back();
        const auto& row = m.row(here);
        if (st.cursor.back() >= row.size()) {  // row exhausted: step back one level
            st.cursor.pop_back();
            st.path.pop_back();
            st.path_lines.pop_back();
            continue;
        }
        const auto entry = row[st.cursor.back()++];
        if (st.line_used(entry.line)) continue;
        if (entry.far == source) {  // loop closed; keep scanning this row
            Loop loop;
            loop.nodes = st.path;
            loop.nodes.push_back(source);
            block.loops.push_back(std::move(loop));
            continue;
        }
        if (st.node_visited(entry.far)) continue;
        st.path.push_back(entry.far);
        st.path_lines.push_back(entry.line);
        st.cursor.push_back(0);
    }
    return block;
}

/// Enumerate all loops through `source` on the working matrix, consuming the
/// source's lines: each block's starting line is removed once the block is
/// done, so later blocks cannot rediscover its loops backwards. The last
/// remaining source line can start no new loop and is left in place.
LoopReport enumerate_on(IncidenceTable& working, NodeId source) {
    LoopReport report;
    report.source = source;
    while (working.row(source).size() >= 2) {
        const auto start = working.row(source).front();
        working.erase_line(start.line);
        Block block = search_block(working, source, start);
        if (!block.loops.empty()) report.blocks.push_back(std::move(block));
    }
    report.nblock = report.blocks.size();
    return report;
}

}  // namespace

LoopReport enumerate_loops_from_source(const Topology& topo, NodeId source) {
    if (!topo.has_node(source))
        throw TopologyError("unknown source node " + std::to_string(source));
    IncidenceTable working = build_incidence(topo);
    return enumerate_on(working, source);
}

std::vector<LoopReport> enumerate_all_loops(const Topology& topo) {
    std::vector<LoopReport> reports;
    const auto& nodes = topo.nodes();
    if (nodes.size() < 3) return reports;
    IncidenceTable working = build_incidence(topo);
    // The last two nodes cannot carry a three-node cycle of their own.
    for (std::size_t i = 0; i + 2 < nodes.size(); ++i) {
        reports.push_back(enumerate_on(working, nodes[i]));
        working.erase_node_lines(nodes[i]);
    }
    return reports;
}

std::set<CycleKey> report_keys(const LoopReport& report) {
    std::set<CycleKey> keys;
    for (const auto& block : report.blocks)
        for (const auto& loop : block.loops)
            if (!keys.insert(canonicalize(loop)).second)
                throw TopologyError("duplicate cycle in report: " + format_loop(loop));
    return keys;
}

}  // namespace wsn
