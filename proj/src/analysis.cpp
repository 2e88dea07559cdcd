#include "wsn/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <ostream>
#include <sstream>

namespace wsn {

namespace {

/// Rotation- and direction-invariant key of a parent cycle; unlike
/// canonicalize() this also accepts two-node cycles, which the detector must
/// be able to report even though a correct run never produces them.
CycleKey cycle_key(const std::vector<NodeId>& cycle) {
    auto it = std::min_element(cycle.begin(), cycle.end());
    CycleKey forward;
    forward.reserve(cycle.size());
    for (std::size_t i = 0; i < cycle.size(); ++i)
        forward.push_back(cycle[(static_cast<std::size_t>(it - cycle.begin()) + i) %
                                cycle.size()]);
    CycleKey backward;
    backward.reserve(cycle.size());
    backward.push_back(forward.front());
    for (std::size_t i = cycle.size(); i-- > 1;) backward.push_back(forward[i]);
    return std::min(forward, backward);
}

struct RouteFields {
    std::optional<NodeId> parent;
    Hops hops;
    std::uint32_t broken_hops = 0;
    bool pending = false;
};

/// Parse "parent=<p|-> hops=<h|inf> broken=<b> pending=<0|1>".
std::optional<RouteFields> parse_route_details(const std::string& details) {
    std::istringstream in(details);
    RouteFields f;
    std::string tok;
    bool saw_parent = false, saw_hops = false;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) return std::nullopt;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        try {
            if (key == "parent") {
                if (val != "-") f.parent = static_cast<NodeId>(std::stoul(val));
                saw_parent = true;
            } else if (key == "hops") {
                f.hops = (val == "inf")
                             ? Hops::infinity()
                             : Hops::finite(static_cast<std::uint32_t>(std::stoul(val)));
                saw_hops = true;
            } else if (key == "broken") {
                f.broken_hops = static_cast<std::uint32_t>(std::stoul(val));
            } else if (key == "pending") {
                f.pending = val == "1";
            } else {
                return std::nullopt;
            }
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    if (!saw_parent || !saw_hops) return std::nullopt;
    return f;
}

/// First token of a message rendering ("REQUEST 4 * ..." -> "REQUEST").
std::string message_kind_of(const std::string& details) {
    const auto space = details.find(' ');
    return details.substr(0, space);
}

/// Second token: the sender id. Returns false on anything unexpected.
bool message_src_of(const std::string& details, NodeId& src) {
    std::istringstream in(details);
    std::string kind, src_tok;
    if (!(in >> kind >> src_tok)) return false;
    try {
        src = static_cast<NodeId>(std::stoul(src_tok));
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

/// Replays route/fail/recover/join records, keeping the alive nodes' fields.
struct SnapshotReplay {
    RoutingSnapshot snap;

    /// Returns true if the record changed the snapshot.
    bool apply(const TraceRecord& r) {
        if (r.event == "route") {
            const auto f = parse_route_details(r.details);
            if (!f) return false;
            snap.nodes[r.node] = SnapshotEntry{f->parent, f->hops, f->broken_hops, f->pending};
            return true;
        }
        if (r.event == "fail") return snap.nodes.erase(r.node) > 0;
        if (r.event == "recover" || r.event == "join") {
            // The simulator emits the node's route record at the same instant;
            // this entry only bridges until that record applies.
            snap.nodes[r.node] = SnapshotEntry{};
            return true;
        }
        return false;
    }
};

/// Steady-rhythm tracker for per-node broadcast resends (Request, JoinProbe):
/// after three sends with identical spacing the rhythm no longer counts as
/// repair activity, and neither do deliveries of those sends.
struct SteadyFilter {
    struct PerNode {
        std::optional<SimTime> last;
        std::optional<SimTime> gap;
        int streak = 0;  // consecutive equal gaps seen
        bool last_send_steady = false;
    };
    std::map<NodeId, PerNode> nodes;

    /// Classify a send at time t; returns true if it is steady (ignorable).
    bool on_send(NodeId node, SimTime t) {
        PerNode& p = nodes[node];
        if (p.last) {
            const SimTime gap = t - *p.last;
            if (p.gap && gap == *p.gap)
                ++p.streak;
            else
                p.streak = 1;
            p.gap = gap;
        } else {
            p.streak = 0;
        }
        p.last = t;
        p.last_send_steady = p.streak >= 2;
        return p.last_send_steady;
    }

    bool recv_is_steady(NodeId src) const {
        const auto it = nodes.find(src);
        return it != nodes.end() && it->second.last_send_steady;
    }
};

/// Times of every record that counts as repair activity (see quiesce_time).
std::vector<SimTime> repair_activity_times(const Trace& trace) {
    std::vector<SimTime> out;
    SteadyFilter request_filter;
    SteadyFilter join_probe_filter;
    for (const TraceRecord& r : trace.records) {
        bool active = false;
        if (r.event == "route" || r.event == "race" || r.event == "fail" ||
            r.event == "recover" || r.event == "join") {
            active = true;
        } else if (r.event == "send" || r.event == "recv") {
            const std::string kind = message_kind_of(r.details);
            if (kind == "REPLY" || kind == "PENDING" || kind == "JOIN_INFO") {
                active = true;
            } else if (kind == "REQUEST" || kind == "JOIN_PROBE") {
                SteadyFilter& filter =
                    (kind == "REQUEST") ? request_filter : join_probe_filter;
                if (r.event == "send") {
                    active = !filter.on_send(r.node, r.time);
                } else {
                    NodeId src = 0;
                    active = !message_src_of(r.details, src) || !filter.recv_is_steady(src);
                }
            }
        }
        if (active) out.push_back(r.time);
    }
    return out;
}

}  // namespace

std::vector<std::vector<NodeId>> detect_parent_cycles(const RoutingSnapshot& snap) {
    std::vector<std::vector<NodeId>> cycles;
    enum class Mark { White, Grey, Black };
    std::map<NodeId, Mark> mark;
    for (const auto& [id, e] : snap.nodes) mark[id] = Mark::White;
    auto successor = [&](NodeId id) -> std::optional<NodeId> {
        const auto& e = snap.nodes.at(id);
        if (!e.parent || !snap.nodes.count(*e.parent)) return std::nullopt;
        return *e.parent;
    };
    for (const auto& [start, entry] : snap.nodes) {
        if (mark[start] != Mark::White) continue;
        std::vector<NodeId> path;
        NodeId here = start;
        while (true) {
            if (mark[here] == Mark::Black) break;  // joins an already-cleared walk
            if (mark[here] == Mark::Grey) {
                // Found a cycle: the tail of `path` from `here` onwards.
                const auto from = std::find(path.begin(), path.end(), here);
                cycles.emplace_back(from, path.end());
                break;
            }
            mark[here] = Mark::Grey;
            path.push_back(here);
            const auto next = successor(here);
            if (!next) break;
            here = *next;
        }
        for (NodeId n : path) mark[n] = Mark::Black;
    }
    return cycles;
}

std::set<NodeId> reachability_oracle(const Topology& topo, const std::set<NodeId>& dead) {
    std::set<NodeId> reachable;
    const NodeId base = topo.base_station();
    if (dead.count(base)) return reachable;
    std::deque<NodeId> frontier{base};
    reachable.insert(base);
    while (!frontier.empty()) {
        const NodeId here = frontier.front();
        frontier.pop_front();
        for (NodeId nb : topo.neighbors(here)) {
            if (dead.count(nb) || reachable.count(nb)) continue;
            reachable.insert(nb);
            frontier.push_back(nb);
        }
    }
    return reachable;
}

std::optional<SimTime> quiesce_time(const Trace& trace, const Scenario& scenario, SimTime from,
                                    SimTime settle_window) {
    const std::vector<SimTime> activity = repair_activity_times(trace);
    SimTime q = from;
    for (const SimTime t : activity) {
        if (t <= q) continue;
        if (t <= q + settle_window) q = t;  // quiet stretch broken; restart here
        else break;
    }
    if (q + settle_window > scenario.horizon) return std::nullopt;
    return q;
}

RoutingSnapshot snapshot_at(const Trace& trace, SimTime t) {
    SnapshotReplay replay;
    for (const TraceRecord& r : trace.records) {
        if (r.time > t) break;
        replay.apply(r);
    }
    return replay.snap;
}

RunReport summarize(const Trace& trace, const Scenario& scenario, SimTime settle_window) {
    RunReport report;

    using PacketId = std::pair<NodeId, std::uint32_t>;
    auto parse_packet = [](const std::string& details) -> std::optional<PacketId> {
        NodeId origin = 0;
        std::uint32_t seq = 0;
        bool have_origin = false, have_seq = false;
        std::istringstream in(details);
        std::string tok;
        while (in >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq);
            try {
                if (key == "origin") {
                    origin = static_cast<NodeId>(std::stoul(tok.substr(eq + 1)));
                    have_origin = true;
                } else if (key == "seq") {
                    seq = static_cast<std::uint32_t>(std::stoul(tok.substr(eq + 1)));
                    have_seq = true;
                }
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
        if (!have_origin || !have_seq) return std::nullopt;
        return PacketId{origin, seq};
    };

    std::set<PacketId> generated_ids;
    std::set<PacketId> delivered_ids;
    std::map<PacketId, int> buffer_net;

    SnapshotReplay replay;
    std::set<CycleKey> present_cycles;

    const std::size_t n = trace.records.size();
    for (std::size_t i = 0; i < n; ++i) {
        const TraceRecord& r = trace.records[i];
        if (r.event == "gen") {
            if (const auto p = parse_packet(r.details)) generated_ids.insert(*p);
        } else if (r.event == "data_bs") {
            if (const auto p = parse_packet(r.details)) delivered_ids.insert(*p);
        } else if (r.event == "buffer" || r.event == "flush") {
            if (const auto p = parse_packet(r.details))
                buffer_net[*p] += (r.event == "buffer") ? 1 : -1;
        } else if (r.event == "drop" && r.details.rfind("buffer ", 0) == 0) {
            if (const auto p = parse_packet(r.details)) --buffer_net[*p];
        } else if (r.event == "send") {
            ++report.message_counts[message_kind_of(r.details)];
        }

        // Parent-cycle scan at the end of every simulated instant with
        // routing-state changes (intermediate states within one instant are
        // not observable network states).
        const bool changed = replay.apply(r);
        if (changed && (i + 1 == n || trace.records[i + 1].time != r.time)) {
            std::set<CycleKey> now_present;
            for (const auto& cycle : detect_parent_cycles(replay.snap)) {
                CycleKey key = cycle_key(cycle);
                if (!present_cycles.count(key))
                    report.transient_loops.emplace_back(r.time, key);
                now_present.insert(std::move(key));
            }
            present_cycles = std::move(now_present);
        }
    }

    report.generated = generated_ids.size();
    for (const PacketId& p : generated_ids)
        if (delivered_ids.count(p)) ++report.delivered;
    for (const auto& [p, net] : buffer_net)
        if (net > 0 && generated_ids.count(p) && !delivered_ids.count(p)) ++report.buffered;
    report.dropped = report.generated - report.delivered - report.buffered;
    report.delivery_ratio =
        report.generated == 0
            ? 1.0
            : static_cast<double>(report.delivered) / static_cast<double>(report.generated);

    for (const FaultSpec& f : scenario.faults) {
        FaultConvergence c;
        c.fault_time = f.at;
        c.converged_at = quiesce_time(trace, scenario, f.at, settle_window);
        if (!c.converged_at) report.partial = true;
        report.convergence.push_back(c);
    }

    for (const auto& [id, e] : trace.final_snapshot.nodes)
        if (e.hops.is_infinite()) ++report.orphan_count;
    return report;
}

ConnectivityLoopReport connectivity_loop_report(const Topology& topo, const Trace* trace,
                                                const Scenario* scenario) {
    (void)scenario;
    ConnectivityLoopReport out;
    out.per_source = enumerate_all_loops(topo);
    for (const LoopReport& r : out.per_source) out.total_loops += r.total_loops();
    if (trace) {
        SnapshotReplay replay;
        const std::size_t n = trace->records.size();
        for (std::size_t i = 0; i < n; ++i) {
            const bool changed = replay.apply(trace->records[i]);
            if (changed &&
                (i + 1 == n || trace->records[i + 1].time != trace->records[i].time)) {
                for (const auto& cycle : detect_parent_cycles(replay.snap))
                    out.observed_as_parent_cycles.insert(cycle_key(cycle));
            }
        }
    }
    return out;
}

void print_report(std::ostream& out, const RunReport& report) {
    out << "generated " << report.generated << "\n";
    out << "delivered " << report.delivered << "\n";
    out << "buffered " << report.buffered << "\n";
    out << "dropped " << report.dropped << "\n";
    char ratio[32];
    std::snprintf(ratio, sizeof ratio, "%.6f", report.delivery_ratio);
    out << "delivery_ratio " << ratio << "\n";
    out << "orphans " << report.orphan_count << "\n";
    out << "partial " << (report.partial ? 1 : 0) << "\n";
    for (const auto& [kind, count] : report.message_counts)
        out << "sends " << kind << " " << count << "\n";
    for (const FaultConvergence& c : report.convergence) {
        out << "fault " << c.fault_time << " converged_at ";
        if (c.converged_at)
            out << *c.converged_at << " duration " << *c.duration();
        else
            out << "never duration -";
        out << "\n";
    }
    for (const auto& [t, key] : report.transient_loops)
        out << "transient_loop " << t << " " << format_cycle_key(key) << "\n";
}

}  // namespace wsn
