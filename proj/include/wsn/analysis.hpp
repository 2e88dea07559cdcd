#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wsn/loop_enum.hpp"
#include "wsn/sim.hpp"

namespace wsn {

struct FaultConvergence {
    SimTime fault_time = 0;
    std::optional<SimTime> converged_at;  // first quiet point; unset = never

    std::optional<SimTime> duration() const {
        if (!converged_at) return std::nullopt;
        return *converged_at - fault_time;
    }
};

struct RunReport {
    // Data accounting over distinct (origin, seq): every generated packet is
    // delivered, still buffered at the end, or dropped.
    std::size_t generated = 0;
    std::size_t delivered = 0;
    std::size_t buffered = 0;
    std::size_t dropped = 0;
    double delivery_ratio = 1.0;

    std::map<std::string, std::size_t> message_counts;  // send events per kind

    std::vector<FaultConvergence> convergence;  // one entry per injected fault

    // Parent cycles, each with the time it first appeared; found by replaying
    // the trace's route records and checking after every state change.
    std::vector<std::pair<SimTime, CycleKey>> transient_loops;

    std::size_t orphan_count = 0;  // alive nodes without a path at the end
    bool partial = false;          // some fault never quiesced within the trace
};

/// Cycles in the parent-pointer graph of one snapshot, each reported once as
/// its node sequence (marker-based pointer walk, no recursion).
std::vector<std::vector<NodeId>> detect_parent_cycles(const RoutingSnapshot& snap);

/// Ground truth connectivity: nodes with a live path to the base station when
/// `dead` nodes are removed. Empty if the base station itself is dead.
std::set<NodeId> reachability_oracle(const Topology& topo, const std::set<NodeId>& dead);

/// First instant q >= from such that (q, q + settle_window] contains no
/// repair activity and q + settle_window is within the horizon. Activity is:
/// Reply/Pending/JoinInfo traffic, routing field changes, parent races, and
/// injected faults; plus Request/JoinProbe traffic unless the sender has
/// settled into a steady resend rhythm (three identical cycles). Heartbeat
/// probing (Forward/BackY/BackN) never counts by itself: a probe answer that
/// matters shows up as a routing change.
std::optional<SimTime> quiesce_time(const Trace& trace, const Scenario& scenario, SimTime from,
                                    SimTime settle_window);

/// Reconstruct the routing snapshot at time t from the trace's route records.
RoutingSnapshot snapshot_at(const Trace& trace, SimTime t);

RunReport summarize(const Trace& trace, const Scenario& scenario, SimTime settle_window);

/// Connectivity cycles of the network (the loop enumeration), plus, when a
/// trace is given, which of them ever appeared as transient parent cycles.
struct ConnectivityLoopReport {
    std::vector<LoopReport> per_source;
    std::size_t total_loops = 0;
    std::set<CycleKey> observed_as_parent_cycles;
};

ConnectivityLoopReport connectivity_loop_report(const Topology& topo, const Trace* trace,
                                                const Scenario* scenario);

void print_report(std::ostream& out, const RunReport& report);

}  // namespace wsn
