#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wsn/protocol.hpp"
#include "wsn/topology.hpp"

namespace wsn {

struct DelayModel {
    SimTime base_latency = 10'000;  // per delivery
    SimTime jitter = 0;             // uniform extra in [0, jitter]
    double loss_probability = 0.0;  // independent per recipient
};

struct FaultSpec {
    enum class Kind { NodeFail, AreaFail, NodeRecover, NodeJoin };
    Kind kind = Kind::NodeFail;
    SimTime at = 0;
    NodeId node = 0;            // NodeFail / NodeRecover / NodeJoin
    double cx = 0, cy = 0, radius = 0;  // AreaFail
    double x = 0, y = 0, range = 0;     // NodeJoin
};

struct Scenario {
    std::string topology_path;
    Topology topology;
    std::uint64_t seed = 1;
    SimTime horizon = 0;
    ProtocolConfig protocol;
    DelayModel delay;
    std::vector<FaultSpec> faults;          // ascending time
    bool data_default_on = true;
    SimTime data_default_interval = 5'000'000;
    std::map<NodeId, SimTime> data_intervals;  // per-node override, 0 = off
};

/// Scenario file, line oriented:
///   topology <path>           (relative to the scenario file)
///   seed <u64>
///   horizon <seconds>
///   set <key> <value>         (protocol + delay model keys)
///   fault node <id> <t>
///   fault area <cx> <cy> <r> <t>
///   recover <id> <t>
///   join <id> <x> <y> <range> <t>
///   data off | data <id> off | data <id> every <seconds>
Scenario parse_scenario(std::istream& in, const std::string& source_name,
                        const std::string& base_dir);
Scenario load_scenario(const std::string& path);

struct TraceRecord {
    SimTime time = 0;
    NodeId node = 0;
    std::string event;
    std::string details;

    bool operator==(const TraceRecord&) const = default;
};

struct SnapshotEntry {
    std::optional<NodeId> parent;
    Hops hops;
    std::uint32_t broken_hops = 0;
    bool pending = false;

    bool operator==(const SnapshotEntry&) const = default;
};

/// Routing state of every alive node at one instant.
struct RoutingSnapshot {
    std::map<NodeId, SnapshotEntry> nodes;

    bool operator==(const RoutingSnapshot&) const = default;
};

struct Trace {
    std::uint64_t seed = 0;
    std::vector<TraceRecord> records;
    RoutingSnapshot final_snapshot;
};

void write_trace(std::ostream& out, const Trace& trace);
Trace parse_trace(std::istream& in, const std::string& source_name);
Trace load_trace(const std::string& path);

/// Deterministic discrete-event run of a scenario: same scenario + seed gives
/// byte-identical traces. Events at equal times dispatch in scheduling order.
class Simulator {
  public:
    explicit Simulator(Scenario scenario);

    /// Run to the horizon and return the full trace.
    Trace run();

    /// Routing snapshot of the current world state (alive nodes only).
    RoutingSnapshot snapshot() const;

    const Topology& topology() const { return topo_; }
    const std::map<NodeId, NodeState>& states() const { return states_; }

  private:
    void init_world();

    Scenario scenario_;
    Topology topo_;
    std::map<NodeId, NodeState> states_;
    bool ran_ = false;
};

Trace run_scenario(const Scenario& scenario);

}  // namespace wsn
