#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wsn/types.hpp"

namespace wsn {

enum class MsgKind {
    Beacon,     // tree bootstrap flood, carries sender hops
    Forward,    // parent probe
    BackY,      // probe answer: connected, carries hops
    BackN,      // probe answer: path broken, carries broken-hops distance
    Request,    // broadcast: searching for a new parent
    Reply,      // answer to Request: hops + replier's own parent
    Pending,    // "path may be broken" notice travelling towards the leaves
    Data,       // sensor payload travelling to the base station
    DataAck,    // base station ack, source-routed back along the data's path
    JoinProbe,  // fresh node looking for neighbors
    JoinInfo,   // answer to JoinProbe / connect announcement, carries hops
};

const char* msg_kind_name(MsgKind kind);

struct Message {
    MsgKind kind = MsgKind::Beacon;
    NodeId src = 0;
    NodeId dst = kBroadcast;  // kBroadcast for broadcasts

    Hops hops;                          // Beacon, BackY, Reply, JoinInfo
    std::uint32_t broken_hops = 0;      // BackN (>= 1)
    std::uint32_t pending_hops = 0;     // Pending (>= 1)
    std::optional<NodeId> parent;       // Reply: replier's parent
    NodeId origin = 0;                  // Data / DataAck
    std::uint32_t seq = 0;              // Data / DataAck
    NodeId via = 0;                     // Data / DataAck: origin's first hop
    std::vector<NodeId> route;          // Data: nodes visited; DataAck: hops left
};

/// Fixed rendering used in traces: kind, src, dst, payload fields.
std::string render_message(const Message& m);

enum class TimerKind {
    ProbeTick,       // periodic parent probe driver
    PptTimeout,      // probe answer deadline
    RequestResend,   // re-broadcast Request while unconnected
    BacknBackoff,    // wait after BackN before searching a new parent
    ReplyGather,     // collect Replies before picking a parent
    PendingForward,  // relay delay for Pending
    JoinRetry,       // re-broadcast JoinProbe
    JoinGather,      // collect JoinInfo before picking a parent
    RaceTimeout,     // abandon an unanswered two-copy parent race
};

const char* timer_kind_name(TimerKind kind);

struct TimerRequest {
    TimerKind kind;
    SimTime deadline = 0;
    std::uint64_t generation = 0;  // stale timer events are ignored
};

struct ProtocolConfig {
    SimTime timeout_ppt = 500'000;              // probe answer deadline
    SimTime probe_interval = 5'000'000;         // parent probe cadence
    SimTime request_resend_timeout = 3'000'000; // orphan Request cadence
    SimTime backn_backoff_base = 1'000'000;     // scaled by received broken_hops
    SimTime pending_forward_delay = 10'000;     // Pending relay hold-off
    std::uint32_t max_hops = 32;                // finite hops must stay below this
    enum class Metric { Hop, Location };
    Metric metric = Metric::Hop;
    double location_penalty = 4.0;              // added inside the failed cone
    std::size_t data_buffer_capacity = 16;      // per node, drop-oldest
};

struct ParentCandidate {
    NodeId neighbor = 0;
    Hops hops;
    std::optional<NodeId> neighbor_parent;
    std::optional<Vec2> position;
};

struct BufferedData {
    NodeId origin = 0;
    std::uint32_t seq = 0;
    std::optional<NodeId> via;       // unset if buffered at the origin
    std::vector<NodeId> route;       // nodes visited before this one
};

struct SwitchRace {
    NodeId neighbor = 0;
    Hops neighbor_hops;
    std::uint32_t seq = 0;
};

struct NodeState {
    NodeId id = 0;
    bool alive = true;
    bool is_base = false;

    std::optional<NodeId> parent;
    Hops hops;                       // finite implies parent set (base: 0, no parent)
    std::uint32_t broken_hops = 0;   // distance to the detected break, 0 = none
    bool pending = false;            // upstream break notice received
    std::uint32_t pending_hops = 0;

    std::set<NodeId> neighbors;
    std::set<NodeId> children;       // nodes that probe us; never contains parent
    std::set<NodeId> request_senders;  // to answer once (re)connected

    std::optional<Vec2> position;
    std::map<NodeId, Vec2> neighbor_positions;
    std::set<NodeId> recent_failed_neighbors;  // observed: timed-out parents, silent children

    std::map<TimerKind, std::uint64_t> active_timers;  // kind -> live generation
    std::uint64_t timer_gen = 0;

    bool beacon_seen = false;  // set by the flood; gates the orphan Request path
    bool joining = false;

    std::vector<ParentCandidate> reply_candidates;
    std::vector<std::pair<NodeId, Hops>> join_candidates;
    std::deque<BufferedData> data_buffer;
    std::optional<SwitchRace> race;
    std::map<NodeId, SimTime> child_last_forward;
    std::uint32_t data_seq = 0;
};

/// Result of one pure transition: messages to send, timers to arm, and
/// auxiliary trace events as (event, details) pairs. Timer cancellation is
/// implicit: handlers drop the active_timers entry and the stale generation
/// never dispatches.
struct Transition {
    std::vector<Message> out;
    std::vector<TimerRequest> arm;
    std::vector<std::pair<std::string, std::string>> events;
};

// --- handlers; all deterministic in (state, event arguments, now) ---

Transition init_from_beacon(NodeState& s, NodeId from, Hops sender_hops, SimTime now,
                            const ProtocolConfig& cfg);
Transition probe_parent(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition handle_forward(NodeState& s, NodeId from, SimTime now, const ProtocolConfig& cfg);
Transition handle_back_y(NodeState& s, NodeId from, Hops hops, SimTime now,
                         const ProtocolConfig& cfg);
Transition handle_ppt_timeout(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition handle_back_n(NodeState& s, NodeId from, std::uint32_t broken_hops, SimTime now,
                         const ProtocolConfig& cfg);
Transition handle_backn_backoff(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition handle_request(NodeState& s, NodeId from, SimTime now, const ProtocolConfig& cfg);
Transition handle_reply(NodeState& s, NodeId from, Hops hops, std::optional<NodeId> their_parent,
                        SimTime now, const ProtocolConfig& cfg);
Transition select_new_parent(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition handle_request_resend(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition handle_pending(NodeState& s, NodeId from, std::uint32_t pending_hops, SimTime now,
                          const ProtocolConfig& cfg);
Transition handle_pending_forward(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition generate_data(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition forward_data(NodeState& s, const Message& data, SimTime now,
                        const ProtocolConfig& cfg);
Transition handle_data_ack(NodeState& s, const Message& ack, SimTime now,
                           const ProtocolConfig& cfg);
Transition node_join(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition handle_join_probe(NodeState& s, NodeId from, SimTime now, const ProtocolConfig& cfg);
Transition handle_join_info(NodeState& s, NodeId from, Hops hops, SimTime now,
                            const ProtocolConfig& cfg);
Transition finish_join_gather(NodeState& s, SimTime now, const ProtocolConfig& cfg);
Transition consider_shorter_parent(NodeState& s, NodeId neighbor, Hops neighbor_hops, SimTime now,
                                   const ProtocolConfig& cfg);
Transition handle_race_timeout(NodeState& s, SimTime now, const ProtocolConfig& cfg);

/// Candidate ranking; lower is better. Hop metric: plain hop count. Location
/// metric: hop count plus a penalty when the candidate's bearing lies within
/// 60 degrees of the mean bearing of recently failed neighbors (requires
/// positions; silently equals the hop metric when geometry is missing).
double metric_score(const ParentCandidate& cand, const NodeState& s, const ProtocolConfig& cfg);

}  // namespace wsn
