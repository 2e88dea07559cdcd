#include "wsn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

namespace wsn {

namespace {

// Probe and data generation are phase-staggered by node id so the network
// never acts in lockstep; the offsets are fixed, not configurable.
constexpr SimTime kProbePhaseStepUs = 10'000;
constexpr SimTime kDataPhaseStepUs = 100'000;
// Data generation stops this long before the horizon so in-flight traffic
// can drain and delivery accounting stays honest.
constexpr SimTime kDataTailGuardUs = 1'000'000;

std::string fmt3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

struct Event {
    enum class Kind { Deliver, Timer, Fault, GenerateData };

    SimTime time = 0;
    std::uint64_t seq = 0;  // scheduling order; breaks time ties
    Kind kind = Kind::Deliver;

    Message msg;          // Deliver (node = recipient)
    NodeId node = 0;      // Deliver / Timer / GenerateData
    TimerKind timer_kind = TimerKind::ProbeTick;
    std::uint64_t timer_gen = 0;
    std::size_t fault_index = 0;   // Fault
    SimTime data_interval = 0;     // GenerateData
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

struct RouteView {
    std::optional<NodeId> parent;
    Hops hops;
    std::uint32_t broken_hops = 0;
    bool pending = false;

    bool operator==(const RouteView&) const = default;
};

RouteView route_view(const NodeState& s) {
    return RouteView{s.parent, s.hops, s.broken_hops, s.pending};
}

std::string route_details(const NodeState& s) {
    std::ostringstream out;
    out << "parent=";
    if (s.parent)
        out << *s.parent;
    else
        out << '-';
    out << " hops=" << to_string(s.hops) << " broken=" << s.broken_hops
        << " pending=" << (s.pending ? 1 : 0);
    return out.str();
}

class Engine {
  public:
    Engine(const Scenario& sc, Topology& topo, std::map<NodeId, NodeState>& states)
        : sc_(sc), topo_(topo), states_(states), rng_(sc.seed) {}

    Trace run() {
        trace_.seed = sc_.seed;
        seed_initial_events();
        while (!queue_.empty()) {
            Event ev = queue_.top();
            queue_.pop();
            if (ev.time > sc_.horizon) break;
            dispatch(ev);
        }
        trace_.final_snapshot = make_snapshot(states_);
        return std::move(trace_);
    }

    static RoutingSnapshot make_snapshot(const std::map<NodeId, NodeState>& states) {
        RoutingSnapshot snap;
        for (const auto& [id, s] : states) {
            if (!s.alive) continue;
            snap.nodes[id] = SnapshotEntry{s.parent, s.hops, s.broken_hops, s.pending};
        }
        return snap;
    }

  private:
    void record(SimTime t, NodeId node, std::string event, std::string details) {
        trace_.records.push_back(TraceRecord{t, node, std::move(event), std::move(details)});
    }

    void push(Event ev) {
        ev.seq = next_seq_++;
        queue_.push(std::move(ev));
    }

    double unit_uniform() {
        // Top 53 bits of the generator, scaled to [0, 1); bit-stable everywhere.
        return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
    }

    void deliver_to(const Message& m, NodeId recipient, SimTime now) {
        if (!states_.count(recipient)) return;
        // Per recipient: one loss draw (if lossy), then one jitter draw (if
        // jittered), in that order — the draw sequence is part of the trace
        // contract.
        if (sc_.delay.loss_probability > 0 && unit_uniform() < sc_.delay.loss_probability) {
            record(now, recipient, "drop", "loss " + render_message(m));
            return;
        }
        SimTime delay = sc_.delay.base_latency;
        if (sc_.delay.jitter > 0)
            delay += static_cast<SimTime>(rng_() %
                                          static_cast<std::uint64_t>(sc_.delay.jitter + 1));
        Event ev;
        ev.time = now + delay;
        ev.kind = Event::Kind::Deliver;
        ev.msg = m;
        ev.node = recipient;
        push(std::move(ev));
    }

    void send_message(NodeId src, const Message& m, SimTime now) {
        record(now, src, "send", render_message(m));
        if (m.dst == kBroadcast) {
            for (NodeId nb : topo_.neighbors(src)) deliver_to(m, nb, now);
        } else {
            deliver_to(m, m.dst, now);
        }
    }

    void schedule_timer(NodeId node, const TimerRequest& req) {
        Event ev;
        ev.time = req.deadline;
        ev.kind = Event::Kind::Timer;
        ev.node = node;
        ev.timer_kind = req.kind;
        ev.timer_gen = req.generation;
        push(std::move(ev));
    }

    /// Arm a timer from the engine side (initial probe ticks, recovery).
    void arm_node_timer(NodeState& s, TimerKind kind, SimTime deadline) {
        const std::uint64_t gen = ++s.timer_gen;
        s.active_timers[kind] = gen;
        schedule_timer(s.id, TimerRequest{kind, deadline, gen});
    }

    void apply_transition(NodeId node, SimTime now, const Transition& tr) {
        for (const auto& [event, details] : tr.events) record(now, node, event, details);
        for (const auto& m : tr.out) send_message(node, m, now);
        for (const auto& req : tr.arm) schedule_timer(node, req);
    }

    void emit_route(const NodeState& s, SimTime now) {
        record(now, s.id, "route", route_details(s));
    }

    /// Run one handler with route-change bookkeeping: handler trace events,
    /// then sends, then (if the routing fields moved) one route record.
    template <typename Fn>
    void with_node(NodeId node, SimTime now, Fn&& fn) {
        NodeState& s = states_.at(node);
        const RouteView before = route_view(s);
        const Transition tr = fn(s);
        apply_transition(node, now, tr);
        if (route_view(s) != before) emit_route(s, now);
    }

    std::optional<SimTime> effective_data_interval(NodeId node) const {
        if (auto it = sc_.data_intervals.find(node); it != sc_.data_intervals.end()) {
            if (it->second == 0) return std::nullopt;
            return it->second;
        }
        if (!sc_.data_default_on) return std::nullopt;
        return sc_.data_default_interval;
    }

    void maybe_schedule_gen(NodeId node, SimTime at, SimTime interval) {
        if (at + kDataTailGuardUs > sc_.horizon) return;
        Event ev;
        ev.time = at;
        ev.kind = Event::Kind::GenerateData;
        ev.node = node;
        ev.data_interval = interval;
        push(std::move(ev));
    }

    void start_data_chain(NodeId node, SimTime from) {
        if (states_.at(node).is_base) return;
        const auto interval = effective_data_interval(node);
        if (!interval) return;
        const SimTime phase = (static_cast<SimTime>(node) * kDataPhaseStepUs) % *interval;
        maybe_schedule_gen(node, from + *interval + phase, *interval);
    }

    void seed_initial_events() {
        for (const auto& [id, s] : states_) emit_route(s, 0);
        // The base station opens the tree-building flood.
        NodeState& base = states_.at(topo_.base_station());
        Message beacon;
        beacon.kind = MsgKind::Beacon;
        beacon.src = base.id;
        beacon.dst = kBroadcast;
        beacon.hops = base.hops;
        send_message(base.id, beacon, 0);
        for (auto& [id, s] : states_) {
            if (s.is_base) continue;
            arm_node_timer(s, TimerKind::ProbeTick,
                           sc_.protocol.probe_interval +
                               static_cast<SimTime>(id) * kProbePhaseStepUs);
        }
        for (const auto& [id, s] : states_) start_data_chain(id, 0);
        for (std::size_t i = 0; i < sc_.faults.size(); ++i) {
            Event ev;
            ev.time = sc_.faults[i].at;
            ev.kind = Event::Kind::Fault;
            ev.fault_index = i;
            push(std::move(ev));
        }
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case Event::Kind::Deliver: dispatch_deliver(ev); break;
            case Event::Kind::Timer: dispatch_timer(ev); break;
            case Event::Kind::Fault: run_fault(sc_.faults.at(ev.fault_index), ev.time); break;
            case Event::Kind::GenerateData: dispatch_generate(ev); break;
        }
    }

    void dispatch_deliver(const Event& ev) {
        auto it = states_.find(ev.node);
        if (it == states_.end()) return;
        if (!it->second.alive) {
            record(ev.time, ev.node, "drop", "dead " + render_message(ev.msg));
            return;
        }
        record(ev.time, ev.node, "recv", render_message(ev.msg));
        const Message& m = ev.msg;
        const SimTime t = ev.time;
        const ProtocolConfig& cfg = sc_.protocol;
        with_node(ev.node, t, [&](NodeState& s) {
            switch (m.kind) {
                case MsgKind::Beacon: return init_from_beacon(s, m.src, m.hops, t, cfg);
                case MsgKind::Forward: return handle_forward(s, m.src, t, cfg);
                case MsgKind::BackY: return handle_back_y(s, m.src, m.hops, t, cfg);
                case MsgKind::BackN: return handle_back_n(s, m.src, m.broken_hops, t, cfg);
                case MsgKind::Request: return handle_request(s, m.src, t, cfg);
                case MsgKind::Reply: return handle_reply(s, m.src, m.hops, m.parent, t, cfg);
                case MsgKind::Pending: return handle_pending(s, m.src, m.pending_hops, t, cfg);
                case MsgKind::Data: return forward_data(s, m, t, cfg);
                case MsgKind::DataAck: return handle_data_ack(s, m, t, cfg);
                case MsgKind::JoinProbe: return handle_join_probe(s, m.src, t, cfg);
                case MsgKind::JoinInfo: return handle_join_info(s, m.src, m.hops, t, cfg);
            }
            return Transition{};
        });
    }

    void dispatch_timer(const Event& ev) {
        auto it = states_.find(ev.node);
        if (it == states_.end()) return;
        NodeState& s = it->second;
        if (!s.alive) return;  // dead nodes lose their timers silently
        auto live = s.active_timers.find(ev.timer_kind);
        if (live == s.active_timers.end() || live->second != ev.timer_gen)
            return;  // superseded or cancelled
        s.active_timers.erase(live);
        record(ev.time, ev.node, "timer", timer_kind_name(ev.timer_kind));
        const SimTime t = ev.time;
        const ProtocolConfig& cfg = sc_.protocol;
        with_node(ev.node, t, [&](NodeState& n) {
            switch (ev.timer_kind) {
                case TimerKind::ProbeTick: return probe_parent(n, t, cfg);
                case TimerKind::PptTimeout: return handle_ppt_timeout(n, t, cfg);
                case TimerKind::RequestResend: return handle_request_resend(n, t, cfg);
                case TimerKind::BacknBackoff: return handle_backn_backoff(n, t, cfg);
                case TimerKind::ReplyGather: return select_new_parent(n, t, cfg);
                case TimerKind::PendingForward: return handle_pending_forward(n, t, cfg);
                case TimerKind::JoinRetry: return node_join(n, t, cfg);
                case TimerKind::JoinGather: return finish_join_gather(n, t, cfg);
                case TimerKind::RaceTimeout: return handle_race_timeout(n, t, cfg);
            }
            return Transition{};
        });
    }

    void dispatch_generate(const Event& ev) {
        // The chain outlives node death so generation resumes after recovery.
        maybe_schedule_gen(ev.node, ev.time + ev.data_interval, ev.data_interval);
        auto it = states_.find(ev.node);
        if (it == states_.end() || !it->second.alive) return;
        const SimTime t = ev.time;
        with_node(ev.node, t, [&](NodeState& s) { return generate_data(s, t, sc_.protocol); });
    }

    void kill_node(NodeState& s, SimTime now, const std::string& how) {
        s.alive = false;
        record(now, s.id, "fail", how);
    }

    void run_fault(const FaultSpec& f, SimTime now) {
        switch (f.kind) {
            case FaultSpec::Kind::NodeFail: {
                NodeState& s = states_.at(f.node);
                if (!s.alive) {
                    record(now, f.node, "note", "fail ignored, node already dead");
                    return;
                }
                kill_node(s, now, "node");
                return;
            }
            case FaultSpec::Kind::AreaFail: {
                const std::string how =
                    "area cx=" + fmt3(f.cx) + " cy=" + fmt3(f.cy) + " r=" + fmt3(f.radius);
                for (auto& [id, s] : states_) {
                    if (!s.alive || !s.position) continue;
                    const double dx = s.position->x - f.cx;
                    const double dy = s.position->y - f.cy;
                    if (std::sqrt(dx * dx + dy * dy) <= f.radius) kill_node(s, now, how);
                }
                return;
            }
            case FaultSpec::Kind::NodeRecover: {
                NodeState& s = states_.at(f.node);
                if (s.alive) {
                    record(now, f.node, "note", "recover ignored, node alive");
                    return;
                }
                s.alive = true;
                s.parent.reset();
                s.hops = s.is_base ? Hops::finite(0) : Hops::infinity();
                s.broken_hops = 0;
                s.pending = false;
                s.pending_hops = 0;
                s.children.clear();
                s.child_last_forward.clear();
                s.request_senders.clear();
                s.recent_failed_neighbors.clear();
                s.reply_candidates.clear();
                s.join_candidates.clear();
                s.data_buffer.clear();
                s.race.reset();
                s.active_timers.clear();
                s.beacon_seen = true;  // may use the orphan search path directly
                s.joining = false;
                record(now, f.node, "recover", "state reset");
                emit_route(s, now);
                // A rebooted node starts probing almost immediately (only the
                // id stagger): its first tick runs the orphan search, so the
                // rejoin attempt follows the recovery instead of idling a full
                // probe interval first.
                if (!s.is_base)
                    arm_node_timer(s, TimerKind::ProbeTick,
                                   now + static_cast<SimTime>(s.id) * kProbePhaseStepUs);
                return;
            }
            case FaultSpec::Kind::NodeJoin: {
                topo_ = topo_.with_placement(NodePlacement{f.node, f.x, f.y, f.range});
                for (auto& [id, s] : states_) {
                    s.neighbors.clear();
                    s.neighbor_positions.clear();
                    for (NodeId nb : topo_.neighbors(id)) {
                        s.neighbors.insert(nb);
                        s.neighbor_positions[nb] = *topo_.position(nb);
                    }
                }
                NodeState js;
                js.id = f.node;
                js.alive = true;
                js.is_base = false;
                js.joining = true;
                js.beacon_seen = true;
                js.position = topo_.position(f.node);
                for (NodeId nb : topo_.neighbors(f.node)) {
                    js.neighbors.insert(nb);
                    js.neighbor_positions[nb] = *topo_.position(nb);
                }
                NodeState& s = states_.emplace(f.node, std::move(js)).first->second;
                record(now, f.node, "join",
                       "x=" + fmt3(f.x) + " y=" + fmt3(f.y) + " range=" + fmt3(f.range));
                emit_route(s, now);
                arm_node_timer(s, TimerKind::ProbeTick,
                               now + sc_.protocol.probe_interval +
                                   static_cast<SimTime>(s.id) * kProbePhaseStepUs);
                start_data_chain(f.node, now);
                with_node(f.node, now,
                          [&](NodeState& n) { return node_join(n, now, sc_.protocol); });
                return;
            }
        }
    }

    const Scenario& sc_;
    Topology& topo_;
    std::map<NodeId, NodeState>& states_;
    std::mt19937_64 rng_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::uint64_t next_seq_ = 0;
    Trace trace_;
};

}  // namespace

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)), topo_(scenario_.topology) {
    init_world();
}

void Simulator::init_world() {
    for (NodeId id : topo_.nodes()) {
        NodeState s;
        s.id = id;
        s.alive = true;
        s.is_base = (id == topo_.base_station());
        if (s.is_base) {
            s.hops = Hops::finite(0);
            s.beacon_seen = true;
        }
        if (topo_.placement_mode()) s.position = topo_.position(id);
        for (NodeId nb : topo_.neighbors(id)) {
            s.neighbors.insert(nb);
            if (topo_.placement_mode()) s.neighbor_positions[nb] = *topo_.position(nb);
        }
        states_.emplace(id, std::move(s));
    }
}

Trace Simulator::run() {
    if (ran_) throw std::logic_error("Simulator::run may only be called once");
    if (scenario_.horizon <= 0) throw std::logic_error("scenario horizon must be positive");
    ran_ = true;
    Engine engine(scenario_, topo_, states_);
    return engine.run();
}

RoutingSnapshot Simulator::snapshot() const { return Engine::make_snapshot(states_); }

Trace run_scenario(const Scenario& scenario) { return Simulator(scenario).run(); }

// --- scenario file ---

namespace {

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
    throw ParseError(source, line, msg);
}

std::uint64_t parse_u64(const std::string& tok, const std::string& source, int line,
                        const std::string& what) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail(source, line, "expected unsigned integer for " + what + ", got '" + tok + "'");
    }
}

double parse_double(const std::string& tok, const std::string& source, int line,
                    const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail(source, line, "expected number for " + what + ", got '" + tok + "'");
    }
}

SimTime parse_seconds(const std::string& tok, const std::string& source, int line,
                      const std::string& what) {
    const double v = parse_double(tok, source, line, what);
    if (v < 0) fail(source, line, what + " must not be negative");
    return seconds_to_us(v);
}

}  // namespace

Scenario parse_scenario(std::istream& in, const std::string& source_name,
                        const std::string& base_dir) {
    Scenario sc;
    bool have_topology = false;
    bool have_horizon = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const std::string& head = tok[0];
        auto want = [&](std::size_t n) {
            if (tok.size() != n)
                fail(source_name, lineno,
                     "'" + head + "' expects " + std::to_string(n - 1) + " argument(s)");
        };
        if (head == "topology") {
            want(2);
            std::filesystem::path p(tok[1]);
            if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
            sc.topology_path = p.string();
            sc.topology = load_topology(sc.topology_path);
            have_topology = true;
        } else if (head == "seed") {
            want(2);
            sc.seed = parse_u64(tok[1], source_name, lineno, "seed");
        } else if (head == "horizon") {
            want(2);
            sc.horizon = parse_seconds(tok[1], source_name, lineno, "horizon");
            if (sc.horizon <= 0) fail(source_name, lineno, "horizon must be positive");
            have_horizon = true;
        } else if (head == "set") {
            want(3);
            const std::string& key = tok[1];
            const std::string& val = tok[2];
            if (key == "timeout_ppt")
                sc.protocol.timeout_ppt = parse_seconds(val, source_name, lineno, key);
            else if (key == "probe_interval")
                sc.protocol.probe_interval = parse_seconds(val, source_name, lineno, key);
            else if (key == "request_resend_timeout")
                sc.protocol.request_resend_timeout =
                    parse_seconds(val, source_name, lineno, key);
            else if (key == "backn_backoff_base")
                sc.protocol.backn_backoff_base = parse_seconds(val, source_name, lineno, key);
            else if (key == "pending_forward_delay")
                sc.protocol.pending_forward_delay =
                    parse_seconds(val, source_name, lineno, key);
            else if (key == "max_hops")
                sc.protocol.max_hops =
                    static_cast<std::uint32_t>(parse_u64(val, source_name, lineno, key));
            else if (key == "metric") {
                if (val == "hop")
                    sc.protocol.metric = ProtocolConfig::Metric::Hop;
                else if (val == "location")
                    sc.protocol.metric = ProtocolConfig::Metric::Location;
                else
                    fail(source_name, lineno, "metric must be 'hop' or 'location'");
            } else if (key == "location_penalty")
                sc.protocol.location_penalty = parse_double(val, source_name, lineno, key);
            else if (key == "data_buffer_capacity")
                sc.protocol.data_buffer_capacity =
                    static_cast<std::size_t>(parse_u64(val, source_name, lineno, key));
            else if (key == "base_latency")
                sc.delay.base_latency = parse_seconds(val, source_name, lineno, key);
            else if (key == "jitter")
                sc.delay.jitter = parse_seconds(val, source_name, lineno, key);
            else if (key == "loss") {
                sc.delay.loss_probability = parse_double(val, source_name, lineno, key);
                if (sc.delay.loss_probability < 0 || sc.delay.loss_probability > 1)
                    fail(source_name, lineno, "loss must be within [0, 1]");
            } else
                fail(source_name, lineno, "unknown setting '" + key + "'");
        } else if (head == "fault") {
            if (tok.size() < 2) fail(source_name, lineno, "'fault' expects a kind");
            FaultSpec f;
            if (tok[1] == "node") {
                want(4);
                f.kind = FaultSpec::Kind::NodeFail;
                f.node = static_cast<NodeId>(parse_u64(tok[2], source_name, lineno, "node id"));
                f.at = parse_seconds(tok[3], source_name, lineno, "fault time");
            } else if (tok[1] == "area") {
                want(6);
                f.kind = FaultSpec::Kind::AreaFail;
                f.cx = parse_double(tok[2], source_name, lineno, "area cx");
                f.cy = parse_double(tok[3], source_name, lineno, "area cy");
                f.radius = parse_double(tok[4], source_name, lineno, "area radius");
                if (f.radius < 0) fail(source_name, lineno, "area radius must not be negative");
                f.at = parse_seconds(tok[5], source_name, lineno, "fault time");
            } else {
                fail(source_name, lineno, "fault kind must be 'node' or 'area'");
            }
            sc.faults.push_back(f);
        } else if (head == "recover") {
            want(3);
            FaultSpec f;
            f.kind = FaultSpec::Kind::NodeRecover;
            f.node = static_cast<NodeId>(parse_u64(tok[1], source_name, lineno, "node id"));
            f.at = parse_seconds(tok[2], source_name, lineno, "recover time");
            sc.faults.push_back(f);
        } else if (head == "join") {
            want(6);
            FaultSpec f;
            f.kind = FaultSpec::Kind::NodeJoin;
            f.node = static_cast<NodeId>(parse_u64(tok[1], source_name, lineno, "node id"));
            f.x = parse_double(tok[2], source_name, lineno, "join x");
            f.y = parse_double(tok[3], source_name, lineno, "join y");
            f.range = parse_double(tok[4], source_name, lineno, "join range");
            if (f.range <= 0) fail(source_name, lineno, "join range must be positive");
            f.at = parse_seconds(tok[5], source_name, lineno, "join time");
            sc.faults.push_back(f);
        } else if (head == "data") {
            if (tok.size() == 2 && tok[1] == "off") {
                sc.data_default_on = false;
            } else if (tok.size() == 3 && tok[2] == "off") {
                const NodeId id =
                    static_cast<NodeId>(parse_u64(tok[1], source_name, lineno, "node id"));
                sc.data_intervals[id] = 0;
            } else if (tok.size() == 4 && tok[2] == "every") {
                const NodeId id =
                    static_cast<NodeId>(parse_u64(tok[1], source_name, lineno, "node id"));
                const SimTime iv = parse_seconds(tok[3], source_name, lineno, "data interval");
                if (iv <= 0) fail(source_name, lineno, "data interval must be positive");
                sc.data_intervals[id] = iv;
            } else {
                fail(source_name, lineno,
                     "expected 'data off', 'data <id> off' or 'data <id> every <seconds>'");
            }
        } else {
            fail(source_name, lineno, "unknown directive '" + head + "'");
        }
    }
    if (!have_topology) fail(source_name, lineno, "scenario needs a 'topology' line");
    if (!have_horizon) fail(source_name, lineno, "scenario needs a 'horizon' line");

    std::stable_sort(sc.faults.begin(), sc.faults.end(),
                     [](const FaultSpec& a, const FaultSpec& b) { return a.at < b.at; });

    // Check fault targets against the node set as it evolves over time.
    std::set<NodeId> known;
    for (NodeId id : sc.topology.nodes()) known.insert(id);
    for (const FaultSpec& f : sc.faults) {
        switch (f.kind) {
            case FaultSpec::Kind::NodeFail:
            case FaultSpec::Kind::NodeRecover:
                if (!known.count(f.node))
                    fail(source_name, lineno,
                         "fault references unknown node " + std::to_string(f.node));
                break;
            case FaultSpec::Kind::AreaFail:
                if (!sc.topology.placement_mode())
                    fail(source_name, lineno, "area faults need a placement topology");
                break;
            case FaultSpec::Kind::NodeJoin:
                if (!sc.topology.placement_mode())
                    fail(source_name, lineno, "joins need a placement topology");
                if (known.count(f.node))
                    fail(source_name, lineno,
                         "join id " + std::to_string(f.node) + " already exists");
                known.insert(f.node);
                break;
        }
    }
    for (const auto& [id, iv] : sc.data_intervals)
        if (!known.count(id))
            fail(source_name, lineno, "data override for unknown node " + std::to_string(id));
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return parse_scenario(in, path, std::filesystem::path(path).parent_path().string());
}

// --- trace serialization ---

void write_trace(std::ostream& out, const Trace& trace) {
    out << "# wsnsim trace v1\n";
    out << "# seed " << trace.seed << "\n";
    for (const TraceRecord& r : trace.records)
        out << r.time << '\t' << r.node << '\t' << r.event << '\t' << r.details << '\n';
    out << "# snapshot\n";
    for (const auto& [id, e] : trace.final_snapshot.nodes) {
        out << id << '\t';
        if (e.parent)
            out << *e.parent;
        else
            out << '-';
        out << '\t' << to_string(e.hops) << '\t' << e.broken_hops << '\t'
            << (e.pending ? 1 : 0) << '\n';
    }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line, std::size_t max_fields) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (out.size() + 1 < max_fields) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) break;
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    out.push_back(line.substr(start));
    return out;
}

}  // namespace

Trace parse_trace(std::istream& in, const std::string& source_name) {
    Trace trace;
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line) || line != "# wsnsim trace v1")
        throw ParseError(source_name, 1, "not a trace file (missing version header)");
    ++lineno;
    if (!std::getline(in, line) || line.rfind("# seed ", 0) != 0)
        throw ParseError(source_name, 2, "missing seed header");
    ++lineno;
    trace.seed = parse_u64(line.substr(7), source_name, lineno, "seed");
    bool in_snapshot = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line == "# snapshot") {
            in_snapshot = true;
            continue;
        }
        if (line[0] == '#') continue;
        const auto fields = split_tabs(line, in_snapshot ? 5 : 4);
        if (!in_snapshot) {
            if (fields.size() != 4)
                throw ParseError(source_name, lineno, "expected 4 tab-separated fields");
            TraceRecord r;
            try {
                r.time = std::stoll(fields[0]);
            } catch (const std::exception&) {
                throw ParseError(source_name, lineno, "bad time '" + fields[0] + "'");
            }
            r.node = static_cast<NodeId>(parse_u64(fields[1], source_name, lineno, "node"));
            r.event = fields[2];
            r.details = fields[3];
            trace.records.push_back(std::move(r));
        } else {
            if (fields.size() != 5)
                throw ParseError(source_name, lineno, "expected 5 tab-separated fields");
            const NodeId id =
                static_cast<NodeId>(parse_u64(fields[0], source_name, lineno, "node"));
            SnapshotEntry e;
            if (fields[1] != "-")
                e.parent =
                    static_cast<NodeId>(parse_u64(fields[1], source_name, lineno, "parent"));
            if (fields[2] == "inf")
                e.hops = Hops::infinity();
            else
                e.hops = Hops::finite(static_cast<std::uint32_t>(
                    parse_u64(fields[2], source_name, lineno, "hops")));
            e.broken_hops = static_cast<std::uint32_t>(
                parse_u64(fields[3], source_name, lineno, "broken_hops"));
            e.pending = fields[4] == "1";
            trace.final_snapshot.nodes[id] = e;
        }
    }
    return trace;
}

Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return parse_trace(in, path);
}

}  // namespace wsn
