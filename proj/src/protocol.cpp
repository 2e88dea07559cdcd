#include "wsn/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wsn {

const char* msg_kind_name(MsgKind kind) {
    switch (kind) {
        case MsgKind::Beacon: return "BEACON";
        case MsgKind::Forward: return "FORWARD";
        case MsgKind::BackY: return "BACK_Y";
        case MsgKind::BackN: return "BACK_N";
        case MsgKind::Request: return "REQUEST";
        case MsgKind::Reply: return "REPLY";
        case MsgKind::Pending: return "PENDING";
        case MsgKind::Data: return "DATA";
        case MsgKind::DataAck: return "DATA_ACK";
        case MsgKind::JoinProbe: return "JOIN_PROBE";
        case MsgKind::JoinInfo: return "JOIN_INFO";
    }
    return "?";
}

const char* timer_kind_name(TimerKind kind) {
    switch (kind) {
        case TimerKind::ProbeTick: return "probe_tick";
        case TimerKind::PptTimeout: return "ppt_timeout";
        case TimerKind::RequestResend: return "request_resend";
        case TimerKind::BacknBackoff: return "backn_backoff";
        case TimerKind::ReplyGather: return "reply_gather";
        case TimerKind::PendingForward: return "pending_forward";
        case TimerKind::JoinRetry: return "join_retry";
        case TimerKind::JoinGather: return "join_gather";
        case TimerKind::RaceTimeout: return "race_timeout";
    }
    return "?";
}

std::string render_message(const Message& m) {
    std::ostringstream out;
    out << msg_kind_name(m.kind) << ' ' << m.src << ' ';
    if (m.dst == kBroadcast)
        out << '*';
    else
        out << m.dst;
    switch (m.kind) {
        case MsgKind::Beacon:
        case MsgKind::BackY:
        case MsgKind::JoinInfo:
            out << " hops=" << to_string(m.hops);
            break;
        case MsgKind::BackN:
            out << " broken=" << m.broken_hops;
            break;
        case MsgKind::Reply:
            out << " hops=" << to_string(m.hops) << " parent=";
            if (m.parent)
                out << *m.parent;
            else
                out << '-';
            break;
        case MsgKind::Pending:
            out << " pending=" << m.pending_hops;
            break;
        case MsgKind::Data:
        case MsgKind::DataAck:
            out << " origin=" << m.origin << " seq=" << m.seq << " via=" << m.via;
            break;
        case MsgKind::Forward:
        case MsgKind::Request:
        case MsgKind::JoinProbe:
            break;
    }
    return out.str();
}

namespace {

void note(Transition& tr, const std::string& text) { tr.events.emplace_back("note", text); }

void arm_timer(NodeState& s, Transition& tr, TimerKind kind, SimTime deadline) {
    const std::uint64_t gen = ++s.timer_gen;
    s.active_timers[kind] = gen;
    tr.arm.push_back(TimerRequest{kind, deadline, gen});
}

void cancel_timer(NodeState& s, TimerKind kind) { s.active_timers.erase(kind); }

bool timer_armed(const NodeState& s, TimerKind kind) { return s.active_timers.count(kind) != 0; }

Message make_msg(MsgKind kind, NodeId src, NodeId dst) {
    Message m;
    m.kind = kind;
    m.src = src;
    m.dst = dst;
    return m;
}

/// Send one data copy towards the parent, extending the visited route.
void emit_data(NodeState& s, Transition& tr, NodeId origin, std::uint32_t seq,
               std::optional<NodeId> via, const std::vector<NodeId>& route_before) {
    Message m = make_msg(MsgKind::Data, s.id, *s.parent);
    m.origin = origin;
    m.seq = seq;
    m.via = via.value_or(*s.parent);
    m.route = route_before;
    m.route.push_back(s.id);
    tr.out.push_back(std::move(m));
}

void buffer_data(NodeState& s, Transition& tr, BufferedData item, const ProtocolConfig& cfg) {
    tr.events.emplace_back("buffer", "origin=" + std::to_string(item.origin) +
                                         " seq=" + std::to_string(item.seq));
    s.data_buffer.push_back(std::move(item));
    while (s.data_buffer.size() > cfg.data_buffer_capacity) {  // drop oldest
        const auto& old = s.data_buffer.front();
        tr.events.emplace_back("drop", "buffer DATA origin=" + std::to_string(old.origin) +
                                           " seq=" + std::to_string(old.seq));
        s.data_buffer.pop_front();
    }
}

/// Shared tail of every (re)connection: answer recorded Request senders,
/// flush buffered data, drop the repair timers.
void on_connected(NodeState& s, Transition& tr) {
    s.broken_hops = 0;
    s.pending = false;
    s.pending_hops = 0;
    cancel_timer(s, TimerKind::RequestResend);
    cancel_timer(s, TimerKind::BacknBackoff);
    cancel_timer(s, TimerKind::ReplyGather);
    s.reply_candidates.clear();
    s.children.erase(*s.parent);  // a node never keeps its parent as a child
    s.child_last_forward.erase(*s.parent);
    for (NodeId sender : s.request_senders) {
        Message m = make_msg(MsgKind::Reply, s.id, sender);
        m.hops = s.hops;
        m.parent = s.parent;
        tr.out.push_back(std::move(m));
    }
    s.request_senders.clear();
    auto pending_buffer = std::move(s.data_buffer);
    s.data_buffer.clear();
    for (auto& item : pending_buffer) {
        tr.events.emplace_back("flush", "origin=" + std::to_string(item.origin) +
                                            " seq=" + std::to_string(item.seq));
        emit_data(s, tr, item.origin, item.seq, item.via, item.route);
    }
}

void prune_silent_children(NodeState& s, SimTime now, const ProtocolConfig& cfg, Transition& tr) {
    std::vector<NodeId> gone;
    for (const auto& [child, last] : s.child_last_forward)
        if (now - last > 3 * cfg.probe_interval) gone.push_back(child);
    for (NodeId child : gone) {
        s.children.erase(child);
        s.child_last_forward.erase(child);
        s.recent_failed_neighbors.insert(child);
        note(tr, "pruned silent child " + std::to_string(child));
    }
}

}  // namespace

Transition init_from_beacon(NodeState& s, NodeId from, Hops sender_hops, SimTime now,
                            const ProtocolConfig& cfg) {
    (void)now;
    Transition tr;
    if (!s.alive || s.is_base) return tr;
    if (s.beacon_seen) return tr;  // only the first beacon of the flood counts
    s.beacon_seen = true;
    const Hops mine = sender_hops.bumped(cfg.max_hops);
    if (mine.is_infinite()) {
        note(tr, "beacon hops at ceiling, staying unconnected");
        return tr;
    }
    s.parent = from;
    s.hops = mine;
    Message m = make_msg(MsgKind::Beacon, s.id, kBroadcast);
    m.hops = s.hops;
    tr.out.push_back(std::move(m));
    return tr;
}

Transition probe_parent(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive || s.is_base) return tr;
    prune_silent_children(s, now, cfg, tr);
    arm_timer(s, tr, TimerKind::ProbeTick, now + cfg.probe_interval);
    if (s.joining) return tr;  // the join handshake drives its own traffic
    if (s.parent) {
        tr.out.push_back(make_msg(MsgKind::Forward, s.id, *s.parent));
        if (!timer_armed(s, TimerKind::PptTimeout))
            arm_timer(s, tr, TimerKind::PptTimeout, now + cfg.timeout_ppt);
        return tr;
    }
    // Orphan: search instead of probing. The resend timer owns the cadence
    // once started; nodes the flood never reached stay silent.
    if (s.beacon_seen && s.hops.is_infinite() && !timer_armed(s, TimerKind::RequestResend) &&
        !timer_armed(s, TimerKind::ReplyGather)) {
        tr.out.push_back(make_msg(MsgKind::Request, s.id, kBroadcast));
        arm_timer(s, tr, TimerKind::RequestResend, now + cfg.request_resend_timeout);
    }
    return tr;
}

Transition handle_forward(NodeState& s, NodeId from, SimTime now, const ProtocolConfig& cfg) {
    (void)cfg;
    Transition tr;
    if (!s.alive) return tr;
    if (s.parent && from == *s.parent) {
        note(tr, "probe from own parent " + std::to_string(from));  // mutual-parent transient
    } else {
        s.children.insert(from);
        s.child_last_forward[from] = now;
    }
    if (s.hops.is_finite()) {
        Message m = make_msg(MsgKind::BackY, s.id, from);
        m.hops = s.hops;
        tr.out.push_back(std::move(m));
    } else {
        Message m = make_msg(MsgKind::BackN, s.id, from);
        m.broken_hops = std::max<std::uint32_t>(1, s.broken_hops);
        tr.out.push_back(std::move(m));
    }
    return tr;
}

Transition handle_back_y(NodeState& s, NodeId from, Hops hops, SimTime now,
                         const ProtocolConfig& cfg) {
    (void)now;
    Transition tr;
    if (!s.alive) return tr;
    if (!s.parent || from != *s.parent) {
        note(tr, "BACK_Y from non-parent " + std::to_string(from) + " ignored");
        return tr;
    }
    cancel_timer(s, TimerKind::PptTimeout);  // the probe was answered
    const Hops mine = hops.bumped(cfg.max_hops);
    if (mine.is_infinite()) {
        // Too deep to use; unconnected until the next probe round finds better.
        if (s.hops.is_finite()) {
            note(tr, "hops ceiling reached via parent");
            for (NodeId child : s.children) {
                Message m = make_msg(MsgKind::Pending, s.id, child);
                m.pending_hops = 1;
                tr.out.push_back(std::move(m));
            }
        }
        s.hops = Hops::infinity();
        return tr;
    }
    s.hops = mine;
    on_connected(s, tr);
    return tr;
}

Transition handle_ppt_timeout(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive || !s.parent) return tr;
    const bool was_connected = s.hops.is_finite();
    s.recent_failed_neighbors.insert(*s.parent);
    s.parent.reset();
    s.hops = Hops::infinity();
    s.broken_hops = 1;  // the break is right here
    // Pending notices go out before the search broadcast: same-instant
    // deliveries dispatch in scheduling order, so direct children are muted
    // before they can answer the Request with a route through this node.
    if (was_connected) {
        for (NodeId child : s.children) {
            Message m = make_msg(MsgKind::Pending, s.id, child);
            m.pending_hops = 1;
            tr.out.push_back(std::move(m));
        }
    }
    tr.out.push_back(make_msg(MsgKind::Request, s.id, kBroadcast));
    arm_timer(s, tr, TimerKind::RequestResend, now + cfg.request_resend_timeout);
    return tr;
}

Transition handle_back_n(NodeState& s, NodeId from, std::uint32_t broken_hops, SimTime now,
                         const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive) return tr;
    if (!s.parent || from != *s.parent) {
        note(tr, "BACK_N from non-parent " + std::to_string(from) + " ignored");
        return tr;
    }
    cancel_timer(s, TimerKind::PptTimeout);
    const bool was_connected = s.hops.is_finite();
    s.broken_hops = broken_hops + 1;
    s.hops = Hops::infinity();  // parent kept: it is alive, merely cut off
    if (was_connected) {  // descendants learn of a break exactly once
        for (NodeId child : s.children) {
            Message m = make_msg(MsgKind::Pending, s.id, child);
            m.pending_hops = 1;
            tr.out.push_back(std::move(m));
        }
    }
    // Wait out the upstream repair before searching; nodes closer to the
    // break (smaller broken_hops) start earlier.
    if (!timer_armed(s, TimerKind::BacknBackoff) && !timer_armed(s, TimerKind::RequestResend))
        arm_timer(s, tr, TimerKind::BacknBackoff,
                  now + cfg.backn_backoff_base * static_cast<SimTime>(broken_hops));
    return tr;
}

Transition handle_backn_backoff(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive || s.hops.is_finite()) return tr;
    tr.out.push_back(make_msg(MsgKind::Request, s.id, kBroadcast));
    arm_timer(s, tr, TimerKind::RequestResend, now + cfg.request_resend_timeout);
    return tr;
}

Transition handle_request(NodeState& s, NodeId from, SimTime now, const ProtocolConfig& cfg) {
    (void)now;
    (void)cfg;
    Transition tr;
    if (!s.alive) return tr;
    if (s.parent && from == *s.parent) {
        // Our own path runs through the requester; answering would only offer
        // it a loop through itself.
        note(tr, "REQUEST from own parent " + std::to_string(from) + ", staying silent");
        return tr;
    }
    if (s.hops.is_finite() && !s.pending) {
        Message m = make_msg(MsgKind::Reply, s.id, from);
        m.hops = s.hops;
        m.parent = s.parent;
        tr.out.push_back(std::move(m));
    } else {
        s.request_senders.insert(from);  // answered once this node reconnects
    }
    return tr;
}

Transition handle_reply(NodeState& s, NodeId from, Hops hops, std::optional<NodeId> their_parent,
                        SimTime now, const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive) return tr;
    if (s.hops.is_finite() || s.joining) {
        note(tr, "stale REPLY from " + std::to_string(from) + " ignored");
        return tr;
    }
    ParentCandidate cand;
    cand.neighbor = from;
    cand.hops = hops;
    cand.neighbor_parent = their_parent;
    if (auto it = s.neighbor_positions.find(from); it != s.neighbor_positions.end())
        cand.position = it->second;
    auto existing = std::find_if(s.reply_candidates.begin(), s.reply_candidates.end(),
                                 [&](const ParentCandidate& c) { return c.neighbor == from; });
    if (existing != s.reply_candidates.end())
        *existing = cand;
    else
        s.reply_candidates.push_back(cand);
    if (!timer_armed(s, TimerKind::ReplyGather))
        arm_timer(s, tr, TimerKind::ReplyGather, now + cfg.timeout_ppt);
    return tr;
}

double metric_score(const ParentCandidate& cand, const NodeState& s, const ProtocolConfig& cfg) {
    const double hop_score = static_cast<double>(cand.hops.value());
    if (cfg.metric == ProtocolConfig::Metric::Hop) return hop_score;
    if (!s.position || !cand.position || s.recent_failed_neighbors.empty()) return hop_score;
    // Mean bearing of the observed failures, seen from this node.
    double sx = 0, sy = 0;
    bool any = false;
    for (NodeId f : s.recent_failed_neighbors) {
        auto it = s.neighbor_positions.find(f);
        if (it == s.neighbor_positions.end()) continue;
        const double dx = it->second.x - s.position->x;
        const double dy = it->second.y - s.position->y;
        const double len = std::sqrt(dx * dx + dy * dy);
        if (len == 0) continue;
        sx += dx / len;
        sy += dy / len;
        any = true;
    }
    if (!any || (sx == 0 && sy == 0)) return hop_score;
    const double failed_bearing = std::atan2(sy, sx);
    const double cand_bearing =
        std::atan2(cand.position->y - s.position->y, cand.position->x - s.position->x);
    double diff = std::fabs(cand_bearing - failed_bearing);
    const double pi = std::acos(-1.0);
    if (diff > pi) diff = 2 * pi - diff;
    // Candidates pointing into the failed sector are discouraged.
    if (diff <= pi / 3.0) return hop_score + cfg.location_penalty;
    return hop_score;
}

Transition select_new_parent(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive) return tr;
    auto candidates = std::move(s.reply_candidates);
    s.reply_candidates.clear();
    if (s.hops.is_finite()) return tr;  // reconnected while gathering

    if (cfg.metric == ProtocolConfig::Metric::Location && !s.position)
        note(tr, "location metric without positions, falling back to hop metric");

    const ParentCandidate* best = nullptr;
    double best_score = 0;
    for (const auto& cand : candidates) {
        if (cand.hops.is_infinite()) continue;
        if (cand.hops.bumped(cfg.max_hops).is_infinite()) continue;
        if (cand.neighbor_parent && *cand.neighbor_parent == s.id) {
            note(tr, "candidate " + std::to_string(cand.neighbor) +
                         " routes through us, rejected (two-node loop)");
            continue;
        }
        if (cand.neighbor_parent && s.children.count(*cand.neighbor_parent)) {
            note(tr, "candidate " + std::to_string(cand.neighbor) +
                         " routes through our child, rejected (three-node loop)");
            continue;
        }
        const double score = metric_score(cand, s, cfg);
        if (!best || score < best_score ||
            (score == best_score && cand.neighbor < best->neighbor)) {
            best = &cand;
            best_score = score;
        }
    }
    if (!best) {
        note(tr, "no usable parent candidate");
        if (!timer_armed(s, TimerKind::RequestResend))
            arm_timer(s, tr, TimerKind::RequestResend, now + cfg.request_resend_timeout);
        return tr;
    }
    s.parent = best->neighbor;
    s.hops = best->hops.bumped(cfg.max_hops);
    on_connected(s, tr);
    return tr;
}

Transition handle_request_resend(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive || s.hops.is_finite()) return tr;
    if (timer_armed(s, TimerKind::ReplyGather)) {  // a selection is in flight
        arm_timer(s, tr, TimerKind::RequestResend, now + cfg.request_resend_timeout);
        return tr;
    }
    tr.out.push_back(make_msg(MsgKind::Request, s.id, kBroadcast));
    arm_timer(s, tr, TimerKind::RequestResend, now + cfg.request_resend_timeout);
    return tr;
}

Transition handle_pending(NodeState& s, NodeId from, std::uint32_t pending_hops, SimTime now,
                          const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive) return tr;
    if (!s.parent || from != *s.parent) {
        note(tr, "PENDING from non-parent " + std::to_string(from) + " ignored");
        return tr;
    }
    s.pending = true;
    s.pending_hops = pending_hops + 1;
    arm_timer(s, tr, TimerKind::PendingForward, now + cfg.pending_forward_delay);
    return tr;
}

Transition handle_pending_forward(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    (void)now;
    (void)cfg;
    Transition tr;
    if (!s.alive || !s.pending) return tr;
    for (NodeId child : s.children) {
        Message m = make_msg(MsgKind::Pending, s.id, child);
        m.pending_hops = s.pending_hops;
        tr.out.push_back(std::move(m));
    }
    return tr;
}

Transition generate_data(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    (void)now;
    Transition tr;
    if (!s.alive || s.is_base) return tr;
    const std::uint32_t seq = ++s.data_seq;
    tr.events.emplace_back("gen",
                           "origin=" + std::to_string(s.id) + " seq=" + std::to_string(seq));
    if (s.hops.is_finite() && !s.pending)
        emit_data(s, tr, s.id, seq, std::nullopt, {});
    else
        buffer_data(s, tr, BufferedData{s.id, seq, std::nullopt, {}}, cfg);
    return tr;
}

Transition forward_data(NodeState& s, const Message& data, SimTime now,
                        const ProtocolConfig& cfg) {
    (void)now;
    Transition tr;
    if (!s.alive) return tr;
    if (s.is_base) {
        tr.events.emplace_back("data_bs", "origin=" + std::to_string(data.origin) +
                                              " seq=" + std::to_string(data.seq) +
                                              " via=" + std::to_string(data.via));
        if (!data.route.empty()) {  // ack retraces the recorded path
            Message ack = make_msg(MsgKind::DataAck, s.id, data.route.back());
            ack.origin = data.origin;
            ack.seq = data.seq;
            ack.via = data.via;
            ack.route.assign(data.route.rbegin() + 1, data.route.rend());
            tr.out.push_back(std::move(ack));
        }
        return tr;
    }
    if (s.hops.is_finite() && !s.pending)
        emit_data(s, tr, data.origin, data.seq, data.via, data.route);
    else
        buffer_data(s, tr, BufferedData{data.origin, data.seq, data.via, data.route}, cfg);
    return tr;
}

Transition handle_data_ack(NodeState& s, const Message& ack, SimTime now,
                           const ProtocolConfig& cfg) {
    (void)now;
    (void)cfg;
    Transition tr;
    if (!s.alive) return tr;
    if (!ack.route.empty()) {  // keep retracing towards the origin
        Message next = ack;
        next.src = s.id;
        next.dst = ack.route.front();
        next.route.erase(next.route.begin());
        tr.out.push_back(std::move(next));
        return tr;
    }
    if (!s.race || ack.seq != s.race->seq) return tr;  // plain ack, nothing to decide
    const SwitchRace race = *s.race;
    s.race.reset();
    cancel_timer(s, TimerKind::RaceTimeout);
    if (ack.via == race.neighbor) {
        if (s.children.count(race.neighbor)) {
            // The neighbor started routing through us while the race ran.
            tr.events.emplace_back("race", "keep (neighbor became child)");
            return tr;
        }
        const Hops via_neighbor = race.neighbor_hops.bumped(cfg.max_hops);
        if (via_neighbor.is_infinite() || !(via_neighbor < s.hops)) {
            tr.events.emplace_back("race", "keep (no longer shorter)");
            return tr;
        }
        s.parent = race.neighbor;
        s.hops = via_neighbor;
        tr.events.emplace_back("race", "switch parent=" + std::to_string(race.neighbor));
        on_connected(s, tr);
        return tr;
    }
    tr.events.emplace_back("race", "keep parent");
    return tr;
}

Transition node_join(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive || !s.joining || s.parent) return tr;
    tr.out.push_back(make_msg(MsgKind::JoinProbe, s.id, kBroadcast));
    arm_timer(s, tr, TimerKind::JoinRetry, now + cfg.request_resend_timeout);
    return tr;
}

Transition handle_join_probe(NodeState& s, NodeId from, SimTime now, const ProtocolConfig& cfg) {
    (void)now;
    (void)cfg;
    Transition tr;
    if (!s.alive) return tr;
    if (s.hops.is_infinite()) return tr;  // nothing useful to offer
    Message m = make_msg(MsgKind::JoinInfo, s.id, from);
    m.hops = s.hops;
    tr.out.push_back(std::move(m));
    return tr;
}

Transition handle_join_info(NodeState& s, NodeId from, Hops hops, SimTime now,
                            const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive) return tr;
    if (s.joining) {
        auto existing =
            std::find_if(s.join_candidates.begin(), s.join_candidates.end(),
                         [&](const auto& c) { return c.first == from; });
        if (existing != s.join_candidates.end())
            existing->second = hops;
        else
            s.join_candidates.emplace_back(from, hops);
        if (!timer_armed(s, TimerKind::JoinGather))
            arm_timer(s, tr, TimerKind::JoinGather, now + cfg.timeout_ppt);
        return tr;
    }
    // A neighbor announcing a shorter path: maybe switch, but conservatively.
    return consider_shorter_parent(s, from, hops, now, cfg);
}

Transition finish_join_gather(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    (void)now;
    Transition tr;
    if (!s.alive || !s.joining) return tr;
    auto candidates = std::move(s.join_candidates);
    s.join_candidates.clear();
    const std::pair<NodeId, Hops>* best = nullptr;
    for (const auto& cand : candidates) {
        if (cand.second.bumped(cfg.max_hops).is_infinite()) continue;
        if (!best || cand.second < best->second ||
            (cand.second == best->second && cand.first < best->first))
            best = &cand;
    }
    if (!best) {
        note(tr, "no usable join answer yet");  // JoinRetry keeps probing
        return tr;
    }
    s.joining = false;
    cancel_timer(s, TimerKind::JoinRetry);
    s.parent = best->first;
    s.hops = best->second.bumped(cfg.max_hops);
    on_connected(s, tr);
    // Announce the new path; neighbors with longer routes may profit from it.
    Message m = make_msg(MsgKind::JoinInfo, s.id, kBroadcast);
    m.hops = s.hops;
    tr.out.push_back(std::move(m));
    return tr;
}

Transition consider_shorter_parent(NodeState& s, NodeId neighbor, Hops neighbor_hops, SimTime now,
                                   const ProtocolConfig& cfg) {
    Transition tr;
    if (!s.alive || s.is_base || s.joining) return tr;
    if (s.hops.is_infinite() || s.pending || s.race) return tr;
    if (!s.parent || neighbor == *s.parent) return tr;
    if (s.children.count(neighbor)) return tr;  // its path runs through us
    const Hops via_neighbor = neighbor_hops.bumped(cfg.max_hops);
    if (via_neighbor.is_infinite() || !(via_neighbor < s.hops)) return tr;
    // Race two copies of a real payload to the base station; switch only if
    // the copy through the neighbor is acknowledged first.
    const std::uint32_t seq = ++s.data_seq;
    s.race = SwitchRace{neighbor, neighbor_hops, seq};
    tr.events.emplace_back("gen",
                           "origin=" + std::to_string(s.id) + " seq=" + std::to_string(seq));
    tr.events.emplace_back("race", "start neighbor=" + std::to_string(neighbor) +
                                       " seq=" + std::to_string(seq));
    Message via_n = make_msg(MsgKind::Data, s.id, neighbor);
    via_n.origin = s.id;
    via_n.seq = seq;
    via_n.via = neighbor;
    via_n.route = {s.id};
    tr.out.push_back(std::move(via_n));
    Message via_p = make_msg(MsgKind::Data, s.id, *s.parent);
    via_p.origin = s.id;
    via_p.seq = seq;
    via_p.via = *s.parent;
    via_p.route = {s.id};
    tr.out.push_back(std::move(via_p));
    arm_timer(s, tr, TimerKind::RaceTimeout, now + cfg.request_resend_timeout);
    return tr;
}

Transition handle_race_timeout(NodeState& s, SimTime now, const ProtocolConfig& cfg) {
    (void)now;
    (void)cfg;
    Transition tr;
    if (!s.alive || !s.race) return tr;
    s.race.reset();
    tr.events.emplace_back("race", "abandon (no ack)");
    return tr;
}

}  // namespace wsn
