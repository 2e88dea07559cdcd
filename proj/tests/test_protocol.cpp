#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "wsn/protocol.hpp"

using namespace wsn;

namespace {

const ProtocolConfig kCfg;  // defaults

NodeState orphan_node(NodeId id) {
    NodeState s;
    s.id = id;
    s.beacon_seen = true;
    return s;
}

NodeState connected_node(NodeId id, NodeId parent, std::uint32_t hops) {
    NodeState s = orphan_node(id);
    s.parent = parent;
    s.hops = Hops::finite(hops);
    return s;
}

bool has_timer(const Transition& tr, TimerKind kind) {
    return std::any_of(tr.arm.begin(), tr.arm.end(),
                       [&](const TimerRequest& t) { return t.kind == kind; });
}

SimTime timer_deadline(const Transition& tr, TimerKind kind) {
    for (const auto& t : tr.arm)
        if (t.kind == kind) return t.deadline;
    FAIL("timer not armed");
    return 0;
}

std::size_t count_kind(const Transition& tr, MsgKind kind) {
    return std::count_if(tr.out.begin(), tr.out.end(),
                         [&](const Message& m) { return m.kind == kind; });
}

const Message& only_msg(const Transition& tr, MsgKind kind) {
    REQUIRE(count_kind(tr, kind) == 1);
    return *std::find_if(tr.out.begin(), tr.out.end(),
                         [&](const Message& m) { return m.kind == kind; });
}

bool has_event(const Transition& tr, const std::string& event, const std::string& details) {
    return std::any_of(tr.events.begin(), tr.events.end(), [&](const auto& e) {
        return e.first == event && e.second == details;
    });
}

bool has_note_containing(const Transition& tr, const std::string& fragment) {
    return std::any_of(tr.events.begin(), tr.events.end(), [&](const auto& e) {
        return e.first == "note" && e.second.find(fragment) != std::string::npos;
    });
}

}  // namespace

TEST_CASE("message rendering") {
    Message m;
    m.kind = MsgKind::Beacon;
    m.src = 1;
    m.hops = Hops::finite(0);
    CHECK(render_message(m) == "BEACON 1 * hops=0");

    m = Message{};
    m.kind = MsgKind::Reply;
    m.src = 4;
    m.dst = 2;
    m.hops = Hops::finite(3);
    CHECK(render_message(m) == "REPLY 4 2 hops=3 parent=-");
    m.parent = 7;
    CHECK(render_message(m) == "REPLY 4 2 hops=3 parent=7");
    m.hops = Hops::infinity();
    CHECK(render_message(m) == "REPLY 4 2 hops=inf parent=7");

    m = Message{};
    m.kind = MsgKind::BackN;
    m.src = 3;
    m.dst = 5;
    m.broken_hops = 2;
    CHECK(render_message(m) == "BACK_N 3 5 broken=2");

    m = Message{};
    m.kind = MsgKind::Data;
    m.src = 5;
    m.dst = 4;
    m.origin = 5;
    m.seq = 9;
    m.via = 4;
    m.route = {5};  // never rendered
    CHECK(render_message(m) == "DATA 5 4 origin=5 seq=9 via=4");

    m = Message{};
    m.kind = MsgKind::Forward;
    m.src = 2;
    m.dst = 1;
    CHECK(render_message(m) == "FORWARD 2 1");

    m = Message{};
    m.kind = MsgKind::Pending;
    m.src = 2;
    m.dst = 6;
    m.pending_hops = 3;
    CHECK(render_message(m) == "PENDING 2 6 pending=3");

    CHECK(std::string(timer_kind_name(TimerKind::PptTimeout)) == "ppt_timeout");
    CHECK(std::string(msg_kind_name(MsgKind::JoinProbe)) == "JOIN_PROBE");
}

TEST_CASE("bootstrap flood: only the first beacon counts") {
    NodeState s;
    s.id = 2;
    Transition tr = init_from_beacon(s, 1, Hops::finite(0), 0, kCfg);
    CHECK(s.parent == 1);
    CHECK(s.hops == Hops::finite(1));
    CHECK(s.beacon_seen);
    const Message& rebroadcast = only_msg(tr, MsgKind::Beacon);
    CHECK(rebroadcast.dst == kBroadcast);
    CHECK(rebroadcast.hops == Hops::finite(1));

    // A later, even better beacon changes nothing.
    tr = init_from_beacon(s, 9, Hops::finite(0), 10, kCfg);
    CHECK(tr.out.empty());
    CHECK(s.parent == 1);

    NodeState base;
    base.id = 1;
    base.is_base = true;
    base.hops = Hops::finite(0);
    CHECK(init_from_beacon(base, 2, Hops::finite(1), 0, kCfg).out.empty());

    NodeState deep;
    deep.id = 3;
    ProtocolConfig shallow = kCfg;
    shallow.max_hops = 2;
    tr = init_from_beacon(deep, 1, Hops::finite(1), 0, shallow);  // 1+1 >= ceiling
    CHECK(deep.beacon_seen);
    CHECK(deep.hops.is_infinite());
    CHECK_FALSE(deep.parent.has_value());
    CHECK(tr.out.empty());
    CHECK(has_note_containing(tr, "ceiling"));
}

TEST_CASE("probe cycle: Forward towards the parent, answer deadline armed") {
    NodeState s = connected_node(3, 2, 2);
    Transition tr = probe_parent(s, 1'000'000, kCfg);
    CHECK(only_msg(tr, MsgKind::Forward).dst == 2);
    CHECK(timer_deadline(tr, TimerKind::ProbeTick) == 1'000'000 + kCfg.probe_interval);
    CHECK(timer_deadline(tr, TimerKind::PptTimeout) == 1'000'000 + kCfg.timeout_ppt);

    // With the deadline still armed, a second tick does not arm another.
    Transition again = probe_parent(s, 2'000'000, kCfg);
    CHECK(count_kind(again, MsgKind::Forward) == 1);
    CHECK_FALSE(has_timer(again, TimerKind::PptTimeout));

    NodeState base;
    base.id = 1;
    base.is_base = true;
    CHECK(probe_parent(base, 0, kCfg).arm.empty());  // the base never probes

    NodeState joining = orphan_node(9);
    joining.joining = true;
    tr = probe_parent(joining, 0, kCfg);
    CHECK(tr.out.empty());  // join handshake owns the traffic
    CHECK(has_timer(tr, TimerKind::ProbeTick));
}

TEST_CASE("orphan probe ticks search instead of probing") {
    NodeState s = orphan_node(4);
    Transition tr = probe_parent(s, 5'000'000, kCfg);
    CHECK(only_msg(tr, MsgKind::Request).dst == kBroadcast);
    CHECK(has_timer(tr, TimerKind::RequestResend));

    // The resend timer owns the cadence: the next tick stays quiet.
    tr = probe_parent(s, 10'000'000, kCfg);
    CHECK(tr.out.empty());

    NodeState unreached;  // the flood never got here: nothing to ask for
    unreached.id = 5;
    tr = probe_parent(unreached, 5'000'000, kCfg);
    CHECK(tr.out.empty());
    CHECK(has_timer(tr, TimerKind::ProbeTick));
}

TEST_CASE("silent children are pruned and remembered as failures") {
    NodeState s = connected_node(2, 1, 1);
    s.children = {5, 6};
    s.child_last_forward[5] = 0;
    s.child_last_forward[6] = 14'000'000;
    const SimTime now = 16'000'000;  // node 5 last seen 16 s ago, limit is 15 s
    Transition tr = probe_parent(s, now, kCfg);
    CHECK(s.children == std::set<NodeId>{6});
    CHECK(s.recent_failed_neighbors.count(5) == 1);
    CHECK(has_note_containing(tr, "pruned silent child 5"));
}

TEST_CASE("probe answers: Back-Y when connected, Back-N with break distance") {
    NodeState s = connected_node(2, 1, 1);
    Transition tr = handle_forward(s, 5, 100, kCfg);
    CHECK(s.children == std::set<NodeId>{5});
    CHECK(s.child_last_forward[5] == 100);
    const Message& yes = only_msg(tr, MsgKind::BackY);
    CHECK(yes.dst == 5);
    CHECK(yes.hops == Hops::finite(1));

    NodeState broken = orphan_node(3);
    broken.parent = 2;  // kept after a Back-N
    broken.broken_hops = 2;
    tr = handle_forward(broken, 6, 0, kCfg);
    const Message& no = only_msg(tr, MsgKind::BackN);
    CHECK(no.broken_hops == 2);

    NodeState fresh_break = orphan_node(4);
    fresh_break.parent = 2;
    tr = handle_forward(fresh_break, 7, 0, kCfg);
    CHECK(only_msg(tr, MsgKind::BackN).broken_hops == 1);  // never less than one

    // A probe from our own parent answers but must not become a child.
    NodeState mutual = connected_node(5, 6, 2);
    tr = handle_forward(mutual, 6, 0, kCfg);
    CHECK(mutual.children.empty());
    CHECK(has_note_containing(tr, "probe from own parent 6"));
    CHECK(count_kind(tr, MsgKind::BackY) == 1);
}

TEST_CASE("Back-Y refreshes the path and clears the answer deadline") {
    NodeState s = connected_node(3, 2, 5);
    s.active_timers[TimerKind::PptTimeout] = 7;
    Transition tr = handle_back_y(s, 2, Hops::finite(1), 0, kCfg);
    CHECK(s.hops == Hops::finite(2));
    CHECK(s.active_timers.count(TimerKind::PptTimeout) == 0);
    CHECK(tr.out.empty());

    tr = handle_back_y(s, 9, Hops::finite(0), 0, kCfg);  // not our parent
    CHECK(s.hops == Hops::finite(2));
    CHECK(has_note_containing(tr, "BACK_Y from non-parent 9"));
}

TEST_CASE("Back-Y at the hops ceiling disconnects and warns the children once") {
    ProtocolConfig cfg = kCfg;
    cfg.max_hops = 4;
    NodeState s = connected_node(3, 2, 3);
    s.children = {8, 9};
    Transition tr = handle_back_y(s, 2, Hops::finite(3), 0, cfg);  // 3+1 >= 4
    CHECK(s.hops.is_infinite());
    CHECK(s.parent == 2);  // parent kept: it answered, the path is just too long
    CHECK(count_kind(tr, MsgKind::Pending) == 2);
    CHECK(has_note_containing(tr, "ceiling"));

    // Already infinite: no second round of notices.
    tr = handle_back_y(s, 2, Hops::finite(3), 0, cfg);
    CHECK(count_kind(tr, MsgKind::Pending) == 0);
}

TEST_CASE("probe timeout: orphaned, children muted before the search goes out") {
    NodeState s = connected_node(3, 2, 2);
    s.children = {7, 8};
    Transition tr = handle_ppt_timeout(s, 1'000'000, kCfg);
    CHECK_FALSE(s.parent.has_value());
    CHECK(s.hops.is_infinite());
    CHECK(s.broken_hops == 1);
    CHECK(s.recent_failed_neighbors.count(2) == 1);
    REQUIRE(tr.out.size() == 3);
    // Pending to each child first, the Request broadcast strictly after: at
    // equal delivery times the children must already be muted.
    CHECK(tr.out[0].kind == MsgKind::Pending);
    CHECK(tr.out[1].kind == MsgKind::Pending);
    CHECK(tr.out[0].pending_hops == 1);
    CHECK(tr.out[2].kind == MsgKind::Request);
    CHECK(timer_deadline(tr, TimerKind::RequestResend) ==
          1'000'000 + kCfg.request_resend_timeout);

    // Parent already gone: a stale timeout does nothing.
    CHECK(handle_ppt_timeout(s, 2'000'000, kCfg).out.empty());
}

TEST_CASE("Back-N: remember the break distance, keep the parent, back off") {
    NodeState s = connected_node(4, 3, 3);
    s.children = {9};
    Transition tr = handle_back_n(s, 3, 2, 1'000'000, kCfg);
    CHECK(s.parent == 3);  // alive, merely cut off upstream
    CHECK(s.hops.is_infinite());
    CHECK(s.broken_hops == 3);
    CHECK(count_kind(tr, MsgKind::Pending) == 1);
    CHECK(timer_deadline(tr, TimerKind::BacknBackoff) ==
          1'000'000 + 2 * kCfg.backn_backoff_base);  // scaled by the distance

    // Second Back-N: notice already sent, backoff already armed.
    tr = handle_back_n(s, 3, 2, 2'000'000, kCfg);
    CHECK(count_kind(tr, MsgKind::Pending) == 0);
    CHECK_FALSE(has_timer(tr, TimerKind::BacknBackoff));

    NodeState searching = connected_node(5, 3, 3);
    searching.active_timers[TimerKind::RequestResend] = 1;  // already searching
    tr = handle_back_n(searching, 3, 1, 0, kCfg);
    CHECK_FALSE(has_timer(tr, TimerKind::BacknBackoff));

    NodeState other = connected_node(6, 3, 3);
    tr = handle_back_n(other, 9, 1, 0, kCfg);  // not our parent
    CHECK(other.hops.is_finite());
    CHECK(has_note_containing(tr, "BACK_N from non-parent 9"));
}

TEST_CASE("backoff expiry starts the search unless already reconnected") {
    NodeState s = orphan_node(4);
    s.parent = 3;
    Transition tr = handle_backn_backoff(s, 2'000'000, kCfg);
    CHECK(count_kind(tr, MsgKind::Request) == 1);
    CHECK(has_timer(tr, TimerKind::RequestResend));

    NodeState healed = connected_node(5, 3, 2);
    CHECK(handle_backn_backoff(healed, 0, kCfg).out.empty());
}

TEST_CASE("Request handling: answer, defer, or keep silent towards the parent") {
    NodeState s = connected_node(3, 2, 2);
    Transition tr = handle_request(s, 7, 0, kCfg);
    const Message& reply = only_msg(tr, MsgKind::Reply);
    CHECK(reply.dst == 7);
    CHECK(reply.hops == Hops::finite(2));
    CHECK(reply.parent == 2);

    // Our own route runs through the requester: silence, not a loop offer.
    tr = handle_request(s, 2, 0, kCfg);
    CHECK(tr.out.empty());
    CHECK(s.request_senders.empty());
    CHECK(has_note_containing(tr, "REQUEST from own parent 2"));

    NodeState muted = connected_node(4, 3, 3);
    muted.pending = true;
    tr = handle_request(muted, 8, 0, kCfg);
    CHECK(tr.out.empty());
    CHECK(muted.request_senders == std::set<NodeId>{8});

    NodeState cut = orphan_node(5);
    tr = handle_request(cut, 9, 0, kCfg);
    CHECK(tr.out.empty());
    CHECK(cut.request_senders == std::set<NodeId>{9});
}

TEST_CASE("Reply gathering and parent selection") {
    NodeState s = orphan_node(4);
    s.children = {6};

    Transition tr = handle_reply(s, 2, Hops::finite(3), 1, 1'000'000, kCfg);
    CHECK(timer_deadline(tr, TimerKind::ReplyGather) == 1'000'000 + kCfg.timeout_ppt);
    tr = handle_reply(s, 3, Hops::finite(2), 1, 1'010'000, kCfg);
    CHECK_FALSE(has_timer(tr, TimerKind::ReplyGather));  // armed once per gather
    tr = handle_reply(s, 2, Hops::finite(1), 1, 1'020'000, kCfg);  // upsert
    REQUIRE(s.reply_candidates.size() == 2);
    CHECK(s.reply_candidates[0].hops == Hops::finite(1));

    tr = select_new_parent(s, 2'000'000, kCfg);
    CHECK(s.parent == 2);  // hops 1 beats hops 2
    CHECK(s.hops == Hops::finite(2));
    CHECK(s.broken_hops == 0);
    CHECK(s.reply_candidates.empty());

    NodeState settled = connected_node(5, 1, 1);
    tr = handle_reply(settled, 9, Hops::finite(1), 1, 0, kCfg);
    CHECK(settled.reply_candidates.empty());
    CHECK(has_note_containing(tr, "stale REPLY from 9"));
}

TEST_CASE("parent selection refuses candidates that route back through us") {
    NodeState s = orphan_node(4);
    s.children = {6};
    s.reply_candidates.push_back({2, Hops::finite(1), 4, {}});   // two-node loop: parent is us
    s.reply_candidates.push_back({3, Hops::finite(2), 6, {}});   // three-node loop: via our child
    Transition tr = select_new_parent(s, 0, kCfg);
    CHECK_FALSE(s.parent.has_value());
    CHECK(has_note_containing(tr, "candidate 2 routes through us"));
    CHECK(has_note_containing(tr, "candidate 3 routes through our child"));
    CHECK(has_note_containing(tr, "no usable parent candidate"));
    CHECK(has_timer(tr, TimerKind::RequestResend));

    // A deeper route through a non-child passes the filters.
    s.reply_candidates.push_back({7, Hops::finite(5), 9, {}});
    tr = select_new_parent(s, 0, kCfg);
    CHECK(s.parent == 7);
    CHECK(s.hops == Hops::finite(6));
}

TEST_CASE("parent selection: ties break towards the smaller id, ceiling excluded") {
    ProtocolConfig cfg = kCfg;
    cfg.max_hops = 8;
    NodeState s = orphan_node(4);
    s.reply_candidates.push_back({9, Hops::finite(2), 1, {}});
    s.reply_candidates.push_back({5, Hops::finite(2), 1, {}});
    s.reply_candidates.push_back({2, Hops::finite(7), 1, {}});  // 7+1 over the ceiling
    s.reply_candidates.push_back({3, Hops::infinity(), 1, {}});
    select_new_parent(s, 0, cfg);
    CHECK(s.parent == 5);

    NodeState reconnected = connected_node(6, 1, 1);
    reconnected.reply_candidates.push_back({5, Hops::finite(1), 1, {}});
    Transition tr = select_new_parent(reconnected, 0, cfg);  // healed while gathering
    CHECK(reconnected.parent == 1);
    CHECK(tr.out.empty());
    CHECK(reconnected.reply_candidates.empty());
}

TEST_CASE("reconnecting answers deferred requesters and flushes buffered data") {
    NodeState s = orphan_node(4);
    s.request_senders = {8, 6};
    s.data_buffer.push_back({4, 1, std::nullopt, {}});
    s.data_buffer.push_back({9, 3, 4, {9}});
    s.children = {2, 6};  // node 2 will become the parent and must stop being a child
    s.child_last_forward[2] = 50;
    s.reply_candidates.push_back({2, Hops::finite(1), 1, {}});
    Transition tr = select_new_parent(s, 0, kCfg);
    CHECK(s.parent == 2);
    CHECK(s.children == std::set<NodeId>{6});
    CHECK(s.child_last_forward.count(2) == 0);

    REQUIRE(count_kind(tr, MsgKind::Reply) == 2);
    CHECK(tr.out[0].kind == MsgKind::Reply);
    CHECK(tr.out[0].dst == 6);  // ascending order
    CHECK(tr.out[1].dst == 8);
    CHECK(s.request_senders.empty());

    REQUIRE(count_kind(tr, MsgKind::Data) == 2);
    CHECK(has_event(tr, "flush", "origin=4 seq=1"));
    CHECK(has_event(tr, "flush", "origin=9 seq=3"));
    const Message& own = tr.out[2];
    CHECK(own.via == 2);  // buffered at the origin: the new parent is the way out
    CHECK(own.route == std::vector<NodeId>{4});
    const Message& relayed = tr.out[3];
    CHECK(relayed.via == 4);  // relayed data keeps its original first hop
    CHECK(relayed.route == std::vector<NodeId>{9, 4});
    CHECK(s.data_buffer.empty());
}

TEST_CASE("search resends back off while a selection is in flight") {
    NodeState s = orphan_node(4);
    Transition tr = handle_request_resend(s, 1'000'000, kCfg);
    CHECK(count_kind(tr, MsgKind::Request) == 1);
    CHECK(has_timer(tr, TimerKind::RequestResend));

    s.active_timers[TimerKind::ReplyGather] = 3;
    tr = handle_request_resend(s, 2'000'000, kCfg);
    CHECK(tr.out.empty());  // replies are being gathered; only re-arm
    CHECK(has_timer(tr, TimerKind::RequestResend));

    NodeState healed = connected_node(5, 1, 1);
    CHECK(handle_request_resend(healed, 0, kCfg).arm.empty());
}

TEST_CASE("break notices travel towards the leaves with growing distance") {
    NodeState s = connected_node(4, 3, 3);
    s.children = {7, 8};
    Transition tr = handle_pending(s, 3, 2, 1'000'000, kCfg);
    CHECK(s.pending);
    CHECK(s.pending_hops == 3);
    CHECK(timer_deadline(tr, TimerKind::PendingForward) ==
          1'000'000 + kCfg.pending_forward_delay);

    tr = handle_pending_forward(s, 1'010'000, kCfg);
    REQUIRE(count_kind(tr, MsgKind::Pending) == 2);
    CHECK(tr.out[0].pending_hops == 3);

    NodeState other = connected_node(5, 3, 3);
    tr = handle_pending(other, 9, 1, 0, kCfg);  // not our parent
    CHECK_FALSE(other.pending);
    CHECK(has_note_containing(tr, "PENDING from non-parent 9"));

    NodeState idle = connected_node(6, 3, 3);
    CHECK(handle_pending_forward(idle, 0, kCfg).out.empty());  // nothing pending
}

TEST_CASE("data generation sends when the path is clean, else buffers") {
    NodeState s = connected_node(3, 2, 2);
    Transition tr = generate_data(s, 0, kCfg);
    CHECK(has_event(tr, "gen", "origin=3 seq=1"));
    const Message& d = only_msg(tr, MsgKind::Data);
    CHECK(d.dst == 2);
    CHECK(d.via == 2);
    CHECK(d.route == std::vector<NodeId>{3});

    s.pending = true;
    tr = generate_data(s, 0, kCfg);
    CHECK(tr.out.empty());
    CHECK(has_event(tr, "gen", "origin=3 seq=2"));
    CHECK(has_event(tr, "buffer", "origin=3 seq=2"));
    CHECK(s.data_buffer.size() == 1);
    CHECK(s.data_seq == 2);
}

TEST_CASE("the data buffer drops its oldest entries over capacity") {
    ProtocolConfig cfg = kCfg;
    cfg.data_buffer_capacity = 2;
    NodeState s = orphan_node(3);
    generate_data(s, 0, cfg);
    generate_data(s, 1, cfg);
    Transition tr = generate_data(s, 2, cfg);
    CHECK(has_event(tr, "drop", "buffer DATA origin=3 seq=1"));
    REQUIRE(s.data_buffer.size() == 2);
    CHECK(s.data_buffer.front().seq == 2);
    CHECK(s.data_buffer.back().seq == 3);
}

TEST_CASE("relays extend the recorded route; the base answers along it") {
    Message d;
    d.kind = MsgKind::Data;
    d.src = 5;
    d.dst = 4;
    d.origin = 5;
    d.seq = 2;
    d.via = 4;
    d.route = {5};

    NodeState relay = connected_node(4, 2, 2);
    Transition tr = forward_data(relay, d, 0, kCfg);
    const Message& fwd = only_msg(tr, MsgKind::Data);
    CHECK(fwd.dst == 2);
    CHECK(fwd.route == std::vector<NodeId>{5, 4});
    CHECK(fwd.via == 4);  // the origin's first hop rides along unchanged

    NodeState base;
    base.id = 1;
    base.is_base = true;
    base.hops = Hops::finite(0);
    Message at_base = fwd;
    at_base.src = 4;
    at_base.dst = 1;
    tr = forward_data(base, at_base, 0, kCfg);
    CHECK(has_event(tr, "data_bs", "origin=5 seq=2 via=4"));
    const Message& ack = only_msg(tr, MsgKind::DataAck);
    CHECK(ack.dst == 4);  // back along the recorded path
    CHECK(ack.route == std::vector<NodeId>{5});
    CHECK(ack.origin == 5);

    NodeState muted = connected_node(4, 2, 2);
    muted.pending = true;
    tr = forward_data(muted, d, 0, kCfg);
    CHECK(tr.out.empty());
    CHECK(has_event(tr, "buffer", "origin=5 seq=2"));
    REQUIRE(muted.data_buffer.size() == 1);
    CHECK(muted.data_buffer.front().via == 4);
    CHECK(muted.data_buffer.front().route == std::vector<NodeId>{5});
}

TEST_CASE("acks retrace the route hop by hop") {
    NodeState relay = connected_node(4, 2, 2);
    Message ack;
    ack.kind = MsgKind::DataAck;
    ack.src = 2;
    ack.dst = 4;
    ack.origin = 5;
    ack.seq = 2;
    ack.via = 4;
    ack.route = {5};
    Transition tr = handle_data_ack(relay, ack, 0, kCfg);
    const Message& next = only_msg(tr, MsgKind::DataAck);
    CHECK(next.src == 4);
    CHECK(next.dst == 5);
    CHECK(next.route.empty());

    // Final hop, no race on this seq: consumed silently.
    NodeState origin = connected_node(5, 4, 3);
    Message last = next;
    CHECK(handle_data_ack(origin, last, 0, kCfg).out.empty());
}

TEST_CASE("a shorter neighbor starts a two-copy race, with guards") {
    NodeState s = connected_node(5, 4, 4);
    Transition tr = consider_shorter_parent(s, 9, Hops::finite(2), 1'000'000, kCfg);
    REQUIRE(s.race.has_value());
    CHECK(s.race->neighbor == 9);
    CHECK(s.race->seq == 1);
    CHECK(has_event(tr, "gen", "origin=5 seq=1"));
    CHECK(has_event(tr, "race", "start neighbor=9 seq=1"));
    REQUIRE(count_kind(tr, MsgKind::Data) == 2);
    CHECK(tr.out[0].dst == 9);   // copy through the candidate
    CHECK(tr.out[0].via == 9);
    CHECK(tr.out[1].dst == 4);   // copy through the current parent
    CHECK(tr.out[1].via == 4);
    CHECK(has_timer(tr, TimerKind::RaceTimeout));

    // One race at a time; no second race while this one runs.
    CHECK(consider_shorter_parent(s, 8, Hops::finite(1), 0, kCfg).out.empty());

    NodeState n = connected_node(5, 4, 4);
    CHECK(consider_shorter_parent(n, 4, Hops::finite(1), 0, kCfg).out.empty());  // own parent
    n.children = {7};
    CHECK(consider_shorter_parent(n, 7, Hops::finite(1), 0, kCfg).out.empty());  // own child
    CHECK(consider_shorter_parent(n, 9, Hops::finite(3), 0, kCfg).out.empty());  // not shorter
    CHECK(consider_shorter_parent(n, 9, Hops::infinity(), 0, kCfg).out.empty());
    n.pending = true;
    CHECK(consider_shorter_parent(n, 9, Hops::finite(1), 0, kCfg).out.empty());  // muted
    NodeState cut = orphan_node(6);
    CHECK(consider_shorter_parent(cut, 9, Hops::finite(1), 0, kCfg).out.empty());
}

TEST_CASE("race outcomes: switch on the neighbor's ack, keep otherwise") {
    Message ack;
    ack.kind = MsgKind::DataAck;
    ack.origin = 5;
    ack.seq = 1;

    NodeState s = connected_node(5, 4, 4);
    consider_shorter_parent(s, 9, Hops::finite(2), 0, kCfg);
    ack.via = 9;
    ack.dst = 5;
    Transition tr = handle_data_ack(s, ack, 0, kCfg);
    CHECK(s.parent == 9);
    CHECK(s.hops == Hops::finite(3));
    CHECK_FALSE(s.race.has_value());
    CHECK(has_event(tr, "race", "switch parent=9"));
    CHECK(s.active_timers.count(TimerKind::RaceTimeout) == 0);

    NodeState keep = connected_node(5, 4, 4);
    consider_shorter_parent(keep, 9, Hops::finite(2), 0, kCfg);
    ack.via = 4;  // the parent's copy came back first
    tr = handle_data_ack(keep, ack, 0, kCfg);
    CHECK(keep.parent == 4);
    CHECK_FALSE(keep.race.has_value());
    CHECK(has_event(tr, "race", "keep parent"));

    // The neighbor turned into our child while the race ran: switching now
    // would close a two-node loop.
    NodeState guarded = connected_node(5, 4, 4);
    consider_shorter_parent(guarded, 9, Hops::finite(2), 0, kCfg);
    guarded.children.insert(9);
    ack.via = 9;
    tr = handle_data_ack(guarded, ack, 0, kCfg);
    CHECK(guarded.parent == 4);
    CHECK(has_event(tr, "race", "keep (neighbor became child)"));

    // Our own path improved in the meantime: the offer is no longer shorter.
    NodeState improved = connected_node(5, 4, 4);
    consider_shorter_parent(improved, 9, Hops::finite(2), 0, kCfg);
    improved.hops = Hops::finite(2);
    tr = handle_data_ack(improved, ack, 0, kCfg);
    CHECK(improved.parent == 4);
    CHECK(has_event(tr, "race", "keep (no longer shorter)"));

    // An unrelated ack does not settle the race.
    NodeState waiting = connected_node(5, 4, 4);
    consider_shorter_parent(waiting, 9, Hops::finite(2), 0, kCfg);
    Message other = ack;
    other.seq = 77;
    CHECK(handle_data_ack(waiting, other, 0, kCfg).events.empty());
    CHECK(waiting.race.has_value());

    Transition timeout = handle_race_timeout(waiting, 0, kCfg);
    CHECK_FALSE(waiting.race.has_value());
    CHECK(has_event(timeout, "race", "abandon (no ack)"));
    CHECK(handle_race_timeout(waiting, 0, kCfg).events.empty());
}

TEST_CASE("joining: probe, gather answers, connect at the shortest offer") {
    NodeState j;
    j.id = 9;
    j.joining = true;
    j.beacon_seen = true;
    Transition tr = node_join(j, 0, kCfg);
    CHECK(only_msg(tr, MsgKind::JoinProbe).dst == kBroadcast);
    CHECK(has_timer(tr, TimerKind::JoinRetry));

    tr = handle_join_info(j, 2, Hops::finite(2), 100, kCfg);
    CHECK(timer_deadline(tr, TimerKind::JoinGather) == 100 + kCfg.timeout_ppt);
    handle_join_info(j, 1, Hops::finite(1), 200, kCfg);
    handle_join_info(j, 2, Hops::finite(1), 300, kCfg);  // upsert, ties go to node 1
    REQUIRE(j.join_candidates.size() == 2);

    tr = finish_join_gather(j, 600'000, kCfg);
    CHECK_FALSE(j.joining);
    CHECK(j.parent == 1);
    CHECK(j.hops == Hops::finite(2));
    CHECK(j.active_timers.count(TimerKind::JoinRetry) == 0);
    const Message& announce = only_msg(tr, MsgKind::JoinInfo);
    CHECK(announce.dst == kBroadcast);
    CHECK(announce.hops == Hops::finite(2));
}

TEST_CASE("joining: unusable answers keep the probe cycle alive") {
    NodeState j;
    j.id = 9;
    j.joining = true;
    ProtocolConfig cfg = kCfg;
    cfg.max_hops = 3;
    handle_join_info(j, 2, Hops::finite(2), 0, cfg);  // 2+1 hits the ceiling
    Transition tr = finish_join_gather(j, 500'000, cfg);
    CHECK(j.joining);
    CHECK(has_note_containing(tr, "no usable join answer yet"));
    CHECK(j.join_candidates.empty());  // next gather starts fresh
}

TEST_CASE("join probes are answered only with a real path") {
    NodeState s = connected_node(2, 1, 1);
    Transition tr = handle_join_probe(s, 9, 0, kCfg);
    CHECK(only_msg(tr, MsgKind::JoinInfo).hops == Hops::finite(1));

    NodeState cut = orphan_node(3);
    CHECK(handle_join_probe(cut, 9, 0, kCfg).out.empty());
}

TEST_CASE("a join announcement can start a race at settled neighbors") {
    NodeState s = connected_node(5, 4, 4);
    Transition tr = handle_join_info(s, 9, Hops::finite(1), 0, kCfg);
    CHECK(s.race.has_value());
    CHECK(has_event(tr, "race", "start neighbor=9 seq=1"));
}

TEST_CASE("dead nodes never act") {
    NodeState s = connected_node(3, 2, 2);
    s.alive = false;
    CHECK(init_from_beacon(s, 1, Hops::finite(0), 0, kCfg).out.empty());
    CHECK(probe_parent(s, 0, kCfg).arm.empty());
    CHECK(handle_forward(s, 5, 0, kCfg).out.empty());
    CHECK(handle_request(s, 5, 0, kCfg).out.empty());
    CHECK(generate_data(s, 0, kCfg).events.empty());
    CHECK(handle_ppt_timeout(s, 0, kCfg).out.empty());
}

TEST_CASE("hop metric ranks by hops; location metric penalises the failed sector") {
    ProtocolConfig cfg = kCfg;
    NodeState s = orphan_node(4);
    s.position = Vec2{0, 0};
    s.recent_failed_neighbors = {7};
    s.neighbor_positions[7] = Vec2{10, 0};    // failure due east
    s.neighbor_positions[8] = Vec2{12, 1};    // east too: inside the 60-degree cone
    s.neighbor_positions[9] = Vec2{-10, 0};   // opposite direction

    ParentCandidate east{8, Hops::finite(2), 1, Vec2{12, 1}};
    ParentCandidate west{9, Hops::finite(2), 1, Vec2{-10, 0}};

    CHECK(metric_score(east, s, cfg) == 2.0);  // hop metric ignores geometry
    cfg.metric = ProtocolConfig::Metric::Location;
    CHECK(metric_score(east, s, cfg) == 2.0 + cfg.location_penalty);
    CHECK(metric_score(west, s, cfg) == 2.0);

    // Selection prefers the sideways candidate despite equal hop counts.
    s.reply_candidates = {east, west};
    select_new_parent(s, 0, cfg);
    CHECK(s.parent == 9);

    // Without geometry the location metric degrades to plain hops.
    NodeState blind = orphan_node(5);
    blind.recent_failed_neighbors = {7};
    ParentCandidate no_pos{8, Hops::finite(2), 1, {}};
    CHECK(metric_score(no_pos, blind, cfg) == 2.0);
    blind.reply_candidates = {no_pos};
    Transition tr = select_new_parent(blind, 0, cfg);
    CHECK(has_note_containing(tr, "location metric without positions"));
    CHECK(blind.parent == 8);
}
