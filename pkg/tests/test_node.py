"""Per-node handler semantics: receive queue, the four message handlers,
discovery, buffering and breakage reporting."""

import pytest
from hypothesis import given, settings, strategies as st

from aodvsim import kernel
from aodvsim.config import Config
from aodvsim.node import Node

from oracles import INVALID, VALID, nsqn, random_message

CFG = Config().key()


def mknode(ip, sn=1, rt=(), rreqs=(), store=(), queue=(), nrid=1):
    return (ip, sn, rt, rreqs, store, queue, nrid)


def entry(dip, dsn, flag, hops, nhip, pre=()):
    return (dip, dsn, flag, hops, nhip, tuple(sorted(pre)))


def step1(node, msg, cfg=CFG):
    """Receive one message and handle it."""
    node = kernel.on_receive(node, msg)
    return kernel.step(node, cfg)


# ---------------------------------------------------------------------------
# queue mechanics


def test_receive_appends_fifo_and_step_pops_head():
    m1 = kernel.pkt("p1", "a", "x", "x")
    m2 = kernel.pkt("p2", "a", "x", "x")
    node = mknode("a")
    node = kernel.on_receive(node, m1)
    node = kernel.on_receive(node, m2)
    assert node[kernel.QUEUE] == (m1, m2)
    node, out = kernel.step(node, CFG)
    assert node[kernel.QUEUE] == (m2,)
    assert out == (kernel.deliver("p1"),)


def test_step_on_empty_queue_is_disabled():
    with pytest.raises(ValueError, match="empty queue"):
        kernel.step(mknode("a"), CFG)


def test_control_messages_refresh_the_sender_entry_first():
    # a forwarded request: sender c, originator o — both get entries
    msg = kernel.rreq(1, 1, "d", 0, "o", 2, "c")
    node, _ = step1(mknode("a"), msg)
    assert kernel.find_route(node[kernel.RT], "c") == entry("c", 0, VALID, 1, "c")
    assert kernel.find_route(node[kernel.RT], "o") == entry("o", 2, VALID, 2, "c")


def test_data_packets_do_not_touch_the_sender_entry():
    node, _ = step1(mknode("a"), kernel.pkt("p1", "a", "o", "c"))
    assert node[kernel.RT] == ()


# ---------------------------------------------------------------------------
# route requests


def test_duplicate_request_is_dropped_before_any_learning():
    msg = kernel.rreq(0, 7, "d", 0, "o", 2, "o")
    node = mknode("a", rreqs=(("o", 7),))
    node, out = step1(node, msg)
    assert out == ()
    # only the sender refresh happened; the originator was not learned
    assert kernel.known_dests(node[kernel.RT]) == ("o",)
    assert kernel.seqno(node[kernel.RT], "o") == 0


def test_request_reaching_its_destination_is_answered():
    msg = kernel.rreq(1, 3, "d", 4, "o", 2, "b")
    node, out = step1(mknode("d", sn=2), msg)
    # own number catches up with the requested one
    assert node[kernel.SN] == 4
    assert node[kernel.RREQS] == (("o", 3),)
    # reply goes back along the reverse route, guarded against link failure
    assert out == (kernel.ucast("b", kernel.rrep(0, "d", 4, "o", "d"),
                                kernel.FAIL_RERR),)


def test_destination_answer_keeps_larger_own_number():
    msg = kernel.rreq(0, 1, "d", 2, "o", 1, "o")
    node, out = step1(mknode("d", sn=9), msg)
    assert node[kernel.SN] == 9
    assert out[0][2] == kernel.rrep(0, "d", 9, "o", "d")


def test_destination_can_push_the_answered_request_onward():
    cfg = Config(variant_fwd_rreq_at_dest=True).key()
    msg = kernel.rreq(1, 3, "d", 0, "o", 2, "b")
    node, out = step1(mknode("d"), msg, cfg)
    reply, = [e for e in out if e[0] == "ucast"]
    # the onward copy rides as a follow-up of the reply unicast, marked
    # answered so nobody else replies to it
    assert reply[4] == (kernel.bcast(kernel.rreq(2, 3, "d", 0, "o", 2, "d",
                                                 True)),)


def test_intermediate_with_fresh_valid_route_answers():
    rt = (entry("d", 5, VALID, 2, "c"),)
    msg = kernel.rreq(0, 1, "d", 4, "o", 3, "o")
    node, out = step1(mknode("a", rt=rt), msg)
    assert out == (kernel.ucast("o", kernel.rrep(2, "d", 5, "o", "a"),
                                kernel.FAIL_RERR),)
    after = node[kernel.RT]
    # the answered neighbour becomes a precursor of the forward route,
    # and the forward next hop a precursor of the reverse route
    assert kernel.find_route(after, "d")[5] == ("o",)
    assert kernel.find_route(after, "o")[5] == ("c",)


@pytest.mark.parametrize("rt,why", [
    ((entry("d", 3, VALID, 2, "c"),), "stored number too small"),
    ((entry("d", 0, VALID, 2, "c"),), "stored number unknown"),
    ((entry("d", 5, INVALID, 2, "c"),), "entry invalid"),
    ((), "no entry"),
])
def test_intermediate_without_answerable_route_floods(rt, why):
    msg = kernel.rreq(0, 1, "d", 4, "o", 3, "o")
    node, out = step1(mknode("a", rt=rt), msg)
    assert out[0][0] == "bcast", why
    fwd = out[0][1]
    assert fwd[:3] == ("rreq", 1, 1)
    assert fwd[7] == "a"


def test_already_answered_request_is_flooded_not_answered():
    rt = (entry("d", 5, VALID, 2, "c"),)
    msg = kernel.rreq(0, 1, "d", 4, "o", 3, "o", handled=True)
    node, out = step1(mknode("a", rt=rt), msg)
    assert out == (kernel.bcast(kernel.rreq(1, 1, "d", 5, "o", 3, "a", True)),)


def test_forwarded_request_advertises_the_freshest_known_number():
    # the stored number counts even on an invalid entry
    rt = (entry("d", 5, INVALID, 2, "c"),)
    msg = kernel.rreq(0, 1, "d", 3, "o", 3, "o")
    node, out = step1(mknode("a", rt=rt), msg)
    assert out[0][1][4] == 5


# ---------------------------------------------------------------------------
# route replies


def test_reply_at_its_origin_completes_discovery_silently():
    msg = kernel.rrep(1, "d", 2, "o", "b")
    node, out = step1(mknode("o"), msg)
    assert out == ()
    assert kernel.find_route(node[kernel.RT], "d") == entry("d", 2, VALID, 2, "b")


def test_reply_is_forwarded_with_the_nodes_own_entry():
    rt = (entry("o", 1, VALID, 1, "x"),)
    msg = kernel.rrep(1, "d", 2, "o", "b")
    node, out = step1(mknode("a", rt=rt), msg)
    assert out == (kernel.ucast("x", kernel.rrep(2, "d", 2, "o", "a"),
                                kernel.FAIL_RERR),)
    # whoever the reply was passed to is a precursor of the new route
    assert kernel.find_route(node[kernel.RT], "d")[5] == ("x",)


def test_stale_reply_is_swallowed():
    rt = (entry("d", 9, VALID, 1, "c"), entry("o", 1, VALID, 1, "x"))
    msg = kernel.rrep(3, "d", 2, "o", "b")
    node, out = step1(mknode("a", rt=rt), msg)
    assert out == ()
    assert kernel.find_route(node[kernel.RT], "d")[:5] == ("d", 9, VALID, 1, "c")


def test_stale_reply_is_forwarded_under_the_forward_all_variant():
    cfg = Config(variant_fwd_all_rrep=True).key()
    rt = (entry("d", 9, VALID, 4, "c"), entry("o", 1, VALID, 1, "x"))
    msg = kernel.rrep(3, "d", 2, "o", "b")
    node, out = step1(mknode("a", rt=rt), msg, cfg)
    # forwarded with the node's own (fresher) entry, not the stale one
    assert out == (kernel.ucast("x", kernel.rrep(4, "d", 9, "o", "a"),
                                kernel.FAIL_RERR),)


def test_reply_without_reverse_route_is_dropped():
    msg = kernel.rrep(1, "d", 2, "o", "b")
    node, out = step1(mknode("a"), msg)
    assert out == (kernel.drop("reply with no reverse route"),)


class TestSelfReplyPolicies:
    """A reply naming the handling node as destination (possible after
    its own entry for itself went stale elsewhere)."""

    msg = kernel.rrep(1, "a", 5, "o", "b")

    def test_allowed_by_default(self):
        rt = (entry("o", 1, VALID, 1, "x"),)
        node, out = step1(mknode("a", rt=rt), self.msg)
        assert kernel.find_route(node[kernel.RT], "a")[:2] == ("a", 5)
        assert out[0][0] == "ucast"

    def test_discard_policy_drops_it(self):
        cfg = Config(self_entry="discard_rrep").key()
        node, out = step1(mknode("a"), self.msg, cfg)
        assert out == (kernel.drop("self-route reply discarded"),)
        assert kernel.known_dests(node[kernel.RT]) == ("b",)  # sender only

    def test_forward_no_update_passes_it_on_untouched(self):
        cfg = Config(self_entry="forward_no_update").key()
        rt = (entry("o", 1, VALID, 1, "x"),)
        node, out = step1(mknode("a", rt=rt), self.msg, cfg)
        assert "a" not in kernel.known_dests(node[kernel.RT])
        assert out == (kernel.ucast("x", kernel.rrep(2, "a", 5, "o", "a"),
                                    kernel.FAIL_RERR),)


# ---------------------------------------------------------------------------
# route errors


def test_error_invalidates_and_relays_to_precursors():
    rt = (entry("d", 2, VALID, 2, "b", ("p", "q")),
          entry("e", 1, VALID, 3, "b", ()),
          entry("f", 1, VALID, 1, "c", ("r",)))
    msg = kernel.rerr((("d", 4), ("e", 3), ("f", 9)), "b")
    node, out = step1(mknode("a", rt=rt), msg)
    after = node[kernel.RT]
    # d and e route via the reporting neighbour; f does not
    assert kernel.find_route(after, "d")[:3] == ("d", 4, INVALID)
    assert kernel.find_route(after, "e")[:3] == ("e", 3, INVALID)
    assert kernel.find_route(after, "f")[2] == VALID
    # only d has precursors to notify; the relayed number is the stored one
    assert out == (kernel.gcast(("p", "q"), kernel.rerr((("d", 4),), "a")),)


def test_error_ignores_routes_via_other_neighbours():
    rt = (entry("d", 2, VALID, 2, "c", ("p",)),)
    node, out = step1(mknode("a", rt=rt), kernel.rerr((("d", 4),), "b"))
    assert out == ()
    assert kernel.find_route(node[kernel.RT], "d")[2] == VALID


def test_error_with_stale_claim_is_a_no_op_under_default_resolution():
    # the default resolution only believes strictly fresher claims
    rt = (entry("d", 5, VALID, 2, "b", ("p",)),)
    node, out = step1(mknode("a", rt=rt), kernel.rerr((("d", 3),), "b"))
    assert out == ()
    assert kernel.find_route(node[kernel.RT], "d")[:3] == ("d", 5, VALID)


def test_error_relays_the_resolved_number_not_the_claimed_one():
    cfg = Config(invalidation="d").key()
    rt = (entry("d", 5, VALID, 2, "b", ("p",)),)
    node, out = step1(mknode("a", rt=rt), kernel.rerr((("d", 6),), "b"), cfg)
    # resolution d stores max(m, n + 1) = 6; the relay carries that
    assert kernel.find_route(node[kernel.RT], "d")[:3] == ("d", 6, INVALID)
    assert out == (kernel.gcast(("p",), kernel.rerr((("d", 6),), "a")),)


def test_error_without_precursors_is_not_relayed():
    rt = (entry("d", 2, VALID, 2, "b"),)
    node, out = step1(mknode("a", rt=rt), kernel.rerr((("d", 4),), "b"))
    assert out == ()
    assert kernel.find_route(node[kernel.RT], "d")[2] == INVALID


# ---------------------------------------------------------------------------
# data packets


def test_packet_for_self_is_delivered():
    node, out = step1(mknode("a"), kernel.pkt("p1", "a", "o", "b"))
    assert out == (kernel.deliver("p1"),)


def test_packet_in_transit_follows_the_valid_route():
    rt = (entry("d", 2, VALID, 2, "c"),)
    node, out = step1(mknode("a", rt=rt), kernel.pkt("p1", "d", "o", "b"))
    assert out == (kernel.ucast("c", kernel.pkt("p1", "d", "o", "a"),
                                kernel.FAIL_RERR),)


def test_own_packet_rides_with_the_rebuffering_fail_mode():
    rt = (entry("d", 2, VALID, 2, "c"),)
    node, out = kernel.handle_pkt(mknode("a", rt=rt),
                                  kernel.pkt("p1", "d", "a", "a"), CFG)
    assert out[0][3] == kernel.FAIL_RERR_ORIGIN


def test_own_packet_without_route_starts_a_discovery():
    node, out = step1(mknode("a", sn=3, nrid=5),
                      kernel.pkt("p1", "d", "a", "a"))
    assert node[kernel.SN] == 4  # own number bumps for the new discovery
    assert node[kernel.NEXT_RREQID] == 6
    assert ("a", 5) in node[kernel.RREQS]  # never re-answers its own flood
    assert node[kernel.STORE] == (("d", ("p1",)),)
    assert out == (kernel.bcast(kernel.rreq(0, 5, "d", 0, "a", 4, "a", False)),)


def test_discovery_asks_for_the_last_known_number():
    rt = (entry("d", 7, INVALID, 2, "c"),)
    node, out = step1(mknode("a", rt=rt), kernel.pkt("p1", "d", "a", "a"))
    assert out[0][1][4] == 7


def test_transit_packet_without_route_reports_upstream():
    rt = (entry("d", 2, INVALID, 2, "c", ("p",)),)
    node, out = step1(mknode("a", rt=rt), kernel.pkt("p1", "d", "o", "b"))
    # the number is bumped past the dead route before reporting
    assert kernel.find_route(node[kernel.RT], "d")[:3] == ("d", 3, INVALID)
    assert out == (kernel.drop("no route for transit data p1"),
                   kernel.gcast(("p",), kernel.rerr((("d", 3),), "a")))


def test_transit_packet_with_no_entry_at_all_is_just_dropped():
    node, out = step1(mknode("a"), kernel.pkt("p1", "d", "o", "b"))
    assert out == (kernel.drop("no route for transit data p1"),)
    assert node[kernel.RT] == ()


# ---------------------------------------------------------------------------
# link breakage


def test_failed_unicast_invalidates_everything_via_the_dead_hop():
    rt = (entry("d", 2, VALID, 2, "b", ("p",)),
          entry("b", 0, VALID, 1, "b", ()),
          entry("e", 1, VALID, 2, "c", ()))
    node, out = kernel.on_unicast_fail(mknode("a", rt=rt), "b",
                                       kernel.rrep(0, "d", 2, "o", "a"),
                                       kernel.FAIL_RERR, CFG)
    after = node[kernel.RT]
    assert kernel.find_route(after, "d")[:3] == ("d", 3, INVALID)
    assert kernel.find_route(after, "b")[:3] == ("b", 0, INVALID)  # 0 stays
    assert kernel.find_route(after, "e")[2] == VALID
    assert out == (kernel.gcast(("p",), kernel.rerr((("d", 3),), "a")),)


def test_failed_unicast_with_silent_mode_changes_nothing():
    rt = (entry("d", 2, VALID, 2, "b"),)
    node, out = kernel.on_unicast_fail(mknode("a", rt=rt), "b",
                                       kernel.rrep(0, "d", 2, "o", "a"),
                                       kernel.FAIL_NONE, CFG)
    assert node == mknode("a", rt=rt)
    assert out == ()


def test_failed_own_packet_is_rebuffered_at_the_front():
    rt = (entry("d", 2, VALID, 1, "d"),)
    store = (("d", ("p2",)),)
    node, out = kernel.on_unicast_fail(mknode("a", rt=rt, store=store), "d",
                                       kernel.pkt("p1", "d", "a", "a"),
                                       kernel.FAIL_RERR_ORIGIN, CFG)
    assert node[kernel.STORE] == (("d", ("p1", "p2")),)


def test_break_with_no_affected_routes_is_silent():
    rt = (entry("d", 2, INVALID, 2, "b"),)
    node, out = kernel.break_link_routes(mknode("a", rt=rt), "b")
    assert node == mknode("a", rt=rt)
    assert out == ()


# ---------------------------------------------------------------------------
# buffering and send_pending


def test_send_pending_drains_fifo_smallest_destination_first():
    rt = (entry("d", 1, VALID, 1, "d"), entry("c", 1, VALID, 1, "c"))
    store = (("c", ("x1", "x2")), ("d", ("y1",)))
    node = mknode("a", rt=rt, store=store)
    node, out = kernel.send_pending(node, CFG)
    assert out == (kernel.ucast("c", kernel.pkt("x1", "c", "a", "a"),
                                kernel.FAIL_RERR_ORIGIN),)
    node, out = kernel.send_pending(node, CFG)
    assert out[0][2][1] == "x2"
    node, out = kernel.send_pending(node, CFG)
    assert out[0][2][1] == "y1"
    assert kernel.sendable_dips(node) == ()


def test_send_pending_skips_destinations_without_valid_routes():
    rt = (entry("c", 1, INVALID, 1, "c"), entry("d", 1, VALID, 1, "d"))
    store = (("c", ("x1",)), ("d", ("y1",)))
    node, out = kernel.send_pending(mknode("a", rt=rt, store=store), CFG)
    assert out[0][2][1] == "y1"


def test_send_pending_with_nothing_sendable_is_disabled():
    with pytest.raises(ValueError, match="nothing sendable"):
        kernel.send_pending(mknode("a"), CFG)


# ---------------------------------------------------------------------------
# the object facade


def test_node_facade_runs_a_discovery_exchange():
    a = Node("a")
    out = a.new_route_request("d")
    assert a.sn == 2
    assert a.seen_requests == {("a", 1)}
    (request,) = [e[1] for e in out if e[0] == "bcast"]

    d = Node("d")
    d.receive(request)
    (reply_ucast,) = d.step()
    assert d.table.seqno("a") == 2

    a.receive(reply_ucast[2])
    assert a.step() == ()
    assert a.table.entry("d").valid
    assert a.table.next_hop("d") == "d"


def test_node_facade_buffers_and_sends():
    a = Node("a")
    a.receive(kernel.pkt("p1", "d", "a", "a"))
    a.step()
    assert a.buffered == {"d": ["p1"]}
    assert a.sendable_dips() == ()
    d = Node("d")
    d.receive(kernel.rreq(0, 1, "d", 0, "a", 2, "a"))
    (reply,) = d.step()
    a.receive(reply[2])
    a.step()
    assert a.sendable_dips() == ("d",)
    (send,) = a.send_pending()
    assert send[2] == kernel.pkt("p1", "d", "a", "a")
    assert a.buffered == {}


def test_node_facade_round_trips_its_state():
    a = Node("a")
    a.receive(kernel.pkt("p", "b", "x", "x"))
    assert Node.from_key(a.key()).key() == a.key()
    assert repr(a) == "<Node a sn=1 routes=0>"


# ---------------------------------------------------------------------------
# whole-handler properties


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 60))
@settings(max_examples=60, deadline=None)
def test_random_message_streams_keep_node_state_well_formed(seed, count):
    import random

    rng = random.Random(seed)
    node = mknode("A")
    for _ in range(count):
        node = kernel.on_receive(node, random_message(rng, "A"))
        sn0, rreqs0 = node[kernel.SN], set(node[kernel.RREQS])
        node, _ = kernel.step(node, CFG)
        assert node[kernel.SN] >= sn0
        assert rreqs0 <= set(node[kernel.RREQS])
        dips = [e[0] for e in node[kernel.RT]]
        assert dips == sorted(dips) and len(dips) == len(set(dips))
        assert all(e[1] >= 0 and e[3] >= 0 and e[2] in (0, 1) for e in node[kernel.RT])
