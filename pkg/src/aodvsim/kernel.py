"""Pure-Python protocol kernel: the per-node AODV state machine.

This module is the single semantic source of truth. Everything above it
(the friendly object layer, the network simulator, the explorer) delegates
here, and the optional compiled extension ``aodvsim._speedups`` mirrors it
function-for-function.

All values are immutable, canonically ordered tuples, so node states can be
hashed, deduplicated and shared across search workers without copying.

Encodings
---------
route entry   ``(dip, dsn, flag, hops, nhip, pre)`` where ``flag`` is
              ``VALID``/``INVALID`` (1/0) and ``pre`` is a sorted tuple of
              precursor node ids.
routing table sorted tuple of entries, at most one per destination.
messages      ``("rreq", hops, rreqid, dip, dsn, oip, osn, sip, handled)``
              ``("rrep", hops, dip, dsn, oip, sip)``
              ``("rerr", dests, sip)`` with ``dests`` a sorted tuple of
              ``(rip, rsn)`` pairs
              ``("pkt", data, dip, oip, sip)``
node state    ``(ip, sn, rt, rreqs, store, queue, next_rreqid)`` where
              ``rreqs`` is a sorted tuple of seen ``(oip, rreqid)`` pairs,
              ``store`` a sorted tuple of ``(dip, payloads)`` FIFO buffers,
              and ``queue`` the FIFO of received, not yet handled messages.
config        ``(invalidation, self_entry, unknown_sqn, fwd_rreq_at_dest,
              fwd_all_rrep)`` — see :mod:`aodvsim.config`.
emissions     ``("bcast", msg)``
              ``("ucast", dest, msg, fail_mode, then)`` — ``then`` is a
              tuple of follow-up emissions that apply only if the unicast
              succeeds; ``fail_mode`` selects the failure continuation
              ``("gcast", dests, msg)``
              ``("deliver", data)``
              ``("drop", reason)`` — bookkeeping only, for traces

Sequence numbers are plain non-negative ints; 0 means "unknown". A node's
own sequence number starts at 1 and never decreases. Route entries are
never deleted, only flagged invalid.
"""

from __future__ import annotations

INVALID = 0
VALID = 1

# unknown-sequence-number update modes (see Config.unknown_sqn)
KEEP_SQN = "keep_sqn"
NO_UPDATE = "no_update"
OVERWRITE_ZERO = "overwrite_zero"

# self-entry policies for replies naming the receiving node as destination
SELF_ALLOW = "allow"
SELF_DISCARD = "discard_rrep"
SELF_FWD_NO_UPDATE = "forward_no_update"

# message tags
RREQ = "rreq"
RREP = "rrep"
RERR = "rerr"
PKT = "pkt"

# unicast failure continuations
FAIL_NONE = "none"          # failure is silent (route-error notifications)
FAIL_RERR = "rerr"          # invalidate routes via the dead link, notify
FAIL_RERR_ORIGIN = "rerr_origin"  # ditto, and re-buffer the data packet

# config tuple field order
CFG_INVALIDATION = 0
CFG_SELF_ENTRY = 1
CFG_UNKNOWN_SQN = 2
CFG_FWD_RREQ_AT_DEST = 3
CFG_FWD_ALL_RREP = 4

DEFAULT_CONFIG = ("f", SELF_ALLOW, KEEP_SQN, False, False)


# ---------------------------------------------------------------------------
# routing-table operations


def find_route(rt, dip):
    """Return the entry for ``dip``, or None."""
    for e in rt:
        if e[0] == dip:
            return e
    return None


def seqno(rt, dip):
    """Stored sequence number for ``dip``; 0 for unknown destinations."""
    e = find_route(rt, dip)
    return e[1] if e is not None else 0


def route_flag(rt, dip):
    e = find_route(rt, dip)
    if e is None:
        raise KeyError(dip)
    return e[2]


def hop_count(rt, dip):
    e = find_route(rt, dip)
    if e is None:
        raise KeyError(dip)
    return e[3]


def next_hop(rt, dip):
    e = find_route(rt, dip)
    if e is None:
        raise KeyError(dip)
    return e[4]


def known_dests(rt):
    """All destinations with an entry, valid or not."""
    return tuple(e[0] for e in rt)


def valid_dests(rt):
    """Destinations with a valid entry."""
    return tuple(e[0] for e in rt if e[2] == VALID)


def effective_seqno(rt, dip):
    """Sequence number discounted for invalidation.

    An invalid entry counts one less than its stored number (unless that
    number is 0, the unknown marker, which never moves). This is the
    quantity that only ever grows per destination at a node, and the one
    the ordering monitors compare along next-hop chains.
    """
    e = find_route(rt, dip)
    if e is None:
        raise KeyError(dip)
    if e[2] == VALID or e[1] == 0:
        return e[1]
    return e[1] - 1


def _put(rt, entry):
    """Insert or replace the entry for entry[0], keeping the table sorted."""
    dip = entry[0]
    out = [e for e in rt if e[0] != dip]
    out.append(entry)
    out.sort()
    return tuple(out)


def _merge_pre(a, b):
    return tuple(sorted(set(a) | set(b)))


def update_route(rt, dip, dsn, hops, nhip, pre, mode):
    """Merge a fresh, valid candidate route into the table.

    The candidate is always valid — callers only learn routes from live
    messages. Exactly one of six ordered rules applies:

    1. unknown destination: insert the candidate;
    2. strictly larger sequence number: replace (precursors merged);
    3. equal sequence number, strictly fewer hops: replace;
    4. equal sequence number, existing entry invalid: replace;
    5. candidate sequence number 0 (unknown): depends on ``mode`` —
       ``keep_sqn`` replaces but retains the stored sequence number,
       ``no_update`` only merges precursors, ``overwrite_zero`` replaces
       outright (stored number drops to 0);
    6. otherwise: merge precursors only.
    """
    old = find_route(rt, dip)
    if old is None:
        return _put(rt, (dip, dsn, VALID, hops, nhip, tuple(sorted(set(pre)))))
    _, odsn, oflag, ohops, onhip, opre = old
    merged = _merge_pre(opre, pre)
    if odsn < dsn:
        new = (dip, dsn, VALID, hops, nhip, merged)
    elif odsn == dsn and hops < ohops:
        new = (dip, dsn, VALID, hops, nhip, merged)
    elif odsn == dsn and oflag == INVALID:
        new = (dip, dsn, VALID, hops, nhip, merged)
    elif dsn == 0:
        if mode == KEEP_SQN:
            new = (dip, odsn, VALID, hops, nhip, merged)
        elif mode == NO_UPDATE:
            new = (dip, odsn, oflag, ohops, onhip, merged)
        elif mode == OVERWRITE_ZERO:
            new = (dip, 0, VALID, hops, nhip, merged)
        else:
            raise ValueError(f"unknown update mode: {mode!r}")
    else:
        new = (dip, odsn, oflag, ohops, onhip, merged)
    return _put(rt, new)


def invalidate_routes(rt, dests, resolution):
    """Apply a received route-error notice under an invalidation resolution.

    ``dests`` maps destinations to the sequence numbers claimed by the
    notice (m below); n is the stored number. Destinations without an
    entry are ignored. Only the flag and sequence number ever change.

    Resolutions: (a) always invalidate, store m; (b) invalidate if m >= n,
    store m; (c) always, store max(m, n); (d) always, store max(m, n + 1);
    (e) if m >= n, store max(m, n + 1); (f) only if m > n, store m.
    """
    for rip, m in dests:
        e = find_route(rt, rip)
        if e is None:
            continue
        _, n, flag, hops, nhip, pre = e
        if resolution == "a":
            new = (rip, m, INVALID, hops, nhip, pre)
        elif resolution == "b":
            new = (rip, m, INVALID, hops, nhip, pre) if m >= n else None
        elif resolution == "c":
            new = (rip, max(m, n), INVALID, hops, nhip, pre)
        elif resolution == "d":
            new = (rip, max(m, n + 1), INVALID, hops, nhip, pre)
        elif resolution == "e":
            new = (rip, max(m, n + 1), INVALID, hops, nhip, pre) if m >= n else None
        elif resolution == "f":
            new = (rip, m, INVALID, hops, nhip, pre) if m > n else None
        else:
            raise ValueError(f"unknown invalidation resolution: {resolution!r}")
        if new is not None:
            rt = _put(rt, new)
    return rt


def force_invalidate(rt, dests):
    """Unconditionally invalidate, storing the given sequence numbers.

    Used for self-detected breakage (a failed unicast), where the node just
    incremented the numbers itself: no received claim is being arbitrated,
    so no resolution applies. Destinations without an entry are ignored.
    """
    for rip, m in dests:
        e = find_route(rt, rip)
        if e is None:
            continue
        rt = _put(rt, (rip, m, INVALID, e[3], e[4], e[5]))
    return rt


def incremented_dests(rt, broken_nhip):
    """Destinations lost with a broken next hop, with bumped numbers.

    Collects every valid entry routed via ``broken_nhip`` and increments
    its sequence number (0, the unknown marker, stays 0).
    """
    out = []
    for dip, dsn, flag, hops, nhip, pre in rt:
        if flag == VALID and nhip == broken_nhip:
            out.append((dip, dsn + 1 if dsn > 0 else 0))
    return tuple(out)


def add_precursors(rt, dip, nodes):
    """Union node ids into the precursor set of an existing entry."""
    e = find_route(rt, dip)
    if e is None:
        raise KeyError(dip)
    return _put(rt, (e[0], e[1], e[2], e[3], e[4], _merge_pre(e[5], nodes)))


# ---------------------------------------------------------------------------
# message and emission constructors


def rreq(hops, rreqid, dip, dsn, oip, osn, sip, handled=False):
    return (RREQ, hops, rreqid, dip, dsn, oip, osn, sip, bool(handled))


def rrep(hops, dip, dsn, oip, sip):
    return (RREP, hops, dip, dsn, oip, sip)


def rerr(dests, sip):
    return (RERR, tuple(sorted(dests)), sip)


def pkt(data, dip, oip, sip):
    return (PKT, data, dip, oip, sip)


def msg_sip(msg):
    """Sender field of any message."""
    tag = msg[0]
    if tag == RREQ:
        return msg[7]
    if tag == RREP:
        return msg[5]
    if tag == RERR:
        return msg[2]
    return msg[4]


def bcast(msg):
    return ("bcast", msg)


def ucast(dest, msg, fail_mode, then=()):
    return ("ucast", dest, msg, fail_mode, then)


def gcast(dests, msg):
    return ("gcast", tuple(sorted(dests)), msg)


def deliver(data):
    return ("deliver", data)


def drop(reason):
    return ("drop", reason)


# ---------------------------------------------------------------------------
# node state

IP, SN, RT, RREQS, STORE, QUEUE, NEXT_RREQID = range(7)


def fresh_node(ip):
    """A node that knows nothing: empty table, sequence number 1."""
    return (ip, 1, (), (), (), (), 1)


def on_receive(node, msg):
    """Append a received message to the handling FIFO."""
    return node[:QUEUE] + (node[QUEUE] + (msg,),) + (node[NEXT_RREQID],)


def queued(node):
    return node[QUEUE]


def _store_push(store, dip, data, front=False):
    out = []
    seen = False
    for d, payloads in store:
        if d == dip:
            seen = True
            payloads = (data,) + payloads if front else payloads + (data,)
        out.append((d, payloads))
    if not seen:
        out.append((dip, (data,)))
        out.sort()
    return tuple(out)


def _store_pop(store, dip):
    out = []
    for d, payloads in store:
        if d == dip:
            payloads = payloads[1:]
            if not payloads:
                continue
        out.append((d, payloads))
    return tuple(out)


def sendable_dips(node):
    """Buffered destinations that currently have a valid route."""
    rt = node[RT]
    vd = valid_dests(rt)
    return tuple(dip for dip, payloads in node[STORE] if payloads and dip in vd)


# ---------------------------------------------------------------------------
# handlers

def step(node, cfg):
    """Handle the head of the message queue.

    Disabled (an error) on an empty queue. A routing control message first
    refreshes the 1-hop entry for its sender — the node just heard from
    that neighbour — before being dispatched; data packets do not.
    Returns the updated node and the emissions, in order.
    """
    queue = node[QUEUE]
    if not queue:
        raise ValueError("step on empty queue")
    msg = queue[0]
    node = node[:QUEUE] + (queue[1:], node[NEXT_RREQID])
    tag = msg[0]
    if tag != PKT:
        rt = update_route(
            node[RT], msg_sip(msg), 0, 1, msg_sip(msg), (), cfg[CFG_UNKNOWN_SQN]
        )
        node = node[:RT] + (rt,) + node[RT + 1:]
    if tag == RREQ:
        return handle_rreq(node, msg, cfg)
    if tag == RREP:
        return handle_rrep(node, msg, cfg)
    if tag == RERR:
        return handle_rerr(node, msg, cfg)
    return handle_pkt(node, msg, cfg)


def handle_rreq(node, msg, cfg):
    """Route request: learn the reverse route, then answer or flood."""
    _, hops, rreqid, dip, dsn, oip, osn, sip, handled = msg
    ip, sn, rt, rreqs, store, queue, nrid = node
    if (oip, rreqid) in rreqs:
        return node, ()
    rt = update_route(rt, oip, osn, hops + 1, sip, (), cfg[CFG_UNKNOWN_SQN])
    rreqs = tuple(sorted(rreqs + ((oip, rreqid),)))

    if dip == ip:
        # this node is the destination: answer with a fresh reply
        sn = max(sn, dsn)
        reply = rrep(0, dip, sn, oip, ip)
        then = ()
        if cfg[CFG_FWD_RREQ_AT_DEST]:
            # push the request onward, marked answered, so farther nodes
            # still learn a short route to the requester
            then = (bcast(rreq(hops + 1, rreqid, dip, dsn, oip, osn, ip, True)),)
        node = (ip, sn, rt, rreqs, store, queue, nrid)
        return node, (ucast(next_hop(rt, oip), reply, FAIL_RERR, then),)

    vd = valid_dests(rt)
    if dip in vd and seqno(rt, dip) >= dsn and seqno(rt, dip) != 0 and not handled:
        # answer from the local table on the destination's behalf
        rt = add_precursors(rt, dip, (sip,))
        rt = add_precursors(rt, oip, (next_hop(rt, dip),))
        reply = rrep(hop_count(rt, dip), dip, seqno(rt, dip), oip, ip)
        node = (ip, sn, rt, rreqs, store, queue, nrid)
        return node, (ucast(next_hop(rt, oip), reply, FAIL_RERR),)

    # keep flooding, advertising the freshest number known for dip
    fwd = rreq(hops + 1, rreqid, dip, max(dsn, seqno(rt, dip)), oip, osn, ip, handled)
    node = (ip, sn, rt, rreqs, store, queue, nrid)
    return node, (bcast(fwd),)


def handle_rrep(node, msg, cfg):
    """Route reply: learn the forward route, pass the reply back."""
    _, hops, dip, dsn, oip, sip = msg
    ip, sn, rt, rreqs, store, queue, nrid = node

    self_reply = dip == ip
    if self_reply and cfg[CFG_SELF_ENTRY] == SELF_DISCARD:
        return node, (drop("self-route reply discarded"),)
    skip_update = self_reply and cfg[CFG_SELF_ENTRY] == SELF_FWD_NO_UPDATE

    old = find_route(rt, dip)
    if not skip_update:
        rt = update_route(rt, dip, dsn, hops + 1, sip, (), cfg[CFG_UNKNOWN_SQN])
    node = (ip, sn, rt, rreqs, store, queue, nrid)

    if oip == ip:
        # discovery complete; buffered packets become sendable
        return node, ()
    if find_route(rt, oip) is None:
        # nowhere to send the reply onward: swallow it
        return node, (drop("reply with no reverse route"),)
    if skip_update:
        fwd = rrep(hops + 1, dip, dsn, oip, ip)
        return node, (ucast(next_hop(rt, oip), fwd, FAIL_RERR),)

    new = find_route(rt, dip)
    updated = old is None or old[:5] != new[:5]
    if updated or cfg[CFG_FWD_ALL_RREP]:
        # the forwarded reply reflects this node's own (fresher) entry
        rt = add_precursors(rt, dip, (next_hop(rt, oip),))
        fwd = rrep(hop_count(rt, dip), dip, seqno(rt, dip), oip, ip)
        node = (ip, sn, rt, rreqs, store, queue, nrid)
        return node, (ucast(next_hop(rt, oip), fwd, FAIL_RERR),)
    return node, ()


def handle_rerr(node, msg, cfg):
    """Route error: invalidate matching routes, relay to precursors."""
    _, dests, sip = msg
    ip, sn, rt, rreqs, store, queue, nrid = node
    affected = []
    for rip, rsn in dests:
        e = find_route(rt, rip)
        if e is not None and e[2] == VALID and e[4] == sip:
            affected.append((rip, rsn))
    rt = invalidate_routes(rt, tuple(affected), cfg[CFG_INVALIDATION])
    node = (ip, sn, rt, rreqs, store, queue, nrid)

    fwd = []
    precursors = set()
    for rip, rsn in affected:
        e = find_route(rt, rip)
        if e[2] == INVALID and e[5]:
            # relay the number now stored, to entries someone relies on
            fwd.append((rip, e[1]))
            precursors.update(e[5])
    if fwd:
        return node, (gcast(tuple(sorted(precursors)), rerr(tuple(fwd), ip)),)
    return node, ()


def handle_pkt(node, msg, cfg):
    """Data packet: deliver, forward, buffer-and-discover, or report broken."""
    _, data, dip, oip, sip = msg
    ip, sn, rt, rreqs, store, queue, nrid = node
    if dip == ip:
        return node, (deliver(data),)
    if dip in valid_dests(rt):
        fail = FAIL_RERR_ORIGIN if oip == ip else FAIL_RERR
        return node, (ucast(next_hop(rt, dip), pkt(data, dip, oip, ip), fail),)
    if oip == ip:
        store = _store_push(store, dip, data)
        node = (ip, sn, rt, rreqs, store, queue, nrid)
        return new_route_request(node, dip)
    # transit node with a broken route: report upstream, drop the packet
    n = seqno(rt, dip)
    dests = ((dip, n + 1 if n > 0 else 0),)
    rt = force_invalidate(rt, dests)
    node = (ip, sn, rt, rreqs, store, queue, nrid)
    out = [drop(f"no route for transit data {data}")]
    e = find_route(rt, dip)
    if e is not None and e[5]:
        out.append(gcast(e[5], rerr(dests, ip)))
    return node, tuple(out)


def new_route_request(node, dip):
    """Start a fresh discovery: bump own number, flood a new request."""
    ip, sn, rt, rreqs, store, queue, nrid = node
    sn += 1
    rreqs = tuple(sorted(rreqs + ((ip, nrid),)))
    out = bcast(rreq(0, nrid, dip, seqno(rt, dip), ip, sn, ip, False))
    return (ip, sn, rt, rreqs, store, queue, nrid + 1), (out,)


def break_link_routes(node, broken):
    """A unicast to ``broken`` failed: invalidate and notify precursors."""
    ip, sn, rt, rreqs, store, queue, nrid = node
    dests = incremented_dests(rt, broken)
    if not dests:
        return node, ()
    rt = force_invalidate(rt, dests)
    node = (ip, sn, rt, rreqs, store, queue, nrid)
    fwd = []
    precursors = set()
    for rip, m in dests:
        e = find_route(rt, rip)
        if e[5]:
            fwd.append((rip, m))
            precursors.update(e[5])
    if fwd:
        return node, (gcast(tuple(sorted(precursors)), rerr(tuple(fwd), ip)),)
    return node, ()


def on_unicast_fail(node, dest, msg, fail_mode, cfg):
    """Failure continuation for an undeliverable unicast."""
    if fail_mode == FAIL_NONE:
        return node, ()
    node, out = break_link_routes(node, dest)
    if fail_mode == FAIL_RERR_ORIGIN and msg[0] == PKT:
        # keep own data packet for a later discovery instead of losing it
        ip, sn, rt, rreqs, store, queue, nrid = node
        store = _store_push(store, msg[2], msg[1], front=True)
        node = (ip, sn, rt, rreqs, store, queue, nrid)
    return node, out


def send_pending(node, cfg):
    """Send one buffered packet along a now-valid route.

    Disabled (an error) when nothing is sendable. Buffers drain FIFO,
    smallest destination first.
    """
    ip, sn, rt, rreqs, store, queue, nrid = node
    for dip in sendable_dips(node):
        data = dict(store)[dip][0]
        store = _store_pop(store, dip)
        node = (ip, sn, rt, rreqs, store, queue, nrid)
        out = ucast(next_hop(rt, dip), pkt(data, dip, ip, ip), FAIL_RERR_ORIGIN)
        return node, (out,)
    raise ValueError("send_pending with nothing sendable")
