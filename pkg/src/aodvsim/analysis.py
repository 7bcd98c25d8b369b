"""Derived views and runtime monitors.

The monitored invariants, by id:

``rreq_freshness``
    Whenever a node forwards someone else's route request, its own table
    already holds the originator at least as freshly as the message
    claims. Checked per qualifying broadcast, against the sender's state
    at emission time.
``route_monotonicity``
    Across any single transition, no node forgets a destination and no
    entry's effective sequence number decreases.
``nexthop_seqno_order``
    In any state: if a node has an entry for dip via next hop nhip (and
    nhip is not dip itself), then nhip also knows dip, at an effective
    sequence number at least as large. Quantified over *known* (not just
    valid) entries — the stricter reading.
``route_quality_order``
    In any state: along a valid hop (both ends valid, next hop not the
    destination), the next hop's entry is strictly better — larger
    sequence number, or equal with strictly fewer hops.
``loop_freedom``
    Every destination's routing graph (valid next-hop pointers only) is
    acyclic.

Monitors are pure observers over node-state snapshots; they never touch
protocol state. Verdicts serialize as ``{"invariant", "holds",
"witness"}`` with a witness present exactly when the invariant failed.

The state and transition monitors dominate exploration time, so they
exist twice: the reference implementations here, and compiled mirrors
in the optional ``_speedups`` extension, picked at import when the
extension built (``AODVSIM_PURE=1`` forces the reference ones).
``BACKEND`` names the active choice.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from . import kernel

try:
    if os.environ.get("AODVSIM_PURE"):
        raise ImportError("pure backend forced")
    from . import _speedups
except ImportError:
    _speedups = None

BACKEND = "pure" if _speedups is None else "compiled"

INVARIANTS = (
    "rreq_freshness",
    "route_monotonicity",
    "nexthop_seqno_order",
    "route_quality_order",
    "loop_freedom",
)


@dataclass(frozen=True, slots=True)
class Verdict:
    invariant: str
    holds: bool
    witness: dict | None = None

    def __post_init__(self):
        if self.holds == (self.witness is not None):
            raise ValueError("witness present iff the invariant failed")

    def to_mapping(self) -> dict:
        return {"invariant": self.invariant, "holds": self.holds,
                "witness": self.witness}


def _ok(invariant):
    return Verdict(invariant, True)


def _bad(invariant, **witness):
    return Verdict(invariant, False, witness)


# ---------------------------------------------------------------------------
# routing graphs and loop detection


@dataclass(frozen=True, slots=True)
class RoutingGraph:
    dip: str
    vertices: frozenset
    edges: frozenset  # ordered pairs (ip, nhip)


def routing_graph(nodes, dip) -> RoutingGraph:
    """Valid next-hop pointers toward ``dip``, one edge per routing node."""
    edges = []
    for ip, node in nodes.items():
        if ip == dip:
            continue
        e = kernel.find_route(node[kernel.RT], dip)
        if e is not None and e[2] == kernel.VALID:
            edges.append((ip, e[4]))
    return RoutingGraph(dip, frozenset(nodes), frozenset(edges))


def has_loop(g):
    """Detect a directed cycle; returns (found, witness-cycle-or-None).

    Accepts a RoutingGraph or any iterable of (u, v) edges. Iterative
    three-color DFS; the witness lists the cycle's vertices in edge order
    (the edge from the last back to the first closes it).
    """
    edges = g.edges if isinstance(g, RoutingGraph) else g
    adj = {}
    for u, v in sorted(edges):
        adj.setdefault(u, []).append(v)
    state = {}  # vertex -> "active" | "done"
    for start in sorted(adj):
        if state.get(start) == "done":
            continue
        path = [start]
        iters = [iter(adj.get(start, ()))]
        state[start] = "active"
        while path:
            found = None
            for v in iters[-1]:
                if state.get(v) == "active":
                    return True, path[path.index(v):]
                if state.get(v) != "done":
                    found = v
                    break
            if found is None:
                state[path.pop()] = "done"
                iters.pop()
            else:
                state[found] = "active"
                path.append(found)
                iters.append(iter(adj.get(found, ())))
    return False, None


# ---------------------------------------------------------------------------
# state / transition / emission checks


def check_state(nodes, step=None):
    """Evaluate the three state invariants; one verdict each."""
    if _speedups is not None:
        out = []
        for inv, w in zip(("nexthop_seqno_order", "route_quality_order",
                           "loop_freedom"),
                          _speedups.state_witnesses(nodes)):
            out.append(_ok(inv) if w is None
                       else Verdict(inv, False, {"step": step, **w}))
        return out
    return _check_state_py(nodes, step)


def _check_state_py(nodes, step=None):
    p3 = t1 = lf = None
    for ip in sorted(nodes):
        rt = nodes[ip][kernel.RT]
        for dip, dsn, flag, hops, nhip, _pre in rt:
            if nhip == dip:
                continue
            nh_rt = nodes[nhip][kernel.RT] if nhip in nodes else ()
            nh_e = kernel.find_route(nh_rt, dip)
            if p3 is None:
                nsqn = dsn if flag == kernel.VALID or dsn == 0 else dsn - 1
                if nh_e is None:
                    p3 = _bad("nexthop_seqno_order", step=step, node=ip, dip=dip,
                              nhip=nhip, values={"reason": "next hop has no entry"})
                else:
                    nh_nsqn = (nh_e[1] if nh_e[2] == kernel.VALID or nh_e[1] == 0
                               else nh_e[1] - 1)
                    if nsqn > nh_nsqn:
                        p3 = _bad("nexthop_seqno_order", step=step, node=ip,
                                  dip=dip, nhip=nhip,
                                  values={"nsqn": nsqn, "nhip_nsqn": nh_nsqn})
            if (t1 is None and flag == kernel.VALID and nh_e is not None
                    and nh_e[2] == kernel.VALID):
                better = nh_e[1] > dsn or (nh_e[1] == dsn and nh_e[3] < hops)
                if not better:
                    t1 = _bad("route_quality_order", step=step, node=ip, dip=dip,
                              nhip=nhip,
                              values={"sqn": dsn, "hops": hops,
                                      "nhip_sqn": nh_e[1], "nhip_hops": nh_e[3]})
    for dip in sorted(nodes):
        if lf is not None:
            break
        edges = []
        for ip, node in nodes.items():
            if ip == dip:
                continue
            e = kernel.find_route(node[kernel.RT], dip)
            if e is not None and e[2] == kernel.VALID:
                edges.append((ip, e[4]))
        looped, cycle = has_loop(edges)
        if looped:
            lf = _bad("loop_freedom", step=step, dip=dip,
                      values={"cycle": list(cycle)})
    return [p3 or _ok("nexthop_seqno_order"),
            t1 or _ok("route_quality_order"),
            lf or _ok("loop_freedom")]


def check_transition(before, after, step=None):
    """One verdict: destinations persist and effective seqnos never drop."""
    if _speedups is not None:
        w = _speedups.transition_witness(before, after)
        return [_ok("route_monotonicity") if w is None
                else Verdict("route_monotonicity", False, {"step": step, **w})]
    return _check_transition_py(before, after, step)


def _check_transition_py(before, after, step=None):
    for ip in sorted(before):
        rt0 = before[ip][kernel.RT]
        rt1 = after[ip][kernel.RT]
        if rt0 == rt1:
            continue
        for e in rt0:
            dip = e[0]
            nsqn0 = e[1] if e[2] == kernel.VALID or e[1] == 0 else e[1] - 1
            e1 = kernel.find_route(rt1, dip)
            if e1 is None:
                return [_bad("route_monotonicity", step=step, node=ip, dip=dip,
                             values={"reason": "entry deleted"})]
            nsqn1 = e1[1] if e1[2] == kernel.VALID or e1[1] == 0 else e1[1] - 1
            if nsqn1 < nsqn0:
                return [_bad("route_monotonicity", step=step, node=ip, dip=dip,
                             values={"nsqn_before": nsqn0, "nsqn_after": nsqn1})]
    return [_ok("route_monotonicity")]


def check_emission(nodes, src, msg, step=None):
    """Freshness of a forwarded route request; vacuous for anything else."""
    if msg[0] != kernel.RREQ:
        return _ok("rreq_freshness")
    _, hops, _rreqid, _dip, _dsn, oip, osn, _sip, _handled = msg
    if oip == src:
        return _ok("rreq_freshness")
    rt = nodes[src][kernel.RT]
    e = kernel.find_route(rt, oip)
    if e is None or e[2] != kernel.VALID:
        return _bad("rreq_freshness", step=step, node=src, oip=oip,
                    values={"reason": "no valid originator entry"})
    if e[1] > osn or (e[1] == osn and e[3] <= hops and e[2] == kernel.VALID):
        return _ok("rreq_freshness")
    return _bad("rreq_freshness", step=step, node=src, oip=oip,
                values={"sqn": e[1], "hops": e[3], "osn": osn,
                        "msg_hops": hops})


_STATE_IDS = ("nexthop_seqno_order", "route_quality_order", "loop_freedom")


def check_action(before, after, links, records, step=None):
    """All monitors for one applied action; returns only the violations.

    The exploration inner loop lives here, so with the compiled backend
    the clean case allocates no verdicts at all.
    """
    if _speedups is not None:
        out = []
        w = _speedups.transition_witness(before, after)
        if w is not None:
            out.append(Verdict("route_monotonicity", False,
                               {"step": step, **w}))
        for rec in records:
            if rec[0] == "bcast":
                v = check_emission(after, rec[1], rec[2], step)
                if not v.holds:
                    out.append(v)
        for inv, w in zip(_STATE_IDS, _speedups.state_witnesses(after)):
            if w is not None:
                out.append(Verdict(inv, False, {"step": step, **w}))
        return out
    out = [v for v in check_transition(before, after, step) if not v.holds]
    for rec in records:
        if rec[0] == "bcast":
            v = check_emission(after, rec[1], rec[2], step)
            if not v.holds:
                out.append(v)
    out.extend(v for v in check_state(after, step) if not v.holds)
    return out


def verdicts_to_json(verdicts) -> list:
    return [v.to_mapping() for v in verdicts]
