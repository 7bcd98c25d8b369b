"""Bounded explicit-state exploration of protocol executions.

:mod:`aodvsim.netsim` runs *one* schedule per seed.  This module instead
enumerates every schedule a topology admits, up to configurable bounds:
starting from fresh nodes it expands all enabled actions at every state
(node steps, pending sends, packet injections, link flips), deduplicates
states by a canonical hash, and runs the :mod:`aodvsim.analysis` monitors
on every transition it takes.  The search is breadth-first, so the first
violation reported is one of minimal depth, and its counterexample is an
explicit action sequence that replays deterministically.

Exploration requests are :class:`ExploreSpec` values.  Two knobs shape
the space beyond the topology itself:

* **injections** are consumed in the order given — the search may delay
  the next one arbitrarily but never reorders them;
* **link flips** are either budgeted (``link_flips=k`` lets every link
  change state at most ``k`` times, at any point) or scripted
  (``flip_schedule`` is consumed in order like injections are).

A spec may also carry ``prefix_actions``: a fixed action sequence played
before the search starts.  The prefix is monitored like everything else,
and counterexample traces include it, so a violation found this way is
still a single replayable execution with no violating proper prefix.
The hunts at the bottom of the module use this to aim the search at the
narrow races bundled scenarios set up, where a blind search would drown
in interleavings.
"""

from __future__ import annotations

import hashlib
import json
import marshal
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import analysis, kernel, netsim
from .config import Config

__all__ = [
    "ExploreSpec",
    "ExploreReport",
    "Violation",
    "explore",
    "replay",
    "stale_self_entry_hunt",
    "zero_overwrite_hunt",
]


# ---------------------------------------------------------------------------
# exploration requests


@dataclass(frozen=True, slots=True)
class ExploreSpec:
    """What to explore and how far.

    ``nodes``/``links`` give the starting topology (all listed links up).
    ``injections`` is an ordered tuple of ``(origin, dip, payload)``
    triples; ``link_flips`` is the per-link flip budget (0 disables
    flips); ``flip_schedule`` — mutually exclusive with a budget — is an
    ordered tuple of ``(a, b, up)`` flips.  ``check`` selects which
    monitors to run.
    """

    nodes: tuple
    links: tuple
    cfg: Config = field(default_factory=Config)
    injections: tuple = ()
    link_flips: int = 0
    flip_schedule: tuple = ()
    prefix_actions: tuple = ()
    max_depth: int = 25
    max_states: int = 100_000
    check: tuple = analysis.INVARIANTS

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes))
        if len(set(nodes)) != len(nodes) or not nodes:
            raise ValueError("nodes must be a non-empty set of distinct ids")
        links = []
        for a, b in self.links:
            if a not in nodes or b not in nodes:
                raise ValueError(f"link {a}-{b} mentions an unknown node")
            if a == b:
                raise ValueError(f"link {a}-{b} joins a node to itself")
            pair = (a, b) if a < b else (b, a)
            if pair in links:
                raise ValueError(f"duplicate link {pair[0]}-{pair[1]}")
            links.append(pair)
        links.sort()
        injections = tuple(tuple(i) for i in self.injections)
        for origin, dip, _payload in injections:
            if origin not in nodes or dip not in nodes:
                raise ValueError(
                    f"injection {origin}->{dip} mentions an unknown node")
        schedule = tuple((a, b, bool(up)) for a, b, up in self.flip_schedule)
        for a, b, _up in schedule:
            if a not in nodes or b not in nodes:
                raise ValueError(f"flip {a}-{b} mentions an unknown node")
        if self.link_flips < 0:
            raise ValueError("link_flips must be >= 0")
        if self.link_flips and schedule:
            raise ValueError("link_flips and flip_schedule are exclusive")
        bad = set(self.check) - set(analysis.INVARIANTS)
        if bad:
            raise ValueError(f"unknown invariant: {sorted(bad)[0]}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "links", tuple(links))
        object.__setattr__(self, "injections", injections)
        object.__setattr__(self, "flip_schedule", schedule)
        object.__setattr__(self, "prefix_actions",
                           tuple(tuple(a) for a in self.prefix_actions))
        object.__setattr__(self, "check", tuple(self.check))

    def to_mapping(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "links": [list(l) for l in self.links],
            "cfg": self.cfg.to_mapping(),
            "injections": [list(i) for i in self.injections],
            "link_flips": self.link_flips,
            "flip_schedule": [list(f) for f in self.flip_schedule],
            "prefix_actions": [list(a) for a in self.prefix_actions],
            "max_depth": self.max_depth,
            "max_states": self.max_states,
            "check": list(self.check),
        }

    @classmethod
    def from_mapping(cls, data: dict) -> "ExploreSpec":
        kw = dict(data)
        kw["cfg"] = Config.from_mapping(kw.get("cfg", {}))
        return cls(**kw)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True, slots=True)
class Violation:
    """One monitor failure plus the execution that reaches it.

    ``actions`` replays from the spec's initial state through the failing
    transition (prefix included); ``trace`` is the rendered form of that
    same execution, byte-identical to what :func:`replay` regenerates.
    """

    invariant: str
    witness: dict
    actions: tuple
    trace: tuple

    def to_mapping(self) -> dict:
        return {
            "invariant": self.invariant,
            "witness": self.witness,
            "actions": [list(a) for a in self.actions],
            "trace": [ev.to_mapping() for ev in self.trace],
        }


@dataclass(slots=True)
class ExploreReport:
    """Outcome of one :func:`explore` call.

    ``states_visited`` counts distinct canonical states reached.
    ``frontier_truncated`` is True only when a bound (state or depth cap)
    cut off coverage while unexplored behaviour remained; a search that
    stops early because it found a violation is not truncated.
    ``notes`` carries human-readable caveats (e.g. that violations were
    found without an actual routing loop forming at this scale).
    """

    search: str
    states_visited: int
    frontier_truncated: bool
    depth_capped: bool
    violations: list
    notes: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_mapping(self) -> dict:
        return {
            "search": self.search,
            "states_visited": self.states_visited,
            "frontier_truncated": self.frontier_truncated,
            "depth_capped": self.depth_capped,
            "violations": [v.to_mapping() for v in self.violations],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_mapping(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# canonical state keys
#
# Two states are the same for search purposes when they differ at most in
# payload identity.  The kernel never inspects payload strings, so
# renaming them in first-seen order (scanning nodes, queues, and buffers
# deterministically) is a true equivalence; everything else — tables,
# sequence numbers, seen-request sets, queues, counters, link set, and
# the consumption state of injections and flips — is hashed verbatim.


def _rename_payload(table, payload):
    got = table.get(payload)
    if got is None:
        got = table[payload] = f"m{len(table)}"
    return got


def _canonical_key(nodes, links, inj_idx, flips):
    table = {}
    canon = []
    for ip in sorted(nodes):
        n = nodes[ip]
        queue = tuple(
            (m[0], _rename_payload(table, m[1])) + m[2:]
            if m[0] == kernel.PKT else m
            for m in n[kernel.QUEUE])
        store = tuple(
            (dip, tuple(_rename_payload(table, p) for p in ps))
            for dip, ps in n[kernel.STORE])
        canon.append((n[kernel.IP], n[kernel.SN], n[kernel.RT],
                      n[kernel.RREQS], store, queue,
                      n[kernel.NEXT_RREQID]))
    blob = marshal.dumps((tuple(canon), tuple(sorted(links)), inj_idx, flips))
    return hashlib.blake2b(blob, digest_size=16).digest()


# ---------------------------------------------------------------------------
# the search


def _enabled(spec, nodes, links, inj_idx, flips):
    """All branches from a state: (action, inj_idx', flips') triples."""
    out = []
    if inj_idx < len(spec.injections):
        origin, dip, payload = spec.injections[inj_idx]
        out.append((("inject", origin, dip, payload), inj_idx + 1, flips))
    if spec.flip_schedule:
        if flips < len(spec.flip_schedule):
            a, b, up = spec.flip_schedule[flips]
            out.append((("link", a, b, up), inj_idx, flips + 1))
    elif spec.link_flips:
        for i, (a, b) in enumerate(spec.links):
            if flips[i]:
                up = not netsim.connected(links, a, b)
                left = flips[:i] + (flips[i] - 1,) + flips[i + 1:]
                out.append((("link", a, b, up), inj_idx, left))
    for act in netsim.protocol_actions(nodes, links):
        out.append((act, inj_idx, flips))
    return out


def _initial(spec):
    nodes = {ip: kernel.fresh_node(ip) for ip in spec.nodes}
    links = frozenset(spec.links)
    if spec.flip_schedule:
        flips = 0
    elif spec.link_flips:
        flips = (spec.link_flips,) * len(spec.links)
    else:
        flips = ()
    return nodes, links, flips


def _render(spec, actions, key):
    """Re-run ``actions`` from the initial state and render the trace."""
    nodes, links, _ = _initial(spec)
    trace = []
    seq = 0
    for act in actions:
        before = nodes
        nodes, links, records = netsim.apply_action(nodes, links, act, key)
        events, seq = netsim.records_to_trace(records, before, nodes, seq)
        trace.extend(events)
    return tuple(trace), nodes, links


def explore(spec: ExploreSpec) -> ExploreReport:
    """Breadth-first search of every schedule ``spec`` admits.

    Stops at the first violating transition (reporting every monitor that
    failed on it) or when the space or its bounds are exhausted.  The
    expansion order is fixed, so reports are deterministic, and raising
    ``max_states`` never changes the verdict on the part of the space
    both searches cover.
    """
    key = spec.cfg.key()
    checkset = frozenset(spec.check)
    nodes, links, flips = _initial(spec)

    prefix = []
    for act in spec.prefix_actions:
        before = nodes
        nodes, links, records = netsim.apply_action(nodes, links, act, key)
        prefix.append(act)
        bad = [v for v in analysis.check_action(before, nodes, links, records)
               if v.invariant in checkset]
        if bad:
            trace, _, _ = _render(spec, prefix, key)
            return _report(spec, 0, False, False,
                           [Violation(v.invariant, v.witness, tuple(prefix),
                                      trace)
                            for v in bad])

    root = _canonical_key(nodes, links, 0, flips)
    pending = {root: (nodes, links, 0, flips)}
    parent = {root: None}
    visited = {root}
    frontier = deque([(root, 0)])
    truncated = False
    depth_capped = False

    while frontier:
        skey, depth = frontier.popleft()
        nodes, links, inj_idx, flips = pending.pop(skey)
        branches = _enabled(spec, nodes, links, inj_idx, flips)
        if branches and depth >= spec.max_depth:
            depth_capped = True
            truncated = True
            continue
        for action, inj2, flips2 in branches:
            nodes2, links2, records = netsim.apply_action(
                nodes, links, action, key)
            bad = [v for v in analysis.check_action(
                       nodes, nodes2, links2, records)
                   if v.invariant in checkset]
            if bad:
                actions = _path(parent, skey) + (action,)
                full = tuple(prefix) + actions
                trace, _, _ = _render(spec, full, key)
                return _report(spec, len(visited), False, depth_capped,
                               [Violation(v.invariant, v.witness, full, trace)
                                for v in bad])
            key2 = _canonical_key(nodes2, links2, inj2, flips2)
            if key2 in visited:
                continue
            if len(visited) >= spec.max_states:
                truncated = True
                continue
            visited.add(key2)
            pending[key2] = (nodes2, links2, inj2, flips2)
            parent[key2] = (skey, action)
            frontier.append((key2, depth + 1))

    return ExploreReport("bfs", len(visited), truncated, depth_capped, [])


def _report(spec, visited, truncated, depth_capped, violations):
    notes = ()
    if (violations and "loop_freedom" in spec.check
            and all(v.invariant != "loop_freedom" for v in violations)):
        notes = ("no routing loop formed within these bounds; the "
                 "violations listed are the ordering defects that "
                 "precede one",)
    return ExploreReport("bfs", visited, truncated, depth_capped,
                         violations, notes)


def _path(parent, skey):
    actions = []
    link = parent[skey]
    while link is not None:
        skey, action = link
        actions.append(action)
        link = parent[skey]
    actions.reverse()
    return tuple(actions)


def replay(spec: ExploreSpec, actions, check=True):
    """Re-execute a counterexample's action sequence from scratch.

    Returns ``(trace, violations)`` where ``violations`` are the monitor
    failures the re-execution hits (empty when ``check`` is off or the
    actions are a clean prefix).  A :class:`Violation`'s ``actions``
    replayed here regenerate its ``trace`` exactly.
    """
    key = spec.cfg.key()
    checkset = frozenset(spec.check)
    nodes, links, _ = _initial(spec)
    trace = []
    violations = []
    seq = 0
    for act in actions:
        before = nodes
        nodes, links, records = netsim.apply_action(
            nodes, links, tuple(act), key)
        events, seq = netsim.records_to_trace(records, before, nodes, seq)
        trace.extend(events)
        if check:
            violations.extend(
                v for v in analysis.check_action(before, nodes, links, records)
                if v.invariant in checkset)
    return tuple(trace), violations


# ---------------------------------------------------------------------------
# bundled hunts
#
# Blind search is fine for small topologies, but the sequence-number
# regressions the interpretation letters disagree about need a long,
# carefully staged setup that a breadth-first frontier would take ages
# to stumble into.  The hunts below replay a bundled scenario's schedule
# as the prefix — minus its final act — and hand the search just that
# last act's ingredients, so the explorer itself places the decisive
# link failure and packet among the remaining protocol steps.


def stale_self_entry_hunt(invalidation: str = "a",
                          cfg: Optional[Config] = None) -> ExploreSpec:
    """Hunt for a destination poisoning its own precursors.

    Prefix: the ``staleroute`` scenario up to its last quiescence, which
    leaves C holding a stale route *to itself* learned from a delayed
    reply.  The search gets one link failure (C-E) and one packet
    (C to E) to place; invalidation resolutions that trust the resulting
    error message's stale number (a, b, c) lose route monotonicity at B
    within four steps, while d, e, and f survive the same schedule.
    """
    from . import scenarios

    if cfg is None:
        cfg = Config(invalidation=invalidation)
    scn = scenarios.bundled("staleroute")
    setup = netsim.Scenario(scn.nodes, scn.links, scn.events[:-2])
    got = netsim.run(setup, cfg, seed=netsim.DEFAULT_SEED, check=False)
    if not got.quiescent:
        raise RuntimeError("staleroute setup did not quiesce")
    return ExploreSpec(
        nodes=scn.nodes,
        links=scn.links,
        cfg=cfg,
        injections=(("C", "E", "q4"),),
        flip_schedule=(("C", "E", False),),
        prefix_actions=netsim.actions_from_trace(got.trace),
        max_depth=10,
        max_states=20_000,
    )


def zero_overwrite_hunt(cfg: Optional[Config] = None) -> ExploreSpec:
    """Hunt for the damage done by overwriting with unknown freshness.

    Unguided: four nodes in a line, a discovery from n3 followed by one
    from n4, both toward n1.  A node that merely *forwards* a request
    claims no freshness for itself, so under
    ``unknown_sqn="overwrite_zero"`` the forwarding hop's neighbours
    throw away the real sequence number they hold for it.  The race the
    search finds: n3's own discovery teaches n2 (and, two hops on, n1) a
    genuine number for n3, but n3 forwards n4's request before the
    answer to its own discovery reaches it — and n2's record for n3
    regresses to zero while n1 keeps the real number, inverting the
    route-quality order along the chain.

    A request from the node itself would not show this: the handler
    refreshes the originator's entry in the same step, hiding the dip at
    this monitor's granularity.  The forwarded request has no such
    rescue, which is why the hunt needs four nodes, and why it restricts
    ``check`` to the quality order — shallower monotonicity nicks at the
    line's far end would otherwise stop the search one step before the
    ordering between live routes breaks.
    """
    if cfg is None:
        cfg = Config(unknown_sqn="overwrite_zero")
    return ExploreSpec(
        nodes=("n1", "n2", "n3", "n4"),
        links=(("n1", "n2"), ("n2", "n3"), ("n3", "n4")),
        cfg=cfg,
        injections=(("n3", "n1", "m0"), ("n4", "n1", "m1")),
        check=("route_quality_order",),
        max_depth=30,
        max_states=400_000,
    )
