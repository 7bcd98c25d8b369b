"""Bundled scenarios and named topologies.

Three small scripted scenarios exercise the classic discovery behaviors:

``linkbreak``
    Three nodes in a line. S discovers D through A, delivers a packet,
    then the S-A link breaks and S's next packet fails: S invalidates
    both routes, bumping the D entry's sequence number above what D ever
    announced.
``lostreply``
    A star. S and T request a route to D through the hub A almost
    simultaneously; the hub forwards both requests, but the second reply
    changes nothing in its table and is dropped, so T's discovery
    fails. Under the forward-all-replies variant T obtains the route.
``longpath``
    An eight-node cycle. The request circles the long way around, so A
    records a six-hop route back to S even though S is two hops away
    via D. With the forward-at-destination variant enabled, D pushes the
    answered request onward and A learns the two-hop route instead.
``staleroute``
    Seven nodes, staged so that C ends up holding a *stale self-entry*:
    a route to itself, learned from G's out-of-date table via a reply
    that C itself forwarded, listing B as precursor — while B holds C's
    current sequence number. When C later detects a link break it
    increments the stale entry and tells B, claiming exactly the number
    B already has. Under invalidation resolutions that accept such
    claims (a, b, c) B's effective sequence number for C decreases — a
    route_monotonicity violation; under d, e, f the same script is
    harmless. The decisive races need a cooperative schedule (the
    default seed is one), and the explorer's hunt mode finds the
    violating schedule without a seed.
"""

from __future__ import annotations

from .netsim import Scenario, ScenarioEvent as E


def linkbreak() -> Scenario:
    return Scenario(
        nodes=("S", "A", "D"),
        links=(("S", "A"), ("A", "D")),
        events=(
            E.inject("S", "D", "p1"),
            E.barrier(),
            E.link_down("S", "A"),
            E.inject("S", "D", "p2"),
        ),
    )


def lostreply() -> Scenario:
    # both injections fire before any protocol step, so the hub sees T's
    # request while D's first reply is still in flight
    return Scenario(
        nodes=("S", "T", "A", "D"),
        links=(("S", "A"), ("T", "A"), ("A", "D")),
        events=(
            E.inject("S", "D", "p1"),
            E.inject("T", "D", "p2"),
        ),
    )


def longpath() -> Scenario:
    nodes = ("S", "B", "n1", "n2", "n3", "n4", "A", "D")
    ring = tuple(zip(nodes, nodes[1:] + nodes[:1]))
    return Scenario(
        nodes=nodes,
        links=ring,
        events=(E.inject("S", "D", "p1"),),
    )


def staleroute() -> Scenario:
    return Scenario(
        nodes=("A", "B", "C", "E", "F", "G", "H"),
        links=(("A", "B"), ("B", "C"), ("B", "F"), ("C", "E"),
               ("C", "H"), ("E", "F"), ("E", "G"), ("G", "H")),
        events=(
            # C discovers G via H only: B stays ignorant of C and E never
            # hears C's number, while G records C at sequence number 2
            E.link_down("B", "C"),
            E.link_down("C", "E"),
            E.inject("C", "G", "q0"),
            E.barrier(),
            E.link_up("B", "C"),
            E.link_up("C", "E"),
            # A's request for C reaches G around the far side (nobody on
            # the way can answer), and G replies from its stale entry; A's
            # second request, rebroadcast by C, repoints E's reverse route
            # toward C just in time for the stale reply to transit C and
            # plant the self-entry with precursor B
            E.inject("A", "C", "q1"),
            E.inject("A", "F", "q2"),
            E.barrier(),
            # C's own discovery pushes its sequence number to 3 at B
            E.inject("C", "F", "q3"),
            E.barrier(),
            # the break: C's packet toward E fails, C bumps the stale
            # self-entry to 3 and tells its precursor B
            E.link_down("C", "E"),
            E.inject("C", "E", "q4"),
        ),
    )


BUNDLED = {
    "linkbreak": linkbreak,
    "lostreply": lostreply,
    "longpath": longpath,
    "staleroute": staleroute,
}


def bundled(name: str) -> Scenario:
    try:
        return BUNDLED[name]()
    except KeyError:
        raise ValueError(
            f"unknown scenario {name!r}; bundled: {', '.join(sorted(BUNDLED))}"
        ) from None


# -- named topologies for exploration ---------------------------------------


def _line(n):
    nodes = tuple(f"n{i}" for i in range(1, n + 1))
    return nodes, tuple(zip(nodes, nodes[1:]))


def named_topology(name: str):
    """(nodes, links) for a named shape: line3/line4/line5, ring4, diamond4."""
    if name in ("line3", "line4", "line5"):
        return _line(int(name[4:]))
    if name == "ring4":
        nodes = ("n1", "n2", "n3", "n4")
        return nodes, tuple(zip(nodes, nodes[1:] + nodes[:1]))
    if name == "diamond4":
        # a 4-cycle plus one chord: every pair adjacent except n1-n3
        nodes = ("n1", "n2", "n3", "n4")
        return nodes, (("n1", "n2"), ("n1", "n4"), ("n2", "n3"),
                       ("n2", "n4"), ("n3", "n4"))
    raise ValueError(f"unknown topology {name!r}; known: line3, line4, "
                     f"line5, ring4, diamond4")


TOPOLOGIES = ("line3", "line4", "line5", "ring4", "diamond4")
