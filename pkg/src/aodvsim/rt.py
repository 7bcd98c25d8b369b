"""Routing-table object layer and canonical text renderings.

The kernel works on bare tuples; this module gives them names and a
dict-backed table type that is pleasant to build and inspect in tests and
tools. All protocol semantics stay in :mod:`aodvsim.kernel` — every
operation here converts, delegates, and converts back.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernel
from .kernel import INVALID, VALID

FLAG_NAMES = {VALID: "val", INVALID: "inv"}
FLAGS_BY_NAME = {"val": VALID, "inv": INVALID}


@dataclass(frozen=True, slots=True)
class RouteEntry:
    """One destination's route: freshness stamp, quality, and next hop.

    ``precursors`` holds the neighbours known to route through this entry;
    they are the ones owed a route-error notice if it breaks.
    """

    dip: str
    dsn: int
    flag: str  # "val" | "inv"
    hops: int
    nhip: str
    precursors: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.flag not in FLAGS_BY_NAME:
            raise ValueError(f"flag must be 'val' or 'inv', got {self.flag!r}")
        if self.dsn < 0 or self.hops < 0:
            raise ValueError("sequence number and hop count must be >= 0")

    @property
    def valid(self) -> bool:
        return self.flag == "val"

    def key(self) -> tuple:
        return (self.dip, self.dsn, FLAGS_BY_NAME[self.flag], self.hops,
                self.nhip, tuple(sorted(self.precursors)))

    @classmethod
    def from_key(cls, e: tuple) -> "RouteEntry":
        return cls(e[0], e[1], FLAG_NAMES[e[2]], e[3], e[4], frozenset(e[5]))


def render_entry(entry: RouteEntry | tuple, precursors: bool = True) -> str:
    """Canonical text form, e.g. ``(D,2,inv,2,A,{S})``.

    With ``precursors=False`` the five route-selection fields only — the
    form the human table dump uses.
    """
    e = entry.key() if isinstance(entry, RouteEntry) else entry
    head = f"({e[0]},{e[1]},{FLAG_NAMES[e[2]]},{e[3]},{e[4]}"
    if not precursors:
        return head + ")"
    return head + ",{" + ",".join(e[5]) + "})"


class RoutingTable:
    """At most one route entry per destination.

    Construct from entries, or from a kernel tuple via :meth:`from_key`.
    Instances are immutable from the outside: every operation returns a new
    table.
    """

    __slots__ = ("_rt",)

    def __init__(self, entries=()):
        rt = ()
        for e in entries:
            key = e.key() if isinstance(e, RouteEntry) else tuple(e)
            if kernel.find_route(rt, key[0]) is not None:
                raise ValueError(f"duplicate entry for {key[0]!r}")
            rt = kernel._put(rt, key)
        self._rt = rt

    @classmethod
    def from_key(cls, rt: tuple) -> "RoutingTable":
        table = cls.__new__(cls)
        table._rt = tuple(rt)
        return table

    def key(self) -> tuple:
        return self._rt

    # -- queries ----------------------------------------------------------

    def __len__(self):
        return len(self._rt)

    def __contains__(self, dip):
        return kernel.find_route(self._rt, dip) is not None

    def __eq__(self, other):
        return isinstance(other, RoutingTable) and self._rt == other._rt

    def __hash__(self):
        return hash(self._rt)

    def __iter__(self):
        return (RouteEntry.from_key(e) for e in self._rt)

    def __repr__(self):
        inner = " ".join(render_entry(e) for e in self._rt)
        return f"<RoutingTable {inner}>"

    def entry(self, dip) -> RouteEntry:
        e = kernel.find_route(self._rt, dip)
        if e is None:
            raise KeyError(dip)
        return RouteEntry.from_key(e)

    def get(self, dip) -> RouteEntry | None:
        e = kernel.find_route(self._rt, dip)
        return None if e is None else RouteEntry.from_key(e)

    def seqno(self, dip) -> int:
        """Stored sequence number; 0 for unknown destinations."""
        return kernel.seqno(self._rt, dip)

    def flag(self, dip) -> str:
        return FLAG_NAMES[kernel.route_flag(self._rt, dip)]

    def hop_count(self, dip) -> int:
        return kernel.hop_count(self._rt, dip)

    def next_hop(self, dip) -> str:
        return kernel.next_hop(self._rt, dip)

    def known_dests(self) -> set[str]:
        return set(kernel.known_dests(self._rt))

    def valid_dests(self) -> set[str]:
        return set(kernel.valid_dests(self._rt))

    def effective_seqno(self, dip) -> int:
        return kernel.effective_seqno(self._rt, dip)

    # -- operations (all return a new table) ------------------------------

    def update(self, dip, dsn, hops, nhip, precursors=(),
               mode=kernel.KEEP_SQN) -> "RoutingTable":
        """Merge a fresh valid candidate route (six ordered rules)."""
        return RoutingTable.from_key(
            kernel.update_route(self._rt, dip, dsn, hops, nhip,
                                tuple(precursors), mode))

    def invalidate(self, dests, resolution="f") -> "RoutingTable":
        """Apply a received route-error notice under a resolution."""
        if isinstance(dests, dict):
            dests = tuple(sorted(dests.items()))
        return RoutingTable.from_key(
            kernel.invalidate_routes(self._rt, dests, resolution))

    def force_invalidate(self, dests) -> "RoutingTable":
        """Self-detected breakage: invalidate unconditionally."""
        if isinstance(dests, dict):
            dests = tuple(sorted(dests.items()))
        return RoutingTable.from_key(kernel.force_invalidate(self._rt, dests))

    def incremented_dests(self, broken_nhip) -> dict[str, int]:
        """Valid destinations lost with a broken next hop, numbers bumped."""
        return dict(kernel.incremented_dests(self._rt, broken_nhip))

    def add_precursors(self, dip, nodes) -> "RoutingTable":
        return RoutingTable.from_key(
            kernel.add_precursors(self._rt, dip, tuple(nodes)))
