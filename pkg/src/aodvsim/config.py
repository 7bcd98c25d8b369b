"""Protocol interpretation switches and named presets.

The protocol's RFC leaves several behaviours ambiguous; implementations
in the wild resolved them differently. A Config pins one concrete
reading per axis:

* ``invalidation`` — what a node does with a route-error notice claiming
  sequence number m for a destination it stores with number n. One of the
  letters ``a``–``f``:

  =====  =======================  =========================
  mode   invalidates when          stored number becomes
  =====  =======================  =========================
  a      always                    m
  b      m >= n                    m
  c      always                    max(m, n)
  d      always                    max(m, n + 1)
  e      m >= n                    max(m, n + 1)
  f      m > n (default)           m
  =====  =======================  =========================

* ``self_entry`` — what a node does with a route reply that names the node
  itself as the destination (these arise when a neighbour answers a
  request on the node's behalf and the reply passes through it):
  ``allow`` (default) treats it like any other reply, ``discard_rrep``
  drops it, ``forward_no_update`` forwards it without touching the table.

* ``unknown_sqn`` — how a route update with sequence number 0 ("unknown")
  applies to an existing entry: ``keep_sqn`` (default) refreshes next hop
  and hop count but keeps the stored number, ``no_update`` leaves the
  entry alone, ``overwrite_zero`` stores the 0.

* ``variant_fwd_rreq_at_dest`` — the destination, after answering a route
  request, also forwards it (marked answered) so nodes beyond it still
  learn short routes to the requester.

* ``variant_fwd_all_rrep`` — intermediate nodes forward every route reply,
  not only those that changed their table, rewriting it from their own
  entry.

The defaults make up the reading under which the route-ordering invariants
provably hold; several of the alternatives are demonstrably defective, and
the explorer can exhibit their counterexamples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from . import kernel

INVALIDATION_MODES = ("a", "b", "c", "d", "e", "f")
SELF_ENTRY_MODES = (kernel.SELF_ALLOW, kernel.SELF_DISCARD, kernel.SELF_FWD_NO_UPDATE)
UNKNOWN_SQN_MODES = (kernel.KEEP_SQN, kernel.NO_UPDATE, kernel.OVERWRITE_ZERO)


@dataclass(frozen=True, slots=True)
class Config:
    invalidation: str = "f"
    self_entry: str = kernel.SELF_ALLOW
    unknown_sqn: str = kernel.KEEP_SQN
    variant_fwd_rreq_at_dest: bool = False
    variant_fwd_all_rrep: bool = False

    def __post_init__(self):
        if self.invalidation not in INVALIDATION_MODES:
            raise ValueError(f"invalidation must be one of {INVALIDATION_MODES}, "
                             f"got {self.invalidation!r}")
        if self.self_entry not in SELF_ENTRY_MODES:
            raise ValueError(f"self_entry must be one of {SELF_ENTRY_MODES}, "
                             f"got {self.self_entry!r}")
        if self.unknown_sqn not in UNKNOWN_SQN_MODES:
            raise ValueError(f"unknown_sqn must be one of {UNKNOWN_SQN_MODES}, "
                             f"got {self.unknown_sqn!r}")

    def key(self) -> tuple:
        """The flat tuple form the kernel takes."""
        return (
            self.invalidation,
            self.self_entry,
            self.unknown_sqn,
            self.variant_fwd_rreq_at_dest,
            self.variant_fwd_all_rrep,
        )

    def to_mapping(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_mapping(cls, data: dict) -> "Config":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "Config":
        with open(path) as fh:
            return cls.from_mapping(json.load(fh))


#: Named presets. ``default`` is the reading the monitors expect to hold;
#: ``rfc-a`` … ``rfc-f`` select the invalidation resolutions, ``rfc-g``/
#: ``rfc-h`` the restrictive self-entry policies, and ``ns2``/``uiuc`` the
#: unknown-sequence-number readings of those well-known implementations.
PRESETS: dict[str, Config] = {
    "default": Config(),
    "rfc-a": Config(invalidation="a"),
    "rfc-b": Config(invalidation="b"),
    "rfc-c": Config(invalidation="c"),
    "rfc-d": Config(invalidation="d"),
    "rfc-e": Config(invalidation="e"),
    "rfc-f": Config(invalidation="f"),  # alias of default
    "rfc-g": Config(self_entry=kernel.SELF_DISCARD),
    "rfc-h": Config(self_entry=kernel.SELF_FWD_NO_UPDATE),
    "ns2": Config(unknown_sqn=kernel.NO_UPDATE),
    "uiuc": Config(unknown_sqn=kernel.OVERWRITE_ZERO),
}


def from_preset(name: str) -> Config:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; "
                         f"choose from {', '.join(sorted(PRESETS))}") from None
