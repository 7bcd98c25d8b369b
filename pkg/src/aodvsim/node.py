"""Object facade for a single protocol participant.

:class:`Node` wraps the canonical state tuple from :mod:`aodvsim.kernel`
and mutates it in place as handlers run. Emissions come back as kernel
tuples — the network layer interprets them; see the kernel module
docstring for their shapes.
"""

from __future__ import annotations

from . import kernel
from .rt import RoutingTable


def _cfg_key(cfg) -> tuple:
    if hasattr(cfg, "key"):
        return cfg.key()
    return tuple(cfg)


def _msg_key(msg) -> tuple:
    if hasattr(msg, "key"):
        return msg.key()
    return tuple(msg)


class Node:
    """One node's protocol state plus the handlers that advance it."""

    __slots__ = ("_state",)

    def __init__(self, ip: str):
        self._state = kernel.fresh_node(ip)

    @classmethod
    def from_key(cls, state: tuple) -> "Node":
        self = cls.__new__(cls)
        self._state = state
        return self

    def key(self) -> tuple:
        return self._state

    # -- read access -------------------------------------------------

    @property
    def ip(self) -> str:
        return self._state[kernel.IP]

    @property
    def sn(self) -> int:
        return self._state[kernel.SN]

    @property
    def table(self) -> RoutingTable:
        return RoutingTable.from_key(self._state[kernel.RT])

    @property
    def seen_requests(self) -> frozenset:
        """(originator, rreqid) pairs already handled or issued."""
        return frozenset(self._state[kernel.RREQS])

    @property
    def buffered(self) -> dict:
        """Queued data payloads per destination awaiting a route."""
        return {dip: list(payloads) for dip, payloads in self._state[kernel.STORE]}

    @property
    def queue(self) -> tuple:
        return self._state[kernel.QUEUE]

    def sendable_dips(self) -> tuple:
        return kernel.sendable_dips(self._state)

    def __repr__(self) -> str:
        return f"<Node {self.ip} sn={self.sn} routes={len(self._state[kernel.RT])}>"

    # -- transitions ---------------------------------------------------
    #
    # Each returns the emissions produced, already in order.

    def receive(self, msg) -> None:
        self._state = kernel.on_receive(self._state, _msg_key(msg))

    def step(self, cfg=kernel.DEFAULT_CONFIG) -> tuple:
        self._state, out = kernel.step(self._state, _cfg_key(cfg))
        return out

    def send_pending(self, cfg=kernel.DEFAULT_CONFIG) -> tuple:
        self._state, out = kernel.send_pending(self._state, _cfg_key(cfg))
        return out

    def new_route_request(self, dip: str) -> tuple:
        self._state, out = kernel.new_route_request(self._state, dip)
        return out

    def unicast_failed(self, dest, msg, fail_mode, cfg=kernel.DEFAULT_CONFIG) -> tuple:
        self._state, out = kernel.on_unicast_fail(
            self._state, dest, _msg_key(msg), fail_mode, _cfg_key(cfg)
        )
        return out
