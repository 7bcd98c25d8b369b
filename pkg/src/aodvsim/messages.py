"""Message dataclasses and the stable wire rendering used in traces.

Wire forms (golden-tested):

* ``rreq(hops,rreqid,dip,dsn,oip,osn,sip)`` — plus a trailing ``,handled``
  once the request has been answered by the destination (only under the
  forward-at-destination variant)
* ``rrep(hops,dip,dsn,oip,sip)``
* ``rerr({rip:rsn,...},sip)`` — destinations sorted
* ``pkt(data,dip,oip,sip)``
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernel


@dataclass(frozen=True, slots=True)
class Rreq:
    hops: int
    rreqid: int
    dip: str
    dsn: int
    oip: str
    osn: int
    sip: str
    handled: bool = False

    def key(self):
        return kernel.rreq(self.hops, self.rreqid, self.dip, self.dsn,
                           self.oip, self.osn, self.sip, self.handled)


@dataclass(frozen=True, slots=True)
class Rrep:
    hops: int
    dip: str
    dsn: int
    oip: str
    sip: str

    def key(self):
        return kernel.rrep(self.hops, self.dip, self.dsn, self.oip, self.sip)


@dataclass(frozen=True, slots=True)
class Rerr:
    dests: tuple  # ((rip, rsn), ...)
    sip: str

    def key(self):
        return kernel.rerr(tuple(self.dests), self.sip)


@dataclass(frozen=True, slots=True)
class DataPkt:
    data: str
    dip: str
    oip: str
    sip: str

    def key(self):
        return kernel.pkt(self.data, self.dip, self.oip, self.sip)


_CLASSES = {kernel.RREQ: Rreq, kernel.RREP: Rrep,
            kernel.RERR: Rerr, kernel.PKT: DataPkt}


def from_key(msg: tuple):
    """Rebuild the dataclass form of a kernel message tuple."""
    return _CLASSES[msg[0]](*msg[1:])


def wire(msg) -> str:
    """Stable one-line rendering of a message (tuple or dataclass)."""
    if not isinstance(msg, tuple):
        msg = msg.key()
    tag = msg[0]
    if tag == kernel.RREQ:
        _, hops, rreqid, dip, dsn, oip, osn, sip, handled = msg
        tail = ",handled" if handled else ""
        return f"rreq({hops},{rreqid},{dip},{dsn},{oip},{osn},{sip}{tail})"
    if tag == kernel.RREP:
        _, hops, dip, dsn, oip, sip = msg
        return f"rrep({hops},{dip},{dsn},{oip},{sip})"
    if tag == kernel.RERR:
        _, dests, sip = msg
        inner = ",".join(f"{rip}:{rsn}" for rip, rsn in dests)
        return f"rerr({{{inner}}},{sip})"
    if tag == kernel.PKT:
        _, data, dip, oip, sip = msg
        return f"pkt({data},{dip},{oip},{sip})"
    raise ValueError(f"not a message: {msg!r}")
