# cython: language_level=3
"""Compiled mirrors of the hot invariant monitors.

The reference implementations live in :mod:`aodvsim.analysis` and stay
authoritative; these exist because bounded exploration evaluates the
state monitors on every transition it takes, which makes them the
dominant cost of a search by a wide margin.  Each function returns the
same witness mappings the reference builds (minus the ``step`` key,
which the caller adds back), and the equivalence is pinned by tests
that diff the two implementations over random states.
"""

from . import kernel

cdef Py_ssize_t RT_I = kernel.RT
cdef long VALID_I = kernel.VALID


cdef inline tuple _find(tuple rt, object dip):
    cdef Py_ssize_t i
    cdef tuple e
    for i in range(len(rt)):
        e = <tuple> rt[i]
        if e[0] == dip:
            return e
    return None


cdef inline long _nsqn(tuple e):
    cdef long dsn = e[1]
    if <long> e[2] == VALID_I or dsn == 0:
        return dsn
    return dsn - 1


cdef _loop_witness(list edges):
    """Cycle in a next-hop graph, or None; same DFS as the reference."""
    cdef dict adj = {}
    cdef dict state = {}
    cdef list path, iters
    for u, v in sorted(edges):
        adj.setdefault(u, []).append(v)
    for start in sorted(adj):
        if state.get(start) == "done":
            continue
        path = [start]
        iters = [iter(<list> adj.get(start, ()))]
        state[start] = "active"
        while path:
            found = None
            for v in iters[len(iters) - 1]:
                if state.get(v) == "active":
                    return path[path.index(v):]
                if state.get(v) != "done":
                    found = v
                    break
            if found is None:
                state[path.pop()] = "done"
                iters.pop()
            else:
                state[found] = "active"
                path.append(found)
                iters.append(iter(<list> adj.get(found, ())))
    return None


def state_witnesses(dict nodes):
    """First failure of each state monitor, or None apiece.

    Returns ``(nexthop_seqno_order, route_quality_order, loop_freedom)``
    witnesses in the reference's scan order.
    """
    cdef object p3 = None, t1 = None, lf = None
    cdef tuple rt, nh_rt, e, nh_e
    cdef object ip, dip, nhip, nh, node
    cdef long nsqn, nh_nsqn
    cdef bint better
    cdef list ips = sorted(nodes)
    cdef list edges

    for ip in ips:
        rt = <tuple> (<tuple> nodes[ip])[RT_I]
        for entry in rt:
            e = <tuple> entry
            dip = e[0]
            nhip = e[4]
            if nhip == dip:
                continue
            nh = nodes.get(nhip)
            if nh is None:
                nh_rt = ()
            else:
                nh_rt = <tuple> (<tuple> nh)[RT_I]
            nh_e = _find(nh_rt, dip)
            if p3 is None:
                nsqn = _nsqn(e)
                if nh_e is None:
                    p3 = {"node": ip, "dip": dip, "nhip": nhip,
                          "values": {"reason": "next hop has no entry"}}
                else:
                    nh_nsqn = _nsqn(nh_e)
                    if nsqn > nh_nsqn:
                        p3 = {"node": ip, "dip": dip, "nhip": nhip,
                              "values": {"nsqn": nsqn, "nhip_nsqn": nh_nsqn}}
            if (t1 is None and <long> e[2] == VALID_I and nh_e is not None
                    and <long> nh_e[2] == VALID_I):
                better = (nh_e[1] > e[1]
                          or (nh_e[1] == e[1] and nh_e[3] < e[3]))
                if not better:
                    t1 = {"node": ip, "dip": dip, "nhip": nhip,
                          "values": {"sqn": e[1], "hops": e[3],
                                     "nhip_sqn": nh_e[1],
                                     "nhip_hops": nh_e[3]}}

    for dip in ips:
        edges = []
        for ip, node in nodes.items():
            if ip == dip:
                continue
            e = _find(<tuple> (<tuple> node)[RT_I], dip)
            if e is not None and <long> e[2] == VALID_I:
                edges.append((ip, e[4]))
        cycle = _loop_witness(edges)
        if cycle is not None:
            lf = {"dip": dip, "values": {"cycle": cycle}}
            break

    return p3, t1, lf


def transition_witness(dict before, dict after):
    """First monotonicity failure between two states, or None."""
    cdef tuple rt0, rt1, e, e1
    cdef object ip, dip
    cdef long nsqn0, nsqn1
    for ip in sorted(before):
        rt0 = <tuple> (<tuple> before[ip])[RT_I]
        rt1 = <tuple> (<tuple> after[ip])[RT_I]
        if rt0 == rt1:
            continue
        for entry in rt0:
            e = <tuple> entry
            dip = e[0]
            nsqn0 = _nsqn(e)
            e1 = _find(rt1, dip)
            if e1 is None:
                return {"node": ip, "dip": dip,
                        "values": {"reason": "entry deleted"}}
            nsqn1 = _nsqn(e1)
            if nsqn1 < nsqn0:
                return {"node": ip, "dip": dip,
                        "values": {"nsqn_before": nsqn0,
                                   "nsqn_after": nsqn1}}
    return None
