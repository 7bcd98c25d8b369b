"""The compiled monitor mirrors must agree with the pure reference
implementations on every input — witness for witness."""

import os
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from aodvsim import analysis, explorer, netsim, scenarios
from aodvsim.config import Config

compiled = pytest.mark.skipif(
    analysis._speedups is None,
    reason="compiled extension not built; nothing to compare")

IPS = ("A", "B", "C", "D")


@st.composite
def network_states(draw):
    nodes = {}
    for ip in IPS:
        rt = []
        for dip in sorted(draw(st.sets(st.sampled_from(IPS), max_size=4))):
            rt.append((dip, draw(st.integers(0, 3)),
                       draw(st.sampled_from((0, 1))), draw(st.integers(0, 3)),
                       draw(st.sampled_from(IPS)), ()))
        nodes[ip] = (ip, 1, tuple(rt), (), (), (), 1)
    return nodes


def force_pure(monkeypatch):
    monkeypatch.setattr(analysis, "_speedups", None)


@compiled
@given(network_states())
@settings(max_examples=300, deadline=None)
def test_state_monitors_agree_on_random_states(nodes):
    fast = analysis.check_state(nodes)
    slow = analysis._check_state_py(nodes)
    assert fast == slow


@compiled
@given(network_states(), network_states())
@settings(max_examples=300, deadline=None)
def test_transition_monitor_agrees_on_random_transitions(before, after):
    fast = analysis.check_transition(before, after)
    slow = analysis._check_transition_py(before, after)
    assert fast == slow


@compiled
@given(network_states(), network_states())
@settings(max_examples=200, deadline=None)
def test_action_bundle_agrees_on_random_transitions(before, after):
    fast = analysis.check_action(before, after, frozenset(), [])
    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(analysis, "_speedups", None)
        slow = analysis.check_action(before, after, frozenset(), [])
    assert fast == slow


@compiled
def test_backends_agree_on_a_full_scenario_run(monkeypatch):
    scn = scenarios.bundled("staleroute")
    fast = netsim.run(scn, Config(invalidation="a"))
    force_pure(monkeypatch)
    slow = netsim.run(scn, Config(invalidation="a"))
    assert fast.trace == slow.trace
    assert fast.violations == slow.violations
    assert len(fast.violations) > 0  # the comparison covered real failures


@compiled
def test_backends_agree_on_an_exploration(monkeypatch):
    nodes, links = scenarios.named_topology("line3")
    spec = explorer.ExploreSpec(nodes, links, Config(),
                                injections=(("n1", "n3", "m0"),),
                                link_flips=1)
    fast = explorer.explore(spec)
    force_pure(monkeypatch)
    slow = explorer.explore(spec)
    assert fast.to_mapping() == slow.to_mapping()
    assert fast.states_visited == 81


def test_backend_flag_reflects_the_loaded_implementation():
    if analysis._speedups is None:
        assert analysis.BACKEND == "pure"
    else:
        assert analysis.BACKEND == "compiled"


def test_environment_override_forces_the_pure_backend():
    out = subprocess.run(
        [sys.executable, "-c",
         "from aodvsim import analysis; print(analysis.BACKEND)"],
        env={**os.environ, "AODVSIM_PURE": "1"},
        capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "pure"
