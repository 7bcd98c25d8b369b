"""Time the compiled monitor core against the pure-Python fallback.

The invariant monitors run on every transition the simulator or the
explorer takes, so they dominate search time; the compiled core exists
for exactly this loop. This script runs one fixed, monitor-bound
workload — a bounded exhaustive search of the four-node ring with a
link-flip budget — twice in fresh interpreters: once with
``AODVSIM_PURE=1`` forcing the fallback, once letting the compiled core
load. Import-time selection is what ships, so subprocesses (not
monkeypatching) are the honest way to compare.

Usage::

    python3 benchmarks/compare.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def workload(repeat):
    from aodvsim import analysis, explorer, scenarios
    from aodvsim.config import Config

    nodes, links = scenarios.named_topology("ring4")
    spec = explorer.ExploreSpec(
        nodes=nodes, links=links,
        cfg=Config(invalidation="d"),
        injections=(("n1", "n3", "m0"),),
        link_flips=1, max_depth=25, max_states=100_000,
        check=analysis.INVARIANTS)
    states = 0
    t0 = time.perf_counter()
    for _ in range(repeat):
        report = explorer.explore(spec)
        assert not report.violations and not report.frontier_truncated
        states += report.states_visited
    return {
        "backend": analysis.BACKEND,
        "seconds": time.perf_counter() - t0,
        "states": states,
    }


def run_child(pure, repeat):
    env = dict(os.environ)
    env.pop("AODVSIM_PURE", None)
    if pure:
        env["AODVSIM_PURE"] = "1"
    out = subprocess.run(
        [sys.executable, __file__, "--child", "--repeat", str(repeat)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=1,
                        help="run the search this many times per backend")
    parser.add_argument("--child", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.child:
        json.dump(workload(args.repeat), sys.stdout)
        return

    pure = run_child(pure=True, repeat=args.repeat)
    fast = run_child(pure=False, repeat=args.repeat)
    if pure["backend"] != "pure":
        sys.exit("AODVSIM_PURE=1 did not select the pure backend")
    if pure["states"] != fast["states"]:
        sys.exit(f"backends disagree on the state space: "
                 f"{pure['states']} vs {fast['states']}")

    print(f"workload: ring4 bounded search x{args.repeat} "
          f"({pure['states']} states, all monitors on)")
    print(f"pure:     {pure['seconds']:8.2f} s")
    print(f"compiled: {fast['seconds']:8.2f} s  "
          f"(backend: {fast['backend']})")
    if fast["backend"] != "compiled":
        print("note: compiled core unavailable — both runs used the "
              "pure fallback; build it with "
              "`python3 setup.py build_ext --inplace`")
    else:
        print(f"speedup:  {pure['seconds'] / fast['seconds']:8.1f} x")


if __name__ == "__main__":
    main()
