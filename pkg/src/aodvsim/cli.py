"""Command-line front end.

Four subcommands cover the package's workflows:

``run``
    Execute a scenario (bundled name or JSON file) under a configuration
    and seed, print the final routing tables and per-discovery route
    status, optionally writing the trace as JSONL.
``explore``
    Bounded exhaustive search over a named topology (or a bundled hunt),
    reporting invariant violations with replayable counterexamples.
    Exits 0 when the space is clean, 1 when violations were found.
``check``
    Re-execute a recorded trace against its scenario and configuration,
    re-running all monitors; any divergence means the trace is corrupt.
``scenarios``
    List the bundled scenarios and named topologies.

Anything wrong with flags or input files exits 2 with a message naming
the offending part; protocol-level findings (violations) exit 1.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace

import click

from . import analysis, explorer, netsim, scenarios
from .config import PRESETS, Config
from .rt import render_entry
from . import kernel

VARIANTS = {
    "fwd-rreq-at-dest": "variant_fwd_rreq_at_dest",
    "fwd-all-rrep": "variant_fwd_all_rrep",
}

INTERPRETATIONS = ("a", "b", "c", "d", "e", "f", "g", "h")

UNKNOWN_SQN = {
    "keep-sqn": "keep_sqn",
    "no-update": "no_update",
    "overwrite-zero": "overwrite_zero",
}

HUNTS = {
    "stale-self-entry": explorer.stale_self_entry_hunt,
    "zero-overwrite": explorer.zero_overwrite_hunt,
}


def _fail(message):
    raise click.UsageError(message)


def _load_scenario(ref) -> netsim.Scenario:
    if ref in scenarios.BUNDLED:
        return scenarios.bundled(ref)
    try:
        return netsim.Scenario.from_json_file(ref)
    except FileNotFoundError:
        _fail(f"scenario: {ref!r} is neither a bundled name "
              f"({', '.join(sorted(scenarios.BUNDLED))}) nor a readable file")
    except json.JSONDecodeError as e:
        _fail(f"scenario {ref}: not valid JSON ({e})")
    except (netsim.ScenarioError, TypeError, KeyError, ValueError) as e:
        _fail(f"scenario {ref}: {e}")


def _compose_config(preset, config_path, variants=(), interpretation=None,
                    unknown_sqn=None):
    """Layer the config flags: preset/file base, then field overrides."""
    if preset and config_path:
        _fail("config: --preset and --config are mutually exclusive")
    if preset:
        cfg = PRESETS[preset]
    elif config_path:
        try:
            cfg = Config.from_json_file(config_path)
        except FileNotFoundError:
            _fail(f"config: cannot read {config_path!r}")
        except json.JSONDecodeError as e:
            _fail(f"config {config_path}: not valid JSON ({e})")
        except (TypeError, ValueError) as e:
            _fail(f"config {config_path}: {e}")
    else:
        cfg = Config()
    if interpretation is not None:
        if interpretation in "abcdef":
            cfg = replace(cfg, invalidation=interpretation)
        elif interpretation == "g":
            cfg = replace(cfg, self_entry=kernel.SELF_DISCARD)
        else:  # h
            cfg = replace(cfg, self_entry=kernel.SELF_FWD_NO_UPDATE)
    if unknown_sqn is not None:
        cfg = replace(cfg, unknown_sqn=UNKNOWN_SQN[unknown_sqn])
    for v in variants:
        cfg = replace(cfg, **{VARIANTS[v]: True})
    return cfg


def _entry_lines(nodes):
    """One line per routing-table entry, so greps stay anchored."""
    lines = []
    for ip in sorted(nodes):
        rt = nodes[ip][kernel.RT]
        if rt:
            lines.extend(f"{ip}: {render_entry(e, precursors=False)}"
                         for e in rt)
        else:
            lines.append(f"{ip}: (no routes)")
    return lines


@click.group()
@click.version_option(package_name="aodvsim")
def main():
    """Executable route-discovery model, monitors, and state-space search."""


@main.command()
@click.option("--scenario", required=True,
              help="Bundled scenario name or scenario JSON file.")
@click.option("--preset", type=click.Choice(sorted(PRESETS)),
              help="Named configuration preset.")
@click.option("--config", "config_path", type=click.Path(),
              help="Configuration JSON file.")
@click.option("--variant", "variants", multiple=True,
              type=click.Choice(sorted(VARIANTS)),
              help="Enable a protocol variant (repeatable).")
@click.option("--seed", type=int, envvar="AODVSIM_SEED", default=None,
              show_default="scheduler default",
              help="Scheduling seed; AODVSIM_SEED works too.")
@click.option("--trace-out", type=click.Path(), default=None,
              help="Write the execution trace as JSONL.")
def run(scenario, preset, config_path, variants, seed, trace_out):
    """Run a scenario to quiescence and print where routes ended up."""
    scn = _load_scenario(scenario)
    cfg = _compose_config(preset, config_path, variants)
    if seed is None:
        seed = netsim.DEFAULT_SEED
    result = netsim.run(scn, cfg, seed=seed)
    if trace_out:
        netsim.write_trace(trace_out, result.trace)
    click.echo(f"steps: {result.steps}"
               + ("" if result.quiescent else "  (step limit hit)"))
    if result.delivered:
        click.echo("delivered: " + ", ".join(
            f"{payload}@{ip}" for ip, payload in result.delivered))
    click.echo("routing tables:")
    for line in _entry_lines(result.nodes):
        click.echo(line)
    pairs = []
    for ev in scn.events:
        if ev.kind == "inject_pkt" and (ev.node, ev.dip) not in pairs:
            pairs.append((ev.node, ev.dip))
    if pairs:
        click.echo("route status:")
        for line in netsim.route_status_lines(result.nodes, pairs):
            click.echo(line)
    if result.violations:
        click.echo("violations:")
        for v in result.violations:
            click.echo(f"  {v.invariant}: {v.witness}")


@main.command()
@click.option("--topology", type=click.Choice(scenarios.TOPOLOGIES),
              help="Named topology to search.")
@click.option("--inject", "injects", multiple=True, metavar="SRC:DST",
              help="Discovery trigger (repeatable, consumed in order); "
                   "default: first node to last.")
@click.option("--hunt", type=click.Choice(sorted(HUNTS)),
              help="Run a bundled counterexample hunt instead of a "
                   "plain topology search.")
@click.option("--interpretation", type=click.Choice(INTERPRETATIONS),
              default=None, help="Route-error invalidation resolution "
                                 "(a-f) or self-entry policy (g/h).")
@click.option("--unknown-sqn", type=click.Choice(sorted(UNKNOWN_SQN)),
              default=None, help="Unknown-sequence-number update rule.")
@click.option("--variants", "variants_mode", type=click.Choice(["off", "on"]),
              default=None, help="Toggle both protocol variants together.")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--link-flips", type=click.IntRange(min=0), default=0,
              show_default=True, help="Per-link flip budget.")
@click.option("--max-depth", type=click.IntRange(min=1), default=25,
              show_default=True)
@click.option("--max-states", type=click.IntRange(min=1), default=100_000,
              show_default=True)
@click.option("--check", "checks", multiple=True,
              type=click.Choice(analysis.INVARIANTS),
              help="Restrict monitoring to these invariants (repeatable).")
@click.option("--report-out", type=click.Path(), default=None,
              help="Write the full report (with counterexamples) as JSON.")
def explore(topology, injects, hunt, interpretation, unknown_sqn,
            variants_mode, preset, config_path, link_flips, max_depth,
            max_states, checks, report_out):
    """Exhaustively search schedules for invariant violations."""
    variants = tuple(VARIANTS) if variants_mode == "on" else ()
    cfg_given = any(x is not None for x in
                    (interpretation, unknown_sqn, variants_mode, preset,
                     config_path))
    cfg = _compose_config(preset, config_path, variants, interpretation,
                          unknown_sqn)
    if hunt:
        if topology or injects:
            _fail("explore: --hunt already fixes topology and injections")
        spec = HUNTS[hunt](cfg=cfg) if cfg_given else HUNTS[hunt]()
    else:
        if not topology:
            _fail("explore: give --topology (or --hunt)")
        nodes, links = scenarios.named_topology(topology)
        injections = []
        for i, text in enumerate(injects):
            src, sep, dst = text.partition(":")
            if not sep or src not in nodes or dst not in nodes:
                _fail(f"explore: --inject {text!r} is not SRC:DST over "
                      f"{','.join(nodes)}")
            injections.append((src, dst, f"m{i}"))
        if not injections:
            injections = [(nodes[0], nodes[-1], "m0")]
        spec = explorer.ExploreSpec(
            nodes=nodes, links=links, cfg=cfg,
            injections=tuple(injections), link_flips=link_flips,
            max_depth=max_depth, max_states=max_states,
            check=tuple(checks) or analysis.INVARIANTS)
    report = explorer.explore(spec)
    click.echo(f"search: {report.search}")
    click.echo(f"states visited: {report.states_visited}")
    click.echo("frontier truncated: "
               + ("yes" if report.frontier_truncated else "no"))
    click.echo(f"violations: {len(report.violations)}")
    for v in report.violations:
        click.echo(f"  {v.invariant} after {len(v.actions)} actions: "
                   f"{v.witness}")
    for note in report.notes:
        click.echo(f"note: {note}")
    if report_out:
        payload = report.to_mapping()
        payload["spec"] = spec.to_mapping()
        with open(report_out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    sys.exit(0 if report.ok else 1)


@main.command()
@click.option("--trace", "trace_path", required=True, type=click.Path(),
              help="Trace JSONL produced by run --trace-out.")
@click.option("--scenario", required=True,
              help="The scenario the trace was recorded against.")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--variant", "variants", multiple=True,
              type=click.Choice(sorted(VARIANTS)))
def check(trace_path, scenario, preset, config_path, variants):
    """Replay a trace and re-run the monitors over every transition."""
    scn = _load_scenario(scenario)
    cfg = _compose_config(preset, config_path, variants)
    try:
        trace = netsim.read_trace(trace_path)
    except FileNotFoundError:
        _fail(f"trace: cannot read {trace_path!r}")
    except (netsim.ScenarioError, json.JSONDecodeError, ValueError) as e:
        _fail(f"trace {trace_path}: {e}")
    try:
        result = netsim.replay(scn, trace, cfg, check=True)
    except netsim.ScenarioError as e:
        _fail(str(e))
    click.echo(f"replayed {result.steps} actions, trace matches")
    if result.violations:
        click.echo("violations:")
        for v in result.violations:
            click.echo(f"  {v.invariant}: {v.witness}")
        sys.exit(1)
    click.echo("all monitored invariants hold")


@main.command("scenarios")
def scenarios_cmd():
    """List bundled scenarios and named topologies."""
    click.echo("bundled scenarios:")
    for name in sorted(scenarios.BUNDLED):
        scn = scenarios.bundled(name)
        click.echo(f"  {name}: {len(scn.nodes)} nodes, "
                   f"{len(scn.links)} links, {len(scn.events)} events")
    click.echo("topologies: " + ", ".join(scenarios.TOPOLOGIES))


if __name__ == "__main__":
    main()
