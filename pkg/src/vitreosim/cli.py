"""Command-line entry points: run, replay, synth, analyze, reproduce-table6, serve."""

from __future__ import annotations

import json
import os
import sys

import click

from . import errors as err
from .analytics import load_reference_summaries, reproduce_reference_effects
from .config import load_config
from .pipeline import analyze_sessions, collect_session_logs, write_report
from .sessionlog import read_log, replay, write_log, write_metrics_json
from .synth import PROFILES, generate_session
from .tasks import TaskKind

_MODULES = [k.value for k in TaskKind]


def _fail(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Task config JSON (defaults to $RETINAVR_CONFIG or built-ins).")
@click.pass_context
def main(ctx, config_path):
    """Vitreoretinal surgery training simulator and analytics toolkit."""
    ctx.ensure_object(dict)
    try:
        ctx.obj["config"] = load_config(config_path)
    except err.VitreoSimError as exc:
        _fail(exc)


@main.command("run")
@click.option("--module", type=click.Choice(_MODULES), default=None,
              help="Expected module; must match the log header when given.")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
def run_cmd(module, input_path, out_path):
    """Execute a recorded session log and emit its metrics."""
    try:
        log = read_log(input_path)
        if module and log.header.module.value != module:
            raise err.CorruptLog(
                f"log is for module {log.header.module.value!r}, not {module!r}")
        report = replay(log)
        if not report.completed:
            raise err.IncompleteSession([log.session_id])
    except err.VitreoSimError as exc:
        _fail(exc)
    if out_path:
        write_metrics_json(report, out_path, header=log.header)
    click.echo(json.dumps(report.to_dict(), sort_keys=True))


@main.command("replay")
@click.option("--module", type=click.Choice(_MODULES), default=None)
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--events/--no-events", default=True, help="Dump the event stream.")
@click.option("--force", is_flag=True, help="Finalize incomplete sessions.")
def replay_cmd(module, input_path, out_path, events, force):
    """Replay a session log, printing events and metrics."""
    try:
        log = read_log(input_path)
        if module and log.header.module.value != module:
            raise err.CorruptLog(
                f"log is for module {log.header.module.value!r}, not {module!r}")
        report, evs = replay(log, collect_events=True)
        if not report.completed and not force:
            raise err.IncompleteSession([log.session_id])
    except err.VitreoSimError as exc:
        _fail(exc)
    if events:
        for e in evs:
            click.echo(json.dumps(e.to_dict(), sort_keys=True))
    if out_path:
        write_metrics_json(report, out_path, header=log.header)
    click.echo(json.dumps(report.to_dict(), sort_keys=True))


@main.command("synth")
@click.option("--profile", type=click.Choice(sorted(PROFILES)), required=True)
@click.option("--module", type=click.Choice(_MODULES + ["all"]), required=True)
@click.option("--seed", type=int, required=True, help="Base seed (participant identity).")
@click.option("--runs", type=int, default=3, show_default=True)
@click.option("--participants", type=int, default=1, show_default=True,
              help="Consecutive seeds starting at --seed.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def synth_cmd(ctx, profile, module, seed, runs, participants, out_dir):
    """Generate synthetic-trainee sessions as *.session.jsonl files."""
    config = ctx.obj["config"]
    modules = list(TaskKind) if module == "all" else [TaskKind(module)]
    os.makedirs(out_dir, exist_ok=True)
    written = []
    try:
        for p in range(participants):
            for kind in modules:
                for run in range(1, runs + 1):
                    log = generate_session(kind, PROFILES[profile], seed=seed + p,
                                           run_index=run, config=config)
                    name = (f"{log.header.participant_id}-run{run}"
                            f"-{kind.value}.session.jsonl")
                    path = os.path.join(out_dir, name)
                    write_log(log, path)
                    written.append(path)
    except err.VitreoSimError as exc:
        _fail(exc)
    click.echo(json.dumps({"written": len(written), "dir": out_dir}))


@main.command("analyze")
@click.option("--metrics", "metrics_dir", required=True, type=click.Path(exists=True),
              help="Directory of *.session.jsonl files.")
@click.option("--report", "report_dir", required=True, type=click.Path())
def analyze_cmd(metrics_dir, report_dir):
    """Effect sizes, mixed-model fits, and laser heatmaps for a session corpus."""
    try:
        logs = collect_session_logs(metrics_dir)
        if not logs:
            raise err.EmptyInput(f"no *.session.jsonl files in {metrics_dir}")
        report = analyze_sessions(logs)
        write_report(report, report_dir)
    except err.VitreoSimError as exc:
        _fail(exc)
    click.echo(json.dumps({
        "sessions": len(logs),
        "effects": len(report.effects),
        "lmm_fits": len(report.lmm),
        "ring_mass": report.ring_mass,
        "report_dir": report_dir,
    }, sort_keys=True))


@main.command("reproduce-table6")
@click.option("--summaries", "summaries_path", default=None, type=click.Path(exists=True),
              help="Group-summary CSV (defaults to the bundled reference data).")
def reproduce_table6_cmd(summaries_path):
    """Recompute the published effect-size table from group summary statistics."""
    try:
        summaries = load_reference_summaries(summaries_path)
        rows = reproduce_reference_effects(summaries)
    except (err.VitreoSimError, OSError, KeyError) as exc:
        _fail(exc)
    for r in rows:
        click.echo(
            f"{r['module']:<10s} {r['metric']:<14s} {r['run']:<8s} "
            f"{r['d']:.2f} [{r['ci_low']:.2f}, {r['ci_high']:.2f}]  "
            f"band={r['band']}  reference {r['ref_d']:.2f} "
            f"[{r['ref_ci_low']:.2f}, {r['ref_ci_high']:.2f}]"
        )


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8713, show_default=True)
@click.option("--log-dir", default="sessions", show_default=True)
@click.pass_context
def serve_cmd(ctx, host, port, log_dir):
    """Run the live WebSocket session service."""
    from .service import ServiceConfig, serve

    try:
        serve(host, port, ServiceConfig(task_config=ctx.obj["config"], log_dir=log_dir))
    except err.VitreoSimError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
