"""End-to-end analysis: session logs -> metrics, effect sizes, LMM, heatmaps."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

from .analytics import (
    EffectSize,
    HeatmapGrid,
    cohens_d_from_values,
    heatmap,
    ring_mass,
    write_heatmap_csv,
)
from .errors import DegeneratePooledSD, EmptyInput, SingularDesign, VitreoSimError
from .mixedmodel import LmmFit, LmmSpec, fit_lmm
from .sessionlog import (
    METRIC_NAMES,
    MetricsTable,
    SessionLog,
    read_log,
    replay,
    session_metric_rows,
)
from .tasks import TaskKind


@dataclass
class AnalysisReport:
    table: MetricsTable
    effects: list[dict] = field(default_factory=list)          # per module/metric/run
    lmm: dict[str, LmmFit] = field(default_factory=dict)       # "module/metric" -> fit
    ring_mass: dict[str, float] = field(default_factory=dict)  # group -> fraction
    heatmaps: list[HeatmapGrid] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def lmm_run_coefficient(self, module: str, metric: str = "efficiency_s") -> float:
        return self.lmm[f"{module}/{metric}"].beta["run_index"]

    def effect(self, module: str, metric: str, run: str = "combined") -> EffectSize | None:
        for row in self.effects:
            if (row["module"], row["metric"], row["run"]) == (module, metric, run):
                return EffectSize(d=row["d"], ci_low=row["ci_low"],
                                  ci_high=row["ci_high"], band=row["band"])
        return None


def collect_session_logs(directory: str) -> list[SessionLog]:
    logs = []
    for name in sorted(os.listdir(directory)):
        if name.endswith(".session.jsonl"):
            logs.append(read_log(os.path.join(directory, name)))
    return logs


def analyze_sessions(logs: list[SessionLog], laser_grid: int = 21) -> AnalysisReport:
    """Replay every log once and build the full statistics report."""
    rows: list[dict] = []
    spots_by_group: dict[str, list[dict]] = {}
    r_in = r_out = n_breaks = None
    for log in logs:
        report = replay(log)
        if not report.completed:
            raise VitreoSimError(f"incomplete session {log.session_id}")
        rows.extend(session_metric_rows(log.header, report))
        if log.header.module == TaskKind.LASER:
            spots_by_group.setdefault(log.header.group, []).extend(
                report.module_specific["spot_coordinates"])
            r_in = log.header.config.laser_r_in_mm
            r_out = log.header.config.laser_r_out_mm
            n_breaks = log.header.config.laser_break_count
    table = MetricsTable(rows=rows)
    out = AnalysisReport(table=table)

    runs = sorted({r["run_index"] for r in rows})
    for module in sorted({r["module"] for r in rows}):
        for metric in METRIC_NAMES[TaskKind(module)]:
            variants = [("combined", None)] + [(str(r), r) for r in runs]
            for run_label, run_filter in variants:
                nov = table.values(module, metric, group="novice", run_index=run_filter)
                exp = table.values(module, metric, group="expert", run_index=run_filter)
                if len(nov) < 2 or len(exp) < 2:
                    out.skipped.append(f"effect {module}/{metric}/{run_label}")
                    continue
                try:
                    es = cohens_d_from_values(nov, exp)
                except (EmptyInput, DegeneratePooledSD):
                    out.skipped.append(f"effect {module}/{metric}/{run_label}")
                    continue
                out.effects.append({
                    "module": module, "metric": metric, "run": run_label,
                    "d": es.d, "ci_low": es.ci_low, "ci_high": es.ci_high,
                    "band": es.band,
                    "n_novice": len(nov), "n_expert": len(exp),
                })
            try:
                out.lmm[f"{module}/{metric}"] = fit_lmm(
                    LmmSpec(response=metric), table, module=module)
            except SingularDesign as exc:
                out.skipped.append(f"lmm {module}/{metric}: {exc}")

    for group, spots in sorted(spots_by_group.items()):
        out.ring_mass[group] = ring_mass(spots, r_in, r_out)
        out.heatmaps.extend(heatmap(spots, n_breaks, r_out, group=group, g=laser_grid))
    return out


def write_report(report: AnalysisReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    report.table.to_csv(os.path.join(out_dir, "metrics.csv"))
    report.table.to_json(os.path.join(out_dir, "metrics.json"))

    with open(os.path.join(out_dir, "effect_sizes.csv"), "w",
              encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["module", "metric", "run", "d", "ci_low",
                                           "ci_high", "band", "n_novice", "n_expert"])
        w.writeheader()
        w.writerows(report.effects)

    lmm_doc = {
        key: {
            "beta": fit.beta, "se": fit.se, "p_value": fit.p_value,
            "sigma_b2": fit.sigma_b2, "sigma_e2": fit.sigma_e2,
            "lambda": fit.lambda_ratio, "converged": fit.converged,
            "n_obs": fit.n_obs, "n_groups": fit.n_groups,
        }
        for key, fit in report.lmm.items()
    }
    with open(os.path.join(out_dir, "lmm.json"), "w", encoding="utf-8") as fh:
        json.dump(lmm_doc, fh, indent=2, sort_keys=True)

    if report.ring_mass:
        with open(os.path.join(out_dir, "ring_mass.json"), "w", encoding="utf-8") as fh:
            json.dump(report.ring_mass, fh, indent=2, sort_keys=True)
    for grid in report.heatmaps:
        write_heatmap_csv(grid, os.path.join(
            out_dir, f"heatmap_{grid.group}_break{grid.break_index}.csv"))
    if report.skipped:
        with open(os.path.join(out_dir, "skipped.json"), "w", encoding="utf-8") as fh:
            json.dump(report.skipped, fh, indent=2)
