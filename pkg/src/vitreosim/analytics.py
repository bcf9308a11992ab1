"""Descriptive statistics, standardized mean differences, and laser heatmaps.

The effect-size convention matches the study design this pipeline mirrors:
group ``a`` is the novice group, ``b`` the expert group, so positive d means
the novice metric is higher (slower times, more touches, more exits).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

from .errors import DegeneratePooledSD, EmptyInput

BAND_NONE = "none"
BAND_MINIMAL = "minimal"
BAND_SMALL = "small"
BAND_MEDIUM = "medium"
BAND_LARGE = "large"
BAND_VERY_LARGE = "very_large"


@dataclass(frozen=True)
class GroupSummary:
    n: int
    mean: float
    sd: float
    min: float
    max: float


@dataclass(frozen=True)
class EffectSize:
    d: float
    ci_low: float
    ci_high: float
    band: str


def summarize(values: list[float]) -> GroupSummary:
    """Sample statistics with the n-1 denominator; sd is 0 for a single value."""
    if not values:
        raise EmptyInput("cannot summarize an empty sample")
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1) if n > 1 else 0.0
    return GroupSummary(n=n, mean=mean, sd=math.sqrt(var),
                        min=min(values), max=max(values))


def band_for(d: float) -> str:
    a = abs(d)
    if a < 0.01:
        return BAND_NONE
    if a < 0.20:
        return BAND_MINIMAL
    if a < 0.50:
        return BAND_SMALL
    if a < 0.80:
        return BAND_MEDIUM
    if a < 1.00:
        return BAND_LARGE
    return BAND_VERY_LARGE


def cohens_d(a: GroupSummary, b: GroupSummary) -> EffectSize:
    """Standardized mean difference (a - b) over the pooled SD, with 95% CI.

    Pooled SD uses (n-1) weights and no small-sample correction.  The CI is
    the normal approximation d +/- 1.96 * SE with
    SE^2 = (na+nb)/(na*nb) + d^2 / (2*(na+nb)).
    """
    if a.n < 2 or b.n < 2:
        raise EmptyInput("cohens_d needs at least 2 observations per group")
    dof = a.n + b.n - 2
    pooled = math.sqrt(((a.n - 1) * a.sd ** 2 + (b.n - 1) * b.sd ** 2) / dof)
    if pooled == 0.0:
        if a.mean == b.mean:
            return EffectSize(d=0.0, ci_low=0.0, ci_high=0.0, band=band_for(0.0))
        raise DegeneratePooledSD("zero pooled SD with unequal means")
    d = (a.mean - b.mean) / pooled
    se = math.sqrt((a.n + b.n) / (a.n * b.n) + d * d / (2.0 * (a.n + b.n)))
    return EffectSize(d=d, ci_low=d - 1.96 * se, ci_high=d + 1.96 * se, band=band_for(d))


def cohens_d_from_values(novice: list[float], expert: list[float]) -> EffectSize:
    return cohens_d(summarize(novice), summarize(expert))


# ---------------------------------------------------------------------------
# laser heatmaps
# ---------------------------------------------------------------------------

@dataclass
class HeatmapGrid:
    """Per-break G x G spot counts over break-local tangent coordinates."""

    break_index: int
    group: str
    g: int
    extent_mm: float            # half-width; bins span [-extent, +extent]
    counts: list[list[int]]
    dropped: int = 0

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def heatmap(spots: list[dict], n_breaks: int, r_out: float, group: str = "",
            g: int = 21, extent_factor: float = 3.0) -> list[HeatmapGrid]:
    """Bin spot tangent coordinates per break; spots outside the extent or
    without a tangent projection are dropped and counted."""
    extent = extent_factor * r_out
    grids = [HeatmapGrid(break_index=b, group=group, g=g, extent_mm=extent,
                         counts=[[0] * g for _ in range(g)]) for b in range(n_breaks)]
    cell = 2.0 * extent / g
    for s in spots:
        b = s["break"]
        uv = s.get("local")
        if uv is None:
            grids[b].dropped += 1
            continue
        u, v = uv
        i = math.floor((v + extent) / cell)
        j = math.floor((u + extent) / cell)
        if 0 <= i < g and 0 <= j < g:
            grids[b].counts[i][j] += 1
        else:
            grids[b].dropped += 1
    return grids


def ring_mass(spots: list[dict], r_in: float, r_out: float) -> float:
    """Fraction of spots whose geodesic distance to their break center lies
    inside the treatment annulus; the uniform-ring signature of skilled use."""
    if not spots:
        return 0.0
    inside = sum(1 for s in spots if r_in <= s["geodesic_mm"] <= r_out)
    return inside / len(spots)


def write_heatmap_csv(grid: HeatmapGrid, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["break", grid.break_index, "group", grid.group,
                    "g", grid.g, "extent_mm", grid.extent_mm, "dropped", grid.dropped])
        for row in grid.counts:
            w.writerow(row)


# ---------------------------------------------------------------------------
# bundled reference tables (published group summaries and effect sizes)
# ---------------------------------------------------------------------------

def _data_path(name: str):
    return resources.files("vitreosim.data").joinpath(name)


def load_reference_summaries(path: str | None = None) -> dict:
    """Reference group summaries keyed by (module, metric, run, group).

    ``run`` is "1" | "2" | "3" | "combined"; run rows carry n=10 per group,
    combined rows pool the three runs per participant as n=30 observations.
    """
    out: dict[tuple, GroupSummary] = {}
    src = open(path, encoding="utf-8") if path else _data_path(
        "group_summaries.csv").open("r", encoding="utf-8")
    with src as fh:
        for row in csv.DictReader(fh):
            key = (row["module"], row["metric"], row["run"], row["group"])
            out[key] = GroupSummary(
                n=int(row["n"]), mean=float(row["mean"]), sd=float(row["sd"]),
                min=float(row["min"]), max=float(row["max"]),
            )
    return out


def load_reference_effects() -> dict:
    """Published effect sizes keyed by (module, metric, run)."""
    out: dict[tuple, tuple[float, float, float]] = {}
    with _data_path("effect_sizes_reference.csv").open("r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[(row["module"], row["metric"], row["run"])] = (
                float(row["d"]), float(row["ci_low"]), float(row["ci_high"]))
    return out


def reproduce_reference_effects(summaries: dict | None = None) -> list[dict]:
    """Effect sizes computed from the reference summaries, next to the
    published values, for every (module, metric, run) row."""
    summaries = summaries or load_reference_summaries()
    reference = load_reference_effects()
    rows = []
    for (module, metric, run), (rd, rlo, rhi) in sorted(reference.items()):
        nov = summaries[(module, metric, run, "novice")]
        exp = summaries[(module, metric, run, "expert")]
        es = cohens_d(nov, exp)
        rows.append({
            "module": module, "metric": metric, "run": run,
            "d": es.d, "ci_low": es.ci_low, "ci_high": es.ci_high, "band": es.band,
            "ref_d": rd, "ref_ci_low": rlo, "ref_ci_high": rhi,
        })
    return rows
