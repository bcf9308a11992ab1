import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vitreosim.analytics import (
    BAND_LARGE,
    BAND_MEDIUM,
    BAND_MINIMAL,
    BAND_NONE,
    BAND_SMALL,
    BAND_VERY_LARGE,
    EffectSize,
    GroupSummary,
    band_for,
    cohens_d,
    cohens_d_from_values,
    heatmap,
    load_reference_effects,
    load_reference_summaries,
    reproduce_reference_effects,
    ring_mass,
    summarize,
)
from vitreosim.errors import DegeneratePooledSD, EmptyInput


# ---------------------------------------------------------------------------
# summarize
# ---------------------------------------------------------------------------

def test_summary_constant_sample():
    s = summarize([5.0, 5.0, 5.0])
    assert (s.n, s.mean, s.sd, s.min, s.max) == (3, 5.0, 0.0, 5.0, 5.0)


def test_summary_empty_rejected():
    with pytest.raises(EmptyInput):
        summarize([])


def test_summary_reproduces_published_expert_navigation_moments():
    # construct a 30-value set with exactly the published mean and SD
    mean, sd, n = 49.86, 14.17, 30
    a = sd * math.sqrt((n - 1) / n)
    values = [mean + a if i % 2 == 0 else mean - a for i in range(n)]
    s = summarize(values)
    assert s.mean == pytest.approx(mean, abs=1e-9)
    assert s.sd == pytest.approx(sd, abs=1e-9)


def test_summary_matches_two_pass_oracle():
    rng = random.Random(2)
    values = [rng.uniform(-100, 100) for _ in range(512)]
    s = summarize(values)
    m = sum(values) / len(values)
    var = sum((v - m) ** 2 for v in values) / (len(values) - 1)
    assert s.mean == pytest.approx(m, rel=1e-12)
    assert s.sd == pytest.approx(math.sqrt(var), rel=1e-12)


# ---------------------------------------------------------------------------
# cohens_d
# ---------------------------------------------------------------------------

def _gs(n, mean, sd):
    return GroupSummary(n=n, mean=mean, sd=sd, min=mean - 2 * sd, max=mean + 2 * sd)


def test_navigation_exits_anchor():
    es = cohens_d(_gs(30, 22, 25.36), _gs(30, 9.03, 6.46))
    assert es.d == pytest.approx(0.70, abs=0.005)
    assert es.ci_low == pytest.approx(0.18, abs=0.005)
    assert es.ci_high == pytest.approx(1.22, abs=0.005)
    assert es.band == BAND_MEDIUM


def test_peeling_safety_anchor():
    es = cohens_d(_gs(30, 4.5, 4.66), _gs(30, 0.77, 1.72))
    assert es.d == pytest.approx(1.06, abs=0.005)
    assert es.ci_low == pytest.approx(0.52, abs=0.005)
    assert es.ci_high == pytest.approx(1.60, abs=0.005)
    assert es.band == BAND_VERY_LARGE


def test_identical_groups_is_none_band():
    es = cohens_d(_gs(10, 3.3, 1.1), _gs(10, 3.3, 1.1))
    assert es.d == 0.0
    assert es.band == BAND_NONE


def test_zero_sd_equal_means_ok_but_unequal_means_degenerate():
    assert cohens_d(_gs(5, 2.0, 0.0), _gs(5, 2.0, 0.0)).d == 0.0
    with pytest.raises(DegeneratePooledSD):
        cohens_d(_gs(5, 2.0, 0.0), _gs(5, 3.0, 0.0))


def test_band_cutoffs():
    assert band_for(0.005) == BAND_NONE
    assert band_for(0.01) == BAND_MINIMAL
    assert band_for(0.19) == BAND_MINIMAL
    assert band_for(0.20) == BAND_SMALL
    assert band_for(0.50) == BAND_MEDIUM
    assert band_for(0.80) == BAND_LARGE
    assert band_for(0.99) == BAND_LARGE
    assert band_for(1.00) == BAND_VERY_LARGE
    assert band_for(-1.3) == BAND_VERY_LARGE


positive = st.floats(min_value=0.01, max_value=1e3, allow_nan=False)
meanish = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@given(meanish, positive, meanish, positive, st.integers(3, 50), st.integers(3, 50))
@settings(max_examples=200)
def test_antisymmetry(m1, s1, m2, s2, n1, n2):
    a, b = _gs(n1, m1, s1), _gs(n2, m2, s2)
    ab = cohens_d(a, b)
    ba = cohens_d(b, a)
    assert ba.d == pytest.approx(-ab.d, rel=1e-9, abs=1e-12)
    assert ba.ci_low == pytest.approx(-ab.ci_high, rel=1e-9, abs=1e-12)
    assert ba.ci_high == pytest.approx(-ab.ci_low, rel=1e-9, abs=1e-12)


@given(meanish, positive, meanish, positive, st.floats(min_value=0.01, max_value=100))
@settings(max_examples=200)
def test_scale_equivariance(m1, s1, m2, s2, c):
    a, b = _gs(12, m1, s1), _gs(12, m2, s2)
    scaled = cohens_d(_gs(12, c * m1, c * s1), _gs(12, c * m2, c * s2))
    base = cohens_d(a, b)
    assert scaled.d == pytest.approx(base.d, rel=1e-9, abs=1e-9)
    assert scaled.ci_low == pytest.approx(base.ci_low, rel=1e-9, abs=1e-9)
    assert scaled.band == base.band


def test_cohens_d_from_values_matches_summaries():
    rng = random.Random(9)
    nov = [rng.gauss(8, 3) for _ in range(30)]
    exp = [rng.gauss(5, 2) for _ in range(30)]
    assert cohens_d_from_values(nov, exp) == cohens_d(summarize(nov), summarize(exp))


# ---------------------------------------------------------------------------
# bundled reference reproduction
# ---------------------------------------------------------------------------

def test_reference_tables_reproduce_within_tolerance():
    rows = reproduce_reference_effects()
    assert len(rows) == 56
    for r in rows:
        tol_ci = 0.05 if r["run"] == "combined" else 0.06
        assert abs(r["d"] - r["ref_d"]) <= 0.02, r
        assert abs(r["ci_low"] - r["ref_ci_low"]) <= tol_ci, r
        assert abs(r["ci_high"] - r["ref_ci_high"]) <= tol_ci, r


def test_reference_summaries_complete():
    summaries = load_reference_summaries()
    effects = load_reference_effects()
    assert len(summaries) == 112  # 14 metrics x 4 runs x 2 groups
    assert len(effects) == 56
    for (module, metric, run), _ in effects.items():
        assert (module, metric, run, "novice") in summaries
        assert (module, metric, run, "expert") in summaries


# ---------------------------------------------------------------------------
# heatmap
# ---------------------------------------------------------------------------

def _spot(b, u, v, geo):
    return {"break": b, "local": [u, v], "geodesic_mm": geo}


def test_heatmap_center_spot_in_central_cell():
    grids = heatmap([_spot(0, 0.0, 0.0, 0.0)], n_breaks=1, r_out=2.2)
    g = grids[0]
    mid = g.g // 2
    assert g.counts[mid][mid] == 1
    assert g.total == 1


def test_heatmap_count_conservation_and_drops():
    rng = random.Random(4)
    spots = []
    for _ in range(500):
        u, v = rng.uniform(-8, 8), rng.uniform(-8, 8)
        spots.append(_spot(rng.randrange(3), u, v, math.hypot(u, v)))
    spots.append({"break": 0, "local": None, "geodesic_mm": 50.0})
    grids = heatmap(spots, n_breaks=3, r_out=2.2)
    extent = 3.0 * 2.2
    inside = sum(1 for s in spots if s["local"] is not None
                 and abs(s["local"][0]) < extent and abs(s["local"][1]) < extent)
    # bin edges: count everything the grids kept plus the reported drops
    assert sum(g.total for g in grids) + sum(g.dropped for g in grids) == len(spots)
    assert sum(g.total for g in grids) == inside


def test_ring_mass():
    spots = [_spot(0, 0, 0, 0.5), _spot(0, 0, 0, 1.5), _spot(0, 0, 0, 2.0),
             _spot(0, 0, 0, 3.0)]
    assert ring_mass(spots, 1.0, 2.2) == pytest.approx(0.5)
    assert ring_mass([], 1.0, 2.2) == 0.0
