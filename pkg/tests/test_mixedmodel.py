import math

import numpy as np
import pytest

from vitreosim.errors import SingularDesign
from vitreosim.mixedmodel import (
    LmmSpec,
    fit_lmm,
    fit_lmm_arrays,
    reml_grid_scan,
)
from vitreosim.sessionlog import MetricsTable

NAMES = ("intercept", "expertise", "age", "sex", "run_index")
BETA = np.array([30.0, 8.0, 0.2, -5.0, -7.67])


def _design(n_participants=20, runs=3, seed=0):
    rng = np.random.default_rng(seed)
    ages = rng.uniform(25, 60, n_participants)
    sexes = rng.integers(0, 2, n_participants)
    novice = (np.arange(n_participants) < n_participants // 2).astype(float)
    x, groups = [], []
    for i in range(n_participants):
        for r in range(1, runs + 1):
            x.append([1.0, novice[i], ages[i], float(sexes[i]), float(r)])
            groups.append(f"p{i:02d}")
    return np.array(x), groups


def test_ols_collapse_without_random_effect():
    x, groups = _design(seed=1)
    rng = np.random.default_rng(11)
    y = x @ BETA + rng.normal(0, 8.0, len(x))  # sigma_b^2 = 0
    fit = fit_lmm_arrays(y, x, groups, NAMES)
    ols = np.linalg.lstsq(x, y, rcond=None)[0]
    got = np.array([fit.beta[n] for n in NAMES])
    assert np.max(np.abs(got - ols)) < 1e-6


def test_recovers_planted_coefficients():
    x, groups = _design(seed=2)
    rng = np.random.default_rng(22)
    u = rng.normal(0, 5.0, 20)
    y = x @ BETA + np.repeat(u, 3) + rng.normal(0, 8.0, len(x))
    fit = fit_lmm_arrays(y, x, groups, NAMES)
    assert fit.converged
    assert fit.sigma_b2 >= 0 and fit.sigma_e2 > 0
    # within 4 standard errors of the planted value (single noisy realization)
    assert abs(fit.beta["run_index"] - (-7.67)) <= 4.0 * fit.se["run_index"]
    assert 0 <= fit.p_value["run_index"] <= 1


def test_reml_beats_grid_scan():
    x, groups = _design(seed=3)
    rng = np.random.default_rng(33)
    u = rng.normal(0, 5.0, 20)
    y = x @ BETA + np.repeat(u, 3) + rng.normal(0, 8.0, len(x))
    fit = fit_lmm_arrays(y, x, groups, NAMES)
    grid = np.concatenate([[0.0], np.logspace(-4, 4, 999)])
    assert fit.reml_criterion <= reml_grid_scan(y, x, groups, grid) + 1e-8


def test_variance_components_recovered_roughly():
    x, groups = _design(n_participants=60, seed=4)
    rng = np.random.default_rng(44)
    u = rng.normal(0, 5.0, 60)
    y = x @ BETA + np.repeat(u, 3) + rng.normal(0, 8.0, len(x))
    fit = fit_lmm_arrays(y, x, groups, NAMES)
    assert fit.sigma_b2 == pytest.approx(25.0, rel=0.8)
    assert fit.sigma_e2 == pytest.approx(64.0, rel=0.5)


def test_singular_design_rejected():
    x, groups = _design(seed=5)
    x = np.hstack([x, x[:, 1:2]])  # duplicated column
    y = np.zeros(len(x))
    with pytest.raises(SingularDesign):
        fit_lmm_arrays(y, x, groups, NAMES + ("dup",))


def test_fit_from_metrics_table():
    rng = np.random.default_rng(5)
    rows = []
    for i in range(20):
        group = "novice" if i < 10 else "expert"
        age = 28.0 + (20.0 if group == "expert" else 0.0) + rng.uniform(-3, 3)
        sex = "m" if rng.random() < 0.5 else "f"
        u = rng.normal(0, 5.0)
        for r in range(1, 4):
            value = (30.0 + 8.0 * (group == "novice") + 0.2 * age
                     - 5.0 * (sex == "m") - 7.67 * r + u + rng.normal(0, 8.0))
            rows.append({
                "participant_id": f"p{i:02d}", "group": group, "age": age,
                "sex": sex, "run_index": r, "module": "navigation",
                "metric_name": "efficiency_s", "value": value,
            })
    fit = fit_lmm(LmmSpec(response="efficiency_s"), MetricsTable(rows=rows),
                  module="navigation")
    assert fit.n_obs == 60 and fit.n_groups == 20
    assert abs(fit.beta["run_index"] - (-7.67)) <= 4.0 * fit.se["run_index"]
    # age and expertise are nearly collinear by design, so judge in SE units
    assert abs(fit.beta["expertise"] - 8.0) <= 4.0 * fit.se["expertise"]


def test_missing_metric_raises():
    with pytest.raises(SingularDesign):
        fit_lmm(LmmSpec(response="nope"), MetricsTable(rows=[]))
