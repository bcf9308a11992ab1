"""Random-intercept linear mixed model fit by REML.

The model is y = X b + Z u + e with one random intercept per participant,
u ~ N(0, sigma_b^2 I) and e ~ N(0, sigma_e^2 I).  The fit profiles the
variance ratio lambda = sigma_b^2 / sigma_e^2: at fixed lambda the GLS
solution and the profiled sigma_e^2 are closed-form, so the REML criterion
reduces to a one-dimensional function of lambda minimized by golden-section
search.  The grouped covariance structure is inverted analytically:

    (I + lambda J_m)^-1 = I - lambda/(1 + lambda m) J_m        (per group)
    log|I + lambda Z Z'| = sum_g log(1 + lambda m_g)

Inference on the fixed effects uses Wald tests with the normal reference
distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergence, SingularDesign

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
LAMBDA_HI = 1e5
LAMBDA_TOL = 1e-10


@dataclass(frozen=True)
class LmmSpec:
    """Model description: response metric, fixed-effect columns, grouping."""

    response: str
    fixed: tuple[str, ...] = ("expertise", "age", "sex", "run_index")
    random_intercept_group: str = "participant_id"


@dataclass
class LmmFit:
    beta: dict[str, float]
    se: dict[str, float]
    p_value: dict[str, float]
    sigma_b2: float
    sigma_e2: float
    lambda_ratio: float
    reml_criterion: float
    converged: bool
    n_obs: int
    n_groups: int


def _norm_sf(z: float) -> float:
    """Upper-tail probability of the standard normal."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


class _RemlProblem:
    """Caches the per-group partition of (y, X) for fast criterion evaluation."""

    def __init__(self, y: np.ndarray, x: np.ndarray, groups: list):
        self.y = y
        self.x = x
        self.n, self.p = x.shape
        uniq = sorted(set(groups), key=str)
        self.group_rows = [np.flatnonzero(np.asarray(groups, dtype=object) == g)
                           for g in uniq]
        self.sizes = np.array([len(r) for r in self.group_rows])
        self.n_groups = len(uniq)

    def _whiten(self, lam: float):
        """Apply V_lambda^{-1} to X and y using the grouped closed form."""
        wy = self.y.copy()
        wx = self.x.copy()
        for rows, m in zip(self.group_rows, self.sizes):
            f = lam / (1.0 + lam * m)
            wy[rows] -= f * self.y[rows].sum()
            wx[rows] -= f * self.x[rows].sum(axis=0)
        return wx, wy

    def criterion(self, lam: float):
        """-2 restricted log-likelihood (profiled, up to an additive constant)."""
        wx, wy = self._whiten(lam)
        a = self.x.T @ wx                      # X' V^-1 X
        b = self.x.T @ wy                      # X' V^-1 y
        sign, logdet_a = np.linalg.slogdet(a)
        if sign <= 0:
            raise SingularDesign("X' V^-1 X is not positive definite")
        beta = np.linalg.solve(a, b)
        resid = self.y - self.x @ beta
        # r' V^-1 r via the same whitening
        q = float(resid @ resid)
        for rows, m in zip(self.group_rows, self.sizes):
            f = lam / (1.0 + lam * m)
            q -= f * resid[rows].sum() ** 2
        if q <= 0:
            raise NonConvergence("non-positive residual quadratic form")
        logdet_v = float(np.log1p(lam * self.sizes).sum())
        crit = logdet_v + logdet_a + (self.n - self.p) * math.log(q)
        return crit, beta, a, q


def _golden_min(fn, lo: float, hi: float, tol: float) -> float:
    """Golden-section minimizer on [lo, hi] to absolute tolerance in x."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(200):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    else:
        raise NonConvergence("golden-section search did not bracket a minimum")
    return 0.5 * (a + b)


def fit_lmm_arrays(y, x, groups, names: tuple[str, ...]) -> LmmFit:
    """Fit the random-intercept model from ready-made arrays.

    ``x`` must already include the intercept column; ``names`` labels its
    columns in order.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or y.shape[0] != x.shape[0] or len(groups) != x.shape[0]:
        raise SingularDesign("design shape mismatch")
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise SingularDesign("fixed-effects design is rank deficient")

    prob = _RemlProblem(y, x, groups)
    lam = _golden_min(lambda l: prob.criterion(l)[0], 0.0, LAMBDA_HI, LAMBDA_TOL)
    if prob.criterion(0.0)[0] < prob.criterion(lam)[0]:
        lam = 0.0  # boundary optimum: variance ratio profiles to zero
    crit, beta, a, q = prob.criterion(lam)

    sigma_e2 = q / (prob.n - prob.p)
    sigma_b2 = lam * sigma_e2
    cov = sigma_e2 * np.linalg.inv(a)
    se = np.sqrt(np.diag(cov))
    pvals = [2.0 * _norm_sf(abs(b) / s) if s > 0 else math.nan
             for b, s in zip(beta, se)]
    return LmmFit(
        beta=dict(zip(names, map(float, beta))),
        se=dict(zip(names, map(float, se))),
        p_value=dict(zip(names, pvals)),
        sigma_b2=float(sigma_b2),
        sigma_e2=float(sigma_e2),
        lambda_ratio=float(lam),
        reml_criterion=float(crit),
        converged=True,
        n_obs=prob.n,
        n_groups=prob.n_groups,
    )


_ENCODERS = {
    "expertise": lambda r: 1.0 if r["group"] == "novice" else 0.0,
    "age": lambda r: float(r["age"]),
    "sex": lambda r: 1.0 if r["sex"] == "m" else 0.0,
    "run_index": lambda r: float(r["run_index"]),
}


def fit_lmm(spec: LmmSpec, table, module: str | None = None) -> LmmFit:
    """Fit the model for one metric of a long-format MetricsTable.

    Encodings: expertise novice=1 / expert=0, sex male=1 / female=0,
    run_index numeric (1..3).  Positive expertise coefficients therefore
    mean higher novice values.
    """
    rows = [r for r in table.rows
            if r["metric_name"] == spec.response
            and (module is None or r["module"] == module)]
    if not rows:
        raise SingularDesign(f"no observations for metric {spec.response!r}")
    names = ("intercept",) + tuple(spec.fixed)
    y = [r["value"] for r in rows]
    x = [[1.0] + [_ENCODERS[f](r) for f in spec.fixed] for r in rows]
    groups = [r[spec.random_intercept_group] for r in rows]
    return fit_lmm_arrays(y, x, groups, names)


def reml_grid_scan(y, x, groups, lambdas) -> float:
    """Minimum REML criterion over an explicit lambda grid (oracle helper)."""
    prob = _RemlProblem(np.asarray(y, float), np.asarray(x, float), groups)
    return min(prob.criterion(l)[0] for l in lambdas)
