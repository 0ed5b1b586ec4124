"""Regression-derived epsilon-constraint LP for KPI recommendations.

Decision variables are ``[t, SE, x_1..x_p]``: ``t`` is the profitability
objective, ``SE`` the sales-effectiveness level held above a floor, and
``x`` the standardized KPIs. Every fitted regression (objective, constraint
and one collinearity model per KPI) enters as a two-sided band of width
``k_slack * residual_std_error`` around its prediction.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .regress import FitConfig, LinearModel, fit
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp

BINDING_TOL = 1e-7


@dataclass(frozen=True)
class CollinearitySet:
    """One model per feature predicting it from the others (own coefficient fixed at 0)."""

    models: tuple

    @property
    def p(self) -> int:
        return len(self.models)


def fit_collinearity(X, fit_cfg: FitConfig = FitConfig(), feature_names=None) -> CollinearitySet:
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    if p < 2:
        raise ValueError("collinearity models need at least two features")
    models = []
    for i in range(p):
        others = [j for j in range(p) if j != i]
        m = fit(X[:, others], X[:, i], fit_cfg)
        coef = np.zeros(p)
        coef[others] = m.coefficients
        models.append(replace(m, coefficients=coef, feature_names=feature_names))
    return CollinearitySet(tuple(models))


@dataclass(frozen=True)
class MooProblem:
    objective_model: LinearModel
    constraint_model: LinearModel
    lower: np.ndarray
    upper: np.ndarray
    se_floor: float = 0.0
    k_slack: float = 1.0
    collinearity: CollinearitySet | None = None
    actionable: np.ndarray | None = None
    reference: np.ndarray | None = None
    feature_names: tuple | None = None

    def __post_init__(self):
        p = self.objective_model.p
        if self.constraint_model.p != p or self.lower.shape != (p,) or self.upper.shape != (p,):
            raise ValueError("models and bounds disagree on the number of features")
        if self.collinearity is not None and self.collinearity.p != p:
            raise ValueError("collinearity set has the wrong number of models")
        if self.k_slack < 0:
            raise ValueError("k_slack must be non-negative")
        lo, hi = self.effective_bounds()
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def p(self) -> int:
        return self.objective_model.p

    def effective_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounds with non-actionable features pinned to their reference value."""
        lo = np.array(self.lower, dtype=np.float64)
        hi = np.array(self.upper, dtype=np.float64)
        if self.actionable is not None:
            if self.reference is None:
                raise ValueError("freezing features requires reference values")
            frozen = ~np.asarray(self.actionable, dtype=bool)
            lo[frozen] = self.reference[frozen]
            hi[frozen] = self.reference[frozen]
        return lo, hi


def _band_rows(var_index: int, model: LinearModel, k: float, n_vars: int, x0: int):
    """``|v - (b0 + b.x)| <= k*sigma`` as two ``<=`` rows."""
    row = np.zeros(n_vars)
    row[var_index] = 1.0
    row[x0:x0 + model.p] -= model.coefficients
    width = k * model.residual_std_error
    return [(row, model.intercept + width), (-row, width - model.intercept)]


def build_lp(prob: MooProblem) -> LinearProgram:
    p = prob.p
    n_vars = 2 + p
    x0 = 2
    rows, rhs, names = [], [], []

    floor = np.zeros(n_vars)
    floor[1] = -1.0
    rows.append(floor)
    rhs.append(-prob.se_floor)
    names.append("se_floor")

    blocks = [("objective", 0, prob.objective_model), ("constraint", 1, prob.constraint_model)]
    if prob.collinearity is not None:
        blocks += [(f"collinearity_{i + 1}", x0 + i, m) for i, m in enumerate(prob.collinearity.models)]
    for label, var, model in blocks:
        (r_up, b_up), (r_dn, b_dn) = _band_rows(var, model, prob.k_slack, n_vars, x0)
        rows += [r_up, r_dn]
        rhs += [b_up, b_dn]
        names += [f"{label}_upper", f"{label}_lower"]

    lo, hi = prob.effective_bounds()
    c = np.zeros(n_vars)
    c[0] = 1.0
    feat = prob.feature_names or tuple(f"x_{j + 1}" for j in range(p))
    return LinearProgram(
        c=c, A=np.array(rows), b=np.array(rhs),
        lower=np.concatenate([[-np.inf, -np.inf], lo]),
        upper=np.concatenate([[np.inf, np.inf], hi]),
        var_names=("t", "SE") + tuple(feat), row_names=tuple(names))


@dataclass
class Recommendation:
    status: str
    se_floor: float
    k_slack: float
    x_star: np.ndarray | None = None
    x_star_raw: np.ndarray | None = None
    predicted_P: float | None = None
    predicted_SE: float | None = None
    binding: list = field(default_factory=list)
    message: str = ""

    def to_dict(self, feature_names=None) -> dict:
        def vec(v):
            return None if v is None else [float(a) for a in v]
        out = {
            "status": self.status,
            "se_floor": float(self.se_floor),
            "k_slack": float(self.k_slack),
            "x_star": vec(self.x_star),
            "x_star_raw": vec(self.x_star_raw),
            "predicted_P": None if self.predicted_P is None else float(self.predicted_P),
            "predicted_SE": None if self.predicted_SE is None else float(self.predicted_SE),
            "binding": list(self.binding),
        }
        if feature_names is not None:
            out["feature_names"] = list(feature_names)
        if self.message:
            out["message"] = self.message
        return out


def recommend(prob: MooProblem, to_raw=None) -> Recommendation:
    """Solve the LP; ``to_raw`` maps a standardized KPI vector to raw units."""
    lp = build_lp(prob)
    sol = solve_lp(lp)
    if sol.status != OPTIMAL:
        msg = {INFEASIBLE: "no KPI setting reaches the SE floor",
               UNBOUNDED: "objective unbounded; add finite KPI bounds"}[sol.status]
        return Recommendation(sol.status, prob.se_floor, prob.k_slack,
                              message=f"{msg} (se_floor={prob.se_floor:g}, k_slack={prob.k_slack:g})")
    v = sol.x
    slack = lp.slack(v)
    binding = [name for name, s in zip(lp.row_names, slack) if s < BINDING_TOL]
    x = v[2:].copy()
    return Recommendation(
        OPTIMAL, prob.se_floor, prob.k_slack, x_star=x,
        x_star_raw=None if to_raw is None else np.asarray(to_raw(x)),
        predicted_P=float(v[0]), predicted_SE=float(v[1]), binding=binding)


def constraint_violation(prob: MooProblem, t: float, se: float, x) -> float:
    """Largest violation of the problem's constraints at ``(t, se, x)`` (0 if feasible)."""
    x = np.asarray(x, dtype=np.float64)
    k = prob.k_slack
    worst = max(0.0, prob.se_floor - se)
    pairs = [(t, prob.objective_model), (se, prob.constraint_model)]
    if prob.collinearity is not None:
        pairs += [(x[i], m) for i, m in enumerate(prob.collinearity.models)]
    for value, m in pairs:
        gap = abs(value - (m.intercept + float(np.dot(m.coefficients, x))))
        worst = max(worst, gap - k * m.residual_std_error)
    lo, hi = prob.effective_bounds()
    worst = max(worst, float(np.max(lo - x, initial=0.0)), float(np.max(x - hi, initial=0.0)))
    return worst


@dataclass(frozen=True)
class FrontierPoint:
    se_floor: float
    recommendation: Recommendation

    @property
    def status(self) -> str:
        return self.recommendation.status


def pareto_sweep(prob: MooProblem, se_grid, to_raw=None) -> list[FrontierPoint]:
    """Solve once per SE floor; infeasible floors mark the end of the frontier."""
    grid = [float(s) for s in se_grid]
    if not grid:
        raise ValueError("se_grid must be non-empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("se_grid must be ascending")
    return [FrontierPoint(s, recommend(replace(prob, se_floor=s), to_raw)) for s in grid]


def cluster_problem(X_cluster, objective_model: LinearModel, constraint_model: LinearModel,
                    se_floor: float = 0.0, k_slack: float = 1.0, collinearity: bool = True,
                    actionable=None, reference=None, feature_names=None,
                    collinearity_cfg: FitConfig = FitConfig()) -> MooProblem:
    """Problem for one cluster, bounded by the empirical KPI range of its rows."""
    X_cluster = np.asarray(X_cluster, dtype=np.float64)
    coll = None
    if collinearity and X_cluster.shape[1] >= 2:
        coll = fit_collinearity(X_cluster, collinearity_cfg, feature_names)
    if reference is None and actionable is not None:
        reference = X_cluster.mean(axis=0)
    return MooProblem(
        objective_model=objective_model, constraint_model=constraint_model,
        lower=X_cluster.min(axis=0), upper=X_cluster.max(axis=0),
        se_floor=se_floor, k_slack=k_slack, collinearity=coll,
        actionable=None if actionable is None else np.asarray(actionable, dtype=bool),
        reference=None if reference is None else np.asarray(reference, dtype=np.float64),
        feature_names=feature_names)
