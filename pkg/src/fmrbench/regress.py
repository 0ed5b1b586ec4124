"""Linear component models: OLS, LASSO, prediction and AIC scoring."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import lasso_cd

RSS_FLOOR = 1e-12


@dataclass(frozen=True)
class FitConfig:
    model_kind: str = "ols"
    lam: float = 0.0
    cd_tol: float = 1e-9
    cd_max_iter: int = 10_000

    def __post_init__(self):
        if self.model_kind not in ("ols", "lasso"):
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.model_kind == "ols" and self.lam != 0:
            raise ValueError("OLS models take lambda = 0")

    @classmethod
    def for_lambda(cls, lam: float, **kw) -> "FitConfig":
        """OLS when ``lam == 0``, LASSO otherwise."""
        return cls("lasso", lam, **kw) if lam > 0 else cls("ols", 0.0, **kw)


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    effective_params: int
    residual_std_error: float
    lam: float = 0.0
    feature_names: tuple | None = None
    converged: bool = True
    n_iter: int = 0

    @property
    def p(self) -> int:
        return len(self.coefficients)

    def to_dict(self) -> dict:
        names = self.feature_names or tuple(f"x_{j + 1}" for j in range(self.p))
        return {
            "intercept": float(self.intercept),
            "coefficients": [float(c) for c in self.coefficients],
            "feature_names": list(names),
            "lambda": float(self.lam),
            "residual_std_error": float(self.residual_std_error),
            "effective_params": int(self.effective_params),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(
            intercept=float(d["intercept"]),
            coefficients=np.asarray(d["coefficients"], dtype=np.float64),
            effective_params=int(d["effective_params"]),
            residual_std_error=float(d["residual_std_error"]),
            lam=float(d.get("lambda", 0.0)),
            feature_names=tuple(d["feature_names"]) if d.get("feature_names") else None,
        )


def _finish(X, y, intercept, coef, lam, names, converged=True, n_iter=0) -> LinearModel:
    k = 1 + int(np.count_nonzero(np.abs(coef) > 0))
    resid = y - intercept - X @ coef
    rss_train = float(resid @ resid)
    sigma = math.sqrt(rss_train / max(1, len(y) - k))
    return LinearModel(float(intercept), coef, k, sigma, float(lam),
                       tuple(names) if names is not None else None, converged, n_iter)


def fit(X, y, cfg: FitConfig = FitConfig(), feature_names=None) -> LinearModel:
    """Fit an intercept plus linear slopes.

    OLS returns the minimum-norm least-squares slopes (so rank-deficient
    designs, e.g. groups with fewer rows than features, still produce a
    model). LASSO minimizes ``(2n)^-1 ||y - b0 - X b||^2 + lam ||b||_1`` by
    cyclic coordinate descent with an unpenalized intercept; features are
    expected to be standardized already.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if X.shape[0] < 2:
        raise ValueError("fit needs at least two rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("fit inputs contain NaN or inf")

    if cfg.model_kind == "ols":
        xm = X.mean(axis=0)
        ym = y.mean()
        coef = np.linalg.lstsq(X - xm, y - ym, rcond=None)[0] if X.shape[1] else np.zeros(0)
        return _finish(X, y, ym - xm @ coef, coef, 0.0, feature_names)

    b0, coef, sweeps, converged = lasso_cd(
        np.asfortranarray(X), np.ascontiguousarray(y), float(cfg.lam),
        float(cfg.cd_tol), int(cfg.cd_max_iter))
    return _finish(X, y, b0, coef, cfg.lam, feature_names, converged, sweeps)


def constant_model(y, p: int, feature_names=None) -> LinearModel:
    """Intercept-only model; used when a cluster has too few rows to fit slopes."""
    y = np.asarray(y, dtype=np.float64)
    b0 = float(y.mean()) if len(y) else 0.0
    return _finish(np.zeros((len(y), p)), y, b0, np.zeros(p), 0.0, feature_names)


def predict(m: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.p:
        raise ValueError(f"model has {m.p} coefficients but X has shape {X.shape}")
    return m.intercept + X @ m.coefficients


def rss(m: LinearModel, X, y) -> float:
    y = np.asarray(y, dtype=np.float64)
    r = predict(m, X) - y
    if r.shape != y.shape:
        raise ValueError("X and y disagree on the number of rows")
    return float(r @ r)


def aic_from_rss(rss_value: float, n: int, k: int) -> float:
    """``n ln(RSS / n) + 2k`` with RSS floored at ``n * 1e-12``."""
    if n < 1:
        raise ValueError("AIC needs a non-empty evaluation set")
    return n * math.log(max(rss_value, n * RSS_FLOOR) / n) + 2 * k


def aic_linear(m: LinearModel, X, y) -> float:
    return aic_from_rss(rss(m, X, y), len(y), m.effective_params)


def r2_score(y, yhat) -> float:
    y = np.asarray(y, dtype=np.float64)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - yhat) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else 0.0
    return 1.0 - ss_res / ss_tot
