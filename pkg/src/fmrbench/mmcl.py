"""Competitive-learning clustering of observation groups into regression components.

Each group of rows (a store, a dealer, ...) is a must-link block: all of
its rows share one cluster label. Clusters compete for groups by the AIC
of their component model on the group's evaluation rows; the winners are
then refit on the union of their groups' training rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, GroupIndex, HoldoutSplit, grouped_holdout
from .regress import (RSS_FLOOR, FitConfig, LinearModel, aic_linear, constant_model,
                      fit, predict)

UNASSIGNED = -1
INITIAL_AIC = 1e10


@dataclass(frozen=True)
class MmclConfig:
    K: int = 2
    epsilon: float = 1e-3
    max_iter: int = 10
    init: str = "random"
    holdout_fraction: float = 0.25
    fit_cfg: FitConfig = field(default_factory=FitConfig)
    seed: int = 0
    initial_assignment: tuple | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.init not in ("random", "mmclpp", "given"):
            raise ValueError(f"unknown init mode {self.init!r}")
        if self.init == "given" and self.initial_assignment is None:
            raise ValueError("init='given' requires initial_assignment")


@dataclass
class MmclResult:
    assignment: np.ndarray
    models: list
    overall_aic_trace: list
    iterations: int
    converged: bool
    group_ids: tuple = ()
    split: HoldoutSplit | None = None

    @property
    def K(self) -> int:
        return len(self.models)

    def row_labels(self, gi: GroupIndex) -> np.ndarray:
        return expand_to_rows(self.assignment, gi)

    def to_dict(self) -> dict:
        return {
            "assignment": {str(g): int(c) for g, c in zip(self.group_ids, self.assignment)},
            "models": [m.to_dict() for m in self.models],
            "overall_aic_trace": [float(a) for a in self.overall_aic_trace],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MmclResult":
        ids = tuple(d["assignment"])
        return cls(
            assignment=np.array([d["assignment"][g] for g in ids], dtype=np.intp),
            models=[LinearModel.from_dict(m) for m in d["models"]],
            overall_aic_trace=list(d["overall_aic_trace"]),
            iterations=int(d["iterations"]),
            converged=bool(d["converged"]),
            group_ids=ids,
        )


def expand_to_rows(assignment, gi: GroupIndex) -> np.ndarray:
    """Per-row cluster labels; every row carries its group's label."""
    return np.asarray(assignment)[gi.row_group()]


class GroupData:
    """Pre-sliced evaluation/training rows for repeated AIC scoring."""

    def __init__(self, X, y, gi: GroupIndex, split: HoldoutSplit):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        self.gi = gi
        self.split = split
        ev = [split.eval_rows(i) for i in range(gi.M)]
        self.eval_counts = np.array([len(r) for r in ev])
        if np.any(self.eval_counts == 0):
            raise ValueError("every group needs at least one evaluation row")
        self.eval_rows = np.concatenate(ev)
        self.eval_group = np.repeat(np.arange(gi.M), self.eval_counts)
        self.X_eval = self.X[self.eval_rows]
        self.y_eval = self.y[self.eval_rows]

    @property
    def M(self) -> int:
        return self.gi.M

    def train_rows(self, groups) -> np.ndarray:
        return np.concatenate([self.split.train_rows[i] for i in groups])

    def aic_matrix(self, models) -> np.ndarray:
        """``(M, K)`` matrix of group AICs, one column per model."""
        n = self.eval_counts
        out = np.empty((self.M, len(models)))
        for j, m in enumerate(models):
            r = predict(m, self.X_eval) - self.y_eval
            group_rss = np.bincount(self.eval_group, weights=r * r, minlength=self.M)
            out[:, j] = n * np.log(np.maximum(group_rss, n * RSS_FLOOR) / n) + 2 * m.effective_params
        return out


def _prepare(ds: Dataset, gi: GroupIndex, response, split, holdout, seed) -> GroupData:
    if split is None:
        split = grouped_holdout(gi, holdout, _child_seed(seed, 0))
    return GroupData(ds.X, ds.response(response), gi, split)


def _child_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(k,)).generate_state(1)[0])


def group_aic(model: LinearModel, gd: GroupData, i: int) -> float:
    rows = gd.split.eval_rows(i)
    return aic_linear(model, gd.X[rows], gd.y[rows])


def competition_step(models, gd: GroupData) -> np.ndarray:
    """Label every group with its minimum-AIC model (ties -> lowest index)."""
    return np.argmin(gd.aic_matrix(models), axis=1).astype(np.intp)


def _fit_rows(gd: GroupData, rows, fit_cfg: FitConfig) -> LinearModel:
    if len(rows) < 2:
        return constant_model(gd.y[rows], gd.X.shape[1])
    return fit(gd.X[rows], gd.y[rows], fit_cfg)


def learn_step(assignment, gd: GroupData, K: int, fit_cfg: FitConfig):
    """Refit each cluster's model on the training rows of its groups.

    A cluster left without groups takes over the group that is worst
    explained (largest AIC) by its own cluster's model, chosen among
    clusters holding two or more groups.

    Returns
    -------
    models : list of LinearModel
    assignment : ndarray
        The input assignment, possibly modified by the empty-cluster repair.
    """
    a = np.array(assignment, dtype=np.intp)
    members = [np.flatnonzero(a == j) for j in range(K)]
    models: list = [None] * K
    for j in range(K):
        if len(members[j]):
            models[j] = _fit_rows(gd, gd.train_rows(members[j]), fit_cfg)

    for j in range(K):
        if len(members[j]):
            continue
        donors = [i for i in range(len(a)) if a[i] >= 0 and len(members[a[i]]) >= 2]
        if donors:
            aics = np.array([group_aic(models[a[i]], gd, i) for i in donors])
            pick = donors[int(np.argmax(aics))]
        else:
            free = np.flatnonzero(a == UNASSIGNED)
            if not len(free):
                raise ValueError("cannot repair empty cluster: fewer groups than clusters")
            pick = int(free[0])
        old = a[pick]
        a[pick] = j
        members[j] = np.array([pick])
        models[j] = _fit_rows(gd, gd.train_rows(members[j]), fit_cfg)
        if old >= 0:
            members[old] = np.flatnonzero(a == old)
            models[old] = _fit_rows(gd, gd.train_rows(members[old]), fit_cfg)
    return models, a


def overall_aic(models, assignment, gd: GroupData) -> float:
    """Sum of cluster AICs, each the sum of its groups' AICs."""
    a = np.asarray(assignment)
    A = gd.aic_matrix(models)
    return float(A[np.arange(len(a)), a].sum())


def random_init(gi: GroupIndex, K: int, seed, split: HoldoutSplit | None = None) -> np.ndarray:
    """Pick ``K`` distinct seed groups uniformly at random.

    Seed groups with fewer than two training rows absorb further random
    groups until they can be fit. All other groups stay unassigned until
    the first competition.
    """
    if K > gi.M:
        raise ValueError(f"K={K} exceeds the number of groups M={gi.M}")
    rng = np.random.default_rng(seed)
    seeds = rng.choice(gi.M, size=K, replace=False)
    a = np.full(gi.M, UNASSIGNED, dtype=np.intp)
    a[seeds] = np.arange(K)
    if split is None:
        return a
    for j in range(K):
        n_train = sum(len(split.train_rows[i]) for i in np.flatnonzero(a == j))
        while n_train < 2:
            free = np.flatnonzero(a == UNASSIGNED)
            if not len(free):
                break
            extra = int(rng.choice(free))
            a[extra] = j
            n_train += len(split.train_rows[extra])
    return a


def mmclpp_init(gd: GroupData, K: int, seed, fit_cfg: FitConfig) -> np.ndarray:
    """Spread-out seeding: each new seed is the group worst predicted by the previous seed's model."""
    if K > gd.M:
        raise ValueError(f"K={K} exceeds the number of groups M={gd.M}")
    rng = np.random.default_rng(seed)
    selected = [int(rng.integers(gd.M))]
    while len(selected) < K:
        model = _fit_rows(gd, gd.split.train_rows[selected[-1]], fit_cfg)
        scores = gd.aic_matrix([model])[:, 0]
        scores[selected] = -np.inf
        selected.append(int(np.argmax(scores)))
    a = np.full(gd.M, UNASSIGNED, dtype=np.intp)
    a[selected] = np.arange(K)
    return a


def mmcl_fit(ds: Dataset, gi: GroupIndex, cfg: MmclConfig = MmclConfig(),
             response: str | None = None, split: HoldoutSplit | None = None) -> MmclResult:
    """Cluster the groups of ``ds`` into ``cfg.K`` regression components.

    Alternates learning (refit per cluster) and competition (reassign each
    group to its minimum-AIC model). Stops when the relative change of the
    overall AIC drops below ``cfg.epsilon``, when group memberships stop
    changing, or after ``cfg.max_iter`` iterations.
    """
    if cfg.K > gi.M:
        raise ValueError(f"K={cfg.K} exceeds the number of groups M={gi.M}")
    gd = _prepare(ds, gi, response, split, cfg.holdout_fraction, cfg.seed)
    if any(len(r) == 0 for r in gd.split.train_rows):
        raise ValueError("every group needs at least one training row")
    return _run(gd, cfg)


def _initial(gd: GroupData, cfg: MmclConfig) -> np.ndarray:
    init_seed = _child_seed(cfg.seed, 1)
    if cfg.init == "random":
        return random_init(gd.gi, cfg.K, init_seed, gd.split)
    if cfg.init == "mmclpp":
        return mmclpp_init(gd, cfg.K, init_seed, cfg.fit_cfg)
    a = np.asarray(cfg.initial_assignment, dtype=np.intp)
    if a.shape != (gd.M,) or a.max() >= cfg.K or a.min() < UNASSIGNED:
        raise ValueError("initial_assignment must give a label in [-1, K) for every group")
    return a


def _run(gd: GroupData, cfg: MmclConfig) -> MmclResult:
    assignment = _initial(gd, cfg)
    aic = INITIAL_AIC
    trace: list = []
    converged = False
    models: list = []
    for _ in range(cfg.max_iter):
        aic_old = aic
        models, learned_on = learn_step(assignment, gd, cfg.K, cfg.fit_cfg)
        assignment = competition_step(models, gd)
        aic = overall_aic(models, assignment, gd)
        trace.append(aic)
        if abs(aic - aic_old) / max(abs(aic_old), 1e-300) < cfg.epsilon or np.array_equal(assignment, learned_on):
            converged = True
            break
    if not np.array_equal(assignment, learned_on):
        models, assignment = learn_step(assignment, gd, cfg.K, cfg.fit_cfg)
    return MmclResult(assignment, models, trace, len(trace), converged, gd.gi.group_ids, gd.split)
