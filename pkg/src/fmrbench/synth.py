"""Monte-Carlo validation of MMCL on two-component grouped regression data."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, GroupIndex
from .mmcl import MmclConfig, mmcl_fit

# Monte Carlo grid used in the original validation study.
TABLE1_N = (300, 300)
TABLE1_S = (5, 15)
TABLE1_NOISE = (0.5, 1.0, 2.0, 4.0, 6.0)
TABLE1_D2 = (0.2, 0.6, 1.8)


@dataclass(frozen=True)
class SynthSpec:
    n: tuple = TABLE1_N
    s: tuple = TABLE1_S
    dim: int = 2
    noise_levels: tuple = TABLE1_NOISE
    d2_levels: tuple = TABLE1_D2
    runs: int = 100
    seed: int = 0
    init_mode: str = "random"
    holdout_fraction: float = 0.25
    epsilon: float = 1e-3
    max_iter: int = 10

    def __post_init__(self):
        if len(self.n) != len(self.s) or len(self.n) != 2:
            raise ValueError("n and s must each give two cluster sizes")
        for n_k, s_k in zip(self.n, self.s):
            if s_k < 1 or n_k % s_k:
                raise ValueError(f"N={n_k} is not divisible into S={s_k} equal groups")
        for d2 in self.d2_levels:
            if not 0 < d2 < 4:
                raise ValueError(f"d2={d2} outside (0, 4)")
        if any(e <= 0 for e in self.noise_levels):
            raise ValueError("noise levels must be positive")
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")


@dataclass
class SynthSample:
    dataset: Dataset
    groups: GroupIndex
    true_labels: np.ndarray
    betas: tuple

    def true_row_labels(self) -> np.ndarray:
        return self.true_labels[self.groups.row_group()]


def gen_betas(d2: float, dim: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Two unit-norm coefficient vectors at squared distance ``d2``.

    They are the rows of the lower Cholesky factor of ``[[1, r], [r, 1]]``
    with ``r = 1 - d2 / 2``, padded with zeros beyond two dimensions.
    """
    if not 0 < d2 < 4:
        raise ValueError("d2 must lie in (0, 4)")
    r12 = 1.0 - d2 / 2.0
    B = np.linalg.cholesky(np.array([[1.0, r12], [r12, 1.0]]))
    b1 = np.zeros(dim)
    b2 = np.zeros(dim)
    b1[:2] = B[0]
    b2[:2] = B[1]
    return b1, b2


def gen_sample(spec: SynthSpec, d2: float, noise: float, seed) -> SynthSample:
    rng = np.random.default_rng(seed)
    betas = gen_betas(d2, spec.dim)
    Xs, ys, groups, truth = [], [], [], []
    for k, (n_k, s_k) in enumerate(zip(spec.n, spec.s)):
        X = rng.standard_normal((n_k, spec.dim))
        y = X @ betas[k] + noise * rng.standard_normal(n_k)
        size = n_k // s_k
        Xs.append(X)
        ys.append(y)
        for g in range(s_k):
            groups.extend([f"c{k}g{g}"] * size)
            truth.append(k)
    X = np.vstack(Xs)
    y = np.concatenate(ys)
    ds = Dataset(X, y[:, None], tuple(groups),
                 tuple(f"x{j + 1}" for j in range(spec.dim)), ("y",))
    return SynthSample(ds, GroupIndex.from_labels(groups), np.array(truth), betas)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(labels_a, labels_b) -> float:
    """Normalized mutual information, ``I(A;B) / sqrt(H(A) H(B))``, natural log."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must be 1-D and of equal length")
    n = len(a)
    if n == 0:
        raise ValueError("label vectors must be non-empty")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1)
    ha = _entropy(table.sum(axis=1), n)
    hb = _entropy(table.sum(axis=0), n)
    if ha == 0 and hb == 0:
        return 1.0
    if ha == 0 or hb == 0:
        return 0.0
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = pij > 0
    mi = float((pij[nz] * np.log(pij[nz] / outer[nz])).sum())
    return min(1.0, max(0.0, mi / math.sqrt(ha * hb)))


def run_seed(seed: int, noise_idx: int, d2_idx: int, run: int) -> np.random.SeedSequence:
    """Seed for one replication, independent of execution order."""
    return np.random.SeedSequence(seed, spawn_key=(noise_idx, d2_idx, run))


@dataclass(frozen=True)
class RunRecord:
    noise: float
    d2: float
    run: int
    nmi: float
    iterations: int
    converged: bool


def run_one(spec: SynthSpec, noise_idx: int, d2_idx: int, run: int) -> RunRecord:
    noise = spec.noise_levels[noise_idx]
    d2 = spec.d2_levels[d2_idx]
    sample_ss, fit_ss = run_seed(spec.seed, noise_idx, d2_idx, run).spawn(2)
    sample = gen_sample(spec, d2, noise, sample_ss)
    cfg = MmclConfig(K=2, epsilon=spec.epsilon, max_iter=spec.max_iter,
                     init=spec.init_mode, holdout_fraction=spec.holdout_fraction,
                     seed=int(fit_ss.generate_state(1)[0]))
    res = mmcl_fit(sample.dataset, sample.groups, cfg)
    score = nmi(sample.true_row_labels(), res.row_labels(sample.groups))
    return RunRecord(noise, d2, run, score, res.iterations, res.converged)


def _run_task(args):
    return run_one(*args)


@dataclass
class MonteCarloResult:
    spec: SynthSpec
    records: list = field(default_factory=list)

    def cell(self, noise: float, d2: float) -> list:
        return [r for r in self.records if r.noise == noise and r.d2 == d2]

    def mean_nmi(self, noise: float, d2: float) -> float:
        return float(np.mean([r.nmi for r in self.cell(noise, d2)]))

    def mean_iterations(self, noise: float, d2: float) -> float:
        return float(np.mean([r.iterations for r in self.cell(noise, d2)]))

    def aggregate(self) -> list[dict]:
        rows = []
        for noise in self.spec.noise_levels:
            for d2 in self.spec.d2_levels:
                cell = self.cell(noise, d2)
                scores = np.array([r.nmi for r in cell])
                q25, q50, q75 = np.quantile(scores, [0.25, 0.5, 0.75])
                rows.append({
                    "noise": noise, "d2": d2,
                    "mean_nmi": float(scores.mean()),
                    "q25": float(q25), "q50": float(q50), "q75": float(q75),
                    "mean_iters": float(np.mean([r.iterations for r in cell])),
                })
        return rows


def run_monte_carlo(spec: SynthSpec, workers: int = 1) -> MonteCarloResult:
    """Replicate generate -> cluster -> score over every (noise, d2) cell."""
    tasks = [(spec, i, j, r)
             for i in range(len(spec.noise_levels))
             for j in range(len(spec.d2_levels))
             for r in range(spec.runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        records = [run_one(*t) for t in tasks]
    return MonteCarloResult(spec, records)


def cell_spec(spec: SynthSpec, noise: float, d2: float, **kw) -> SynthSpec:
    """Restrict ``spec`` to a single (noise, d2) cell."""
    return replace(spec, noise_levels=(noise,), d2_levels=(d2,), **kw)
