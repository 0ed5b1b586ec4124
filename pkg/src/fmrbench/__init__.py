"""Finite-mixture-of-regressions clustering under must-link group constraints.

Modules
-------
data
    CSV ingestion, soft-impute, standardization, grouped holdout.
regress
    OLS/LASSO component models and AIC scoring.
mmcl
    Competitive-learning clustering (random and spread-out seeding).
synth
    Synthetic two-cluster benchmark and NMI.
simplex, moo
    Two-phase simplex and the regression-derived recommendation LP.
kernels
    Compiled hot loops with a pure-Python fallback.
"""
from .data import (DataError, Dataset, GroupIndex, HoldoutSplit, destandardize,
                   grouped_holdout, load_csv, soft_impute, standardize)
from .kernels import BACKEND
from .mmcl import MmclConfig, MmclResult, mmcl_fit
from .moo import MooProblem, Recommendation, build_lp, pareto_sweep, recommend
from .regress import FitConfig, LinearModel, aic_linear, fit, predict, rss
from .simplex import LinearProgram, solve_lp
from .synth import SynthSpec, gen_betas, gen_sample, nmi, run_monte_carlo

__version__ = "0.1.0"
