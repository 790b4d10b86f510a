"""Randomized empirical validation of the closed-interpolation conditions.

Each trial samples parameter values, places domain knots (inside the
parity-appropriate brackets, or deliberately violating them), assembles the
closed system matrix and measures its singular values.  A counterexample is
a trial whose knots satisfy the sufficient condition but whose matrix is
rank-deficient at the configured tolerance; the harness hunts for them and
reports aggregate statistics.

Trials are reproducible and order-independent: trial (degree, index) draws
from ``Philox(SeedSequence(entropy=seed, spawn_key=(degree, index)))``, so
parallel execution cannot change a report.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .linalg_solve import assemble_closed_system
from .param_knots import (
    ParameterValues,
    check_conjecture1,
    check_conjecture2,
    condition_brackets,
    exhaustive_witness_exists,
    shift_parameters,
)
from .spline_core import cyclic_knot_vector
from .errors import InvalidInputError

GENERATOR_ID = (
    "numpy.random.Philox(4x64-10), one stream per trial via "
    "SeedSequence(entropy=seed, spawn_key=(degree, trial))"
)

UNIFORM_GAP = "uniform-gap"
LOGNORMAL_GAP = "lognormal-gap"
INSIDE = "inside"
VIOLATING = "violating"

# Exhaustive witness search is cross-checked against the greedy scan up to
# this many data points.
EXHAUSTIVE_LIMIT_N = 8


@dataclass(frozen=True)
class TrialConfig:
    """Sampling plan for a batch of trials; ``trials`` counts per degree."""

    conjecture: int = 1
    degrees: Tuple[int, ...] = (2, 3, 4, 5)
    n_range: Tuple[int, int] = (6, 40)
    nhat_extra: Tuple[int, int] = (1, 10)
    trials: int = 1000
    seed: int = 0
    rank_tol: float = 1e-12
    t_sampling: str = UNIFORM_GAP
    d_sampling: str = INSIDE

    def __post_init__(self):
        if self.conjecture not in (1, 2):
            raise InvalidInputError("conjecture must be 1 or 2")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if not self.degrees or any(p < 2 for p in self.degrees):
            raise InvalidInputError("degrees must be >= 2")
        if self.n_range[0] > self.n_range[1] or self.nhat_extra[0] > self.nhat_extra[1]:
            raise InvalidInputError("empty sampling range")
        if self.t_sampling not in (UNIFORM_GAP, LOGNORMAL_GAP):
            raise InvalidInputError(f"unknown parameter sampling law {self.t_sampling!r}")
        if self.d_sampling not in (INSIDE, VIOLATING):
            raise InvalidInputError(f"unknown knot sampling law {self.d_sampling!r}")


@dataclass(frozen=True)
class TrialRecord:
    """One measured configuration."""

    degree: int
    index: int
    n: int
    nhat: int
    condition: bool
    sigma_min: float
    sigma_max: float
    rank: int
    full_rank: bool
    greedy_agrees: Optional[bool] = None  # vs exhaustive search (small n only)
    epsilon: Optional[float] = None       # boundary-stress distance

    @property
    def sigma_ratio(self):
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0

    @property
    def is_counterexample(self):
        return self.condition and not self.full_rank


@dataclass
class TrialReport:
    """All records of a run plus the aggregates the report text prints."""

    config: TrialConfig
    records: List[TrialRecord]
    generator: str = GENERATOR_ID

    @property
    def counterexamples(self):
        return [r for r in self.records if r.is_counterexample]

    @property
    def condition_true(self):
        return [r for r in self.records if r.condition]

    def min_sigma_ratio(self):
        ratios = [r.sigma_ratio for r in self.condition_true]
        return min(ratios) if ratios else float("nan")

    def greedy_checked(self):
        return [r for r in self.records if r.greedy_agrees is not None]

    def degree_summary(self, degree):
        recs = [r for r in self.records if r.degree == degree]
        cond = [r for r in recs if r.condition]
        ratios = [r.sigma_ratio for r in cond]
        return {
            "trials": len(recs),
            "condition_true": len(cond),
            "full_rank_of_condition_true": sum(r.full_rank for r in cond),
            "violations_still_full_rank": sum(r.full_rank for r in recs if not r.condition),
            "violations": sum(not r.condition for r in recs),
            "counterexamples": sum(r.is_counterexample for r in recs),
            "min_sigma_ratio": min(ratios) if ratios else float("nan"),
        }


def _trial_rng(seed, degree, index):
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(degree, index)))
    )


def _sample_parameters(rng, n, law):
    if law == UNIFORM_GAP:
        gaps = rng.uniform(0.05, 1.0, n + 1)
    else:
        gaps = np.exp(rng.normal(0.0, 1.0, n + 1))
    gaps = gaps / gaps.sum()
    gaps = np.maximum(gaps, 1e-4)  # keep bracket widths numerically meaningful
    gaps = gaps / gaps.sum()
    t = np.concatenate([[0.0], np.cumsum(gaps[:-1])])
    return ParameterValues(t)


def _sample_inside(rng, lo, hi):
    width = hi - lo
    delta = 1e-6 * width + 1e-9
    return rng.uniform(lo + delta, hi - delta)


def _parity_params(params, degree):
    return shift_parameters(params) if degree % 2 == 0 else params


def _measure(parity_params, domain, degree, nhat, rank_tol):
    kv = cyclic_knot_vector(domain, degree)
    matrix, shape = assemble_closed_system(parity_params, kv, nhat)
    try:
        s = np.linalg.svd(matrix, compute_uv=False)
    except np.linalg.LinAlgError:
        return 0.0, float("nan"), 0, False
    smax = float(s[0]) if s.size else 0.0
    smin = float(s[min(shape.rows, shape.cols) - 1]) if s.size else 0.0
    rank = int(np.sum(s > rank_tol * smax)) if smax > 0 else 0
    return smin, smax, rank, rank == shape.rows


def _conjecture1_trial(cfg, degree, index):
    rng = _trial_rng(cfg.seed, degree, index)
    n = int(rng.integers(max(cfg.n_range[0], degree + 1), cfg.n_range[1] + 1))
    params = _sample_parameters(rng, n, cfg.t_sampling)
    parity = _parity_params(params, degree)
    lo, hi = condition_brackets(parity, degree)
    interior = _sample_inside(rng, lo, hi)
    if cfg.d_sampling == VIOLATING:
        j = int(rng.integers(1, n + 1))
        upper = interior[j] if j < n else 1.0  # next knot bounds the excursion
        interior[j - 1] = hi[j - 1] + rng.uniform(0.1, 0.9) * (upper - hi[j - 1])
    domain = np.concatenate([[0.0], interior, [1.0]])
    condition = check_conjecture1(parity, domain, degree)
    smin, smax, rank, full = _measure(parity, domain, degree, n, cfg.rank_tol)
    return TrialRecord(degree, index, n, n, condition, smin, smax, rank, full)


def _conjecture2_trial(cfg, degree, index):
    rng = _trial_rng(cfg.seed, degree, index)
    n = int(rng.integers(max(cfg.n_range[0], degree + 1), cfg.n_range[1] + 1))
    extra = int(rng.integers(cfg.nhat_extra[0], cfg.nhat_extra[1] + 1))
    params = _sample_parameters(rng, n, cfg.t_sampling)
    parity = _parity_params(params, degree)
    lo, hi = condition_brackets(parity, degree)
    if cfg.d_sampling == VIOLATING:
        # every interior knot below the first bracket: no feasible subsequence
        interior = np.sort(rng.uniform(1e-4, lo[0] * 0.9, n + extra))
    else:
        witness = _sample_inside(rng, lo, hi)
        distractors = rng.uniform(0.002, 0.998, extra)
        keep = [
            x for x in distractors
            if np.abs(witness - x).min() > 1e-5
        ]
        interior = np.sort(np.concatenate([witness, keep]))
        tight = np.diff(interior) <= 1e-6
        if np.any(tight):  # drop distractors that crowd a witness knot
            interior = np.delete(interior, np.nonzero(tight)[0] + 1)
    domain = np.concatenate([[0.0], interior, [1.0]])
    nhat = domain.size - 2
    condition, _witness = check_conjecture2(parity, domain, degree)
    agrees = None
    if n <= EXHAUSTIVE_LIMIT_N:
        agrees = condition == exhaustive_witness_exists(parity, domain, degree)
    smin, smax, rank, full = _measure(parity, domain, degree, nhat, cfg.rank_tol)
    return TrialRecord(degree, index, n, nhat, condition, smin, smax, rank, full, agrees)


def _run(cfg, trial_fn, threads=1):
    jobs = [(degree, i) for degree in cfg.degrees for i in range(cfg.trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda di: trial_fn(cfg, *di), jobs))
    else:
        records = [trial_fn(cfg, degree, i) for degree, i in jobs]
    return TrialReport(cfg, records)


def run_conjecture1_trials(cfg, threads=1):
    """Square systems with knots sampled against the invertibility condition."""
    if cfg.conjecture != 1:
        cfg = TrialConfig(**{**cfg.__dict__, "conjecture": 1})
    return _run(cfg, _conjecture1_trial, threads)


def run_conjecture2_trials(cfg, threads=1):
    """Rectangular systems with oversized domain-knot sets; the greedy
    witness scan is cross-checked against exhaustive search for small n."""
    if cfg.conjecture != 2:
        cfg = TrialConfig(**{**cfg.__dict__, "conjecture": 2})
    return _run(cfg, _conjecture2_trial, threads)


def boundary_stress(cfg, epsilons):
    """Probe the sharpness of the strict inequalities.

    For each degree, one knot of an otherwise-anchored configuration is
    placed at absolute distance epsilon inside its lower bracket endpoint;
    epsilon = 0 puts it exactly on the endpoint.  Only measurements are
    reported, no pass/fail semantics.
    """
    eps = [float(e) for e in epsilons]
    if any(e < 0 for e in eps):
        raise InvalidInputError("epsilon ladder must be non-negative")
    records = []
    for degree in cfg.degrees:
        rng = _trial_rng(cfg.seed, degree, 0)
        n = int(max((cfg.n_range[0] + cfg.n_range[1]) // 2, degree + 1))
        params = _sample_parameters(rng, n, cfg.t_sampling)
        parity = _parity_params(params, degree)
        lo, hi = condition_brackets(parity, degree)
        mid = (lo + hi) / 2.0
        j = n // 2
        for k, e in enumerate(eps):
            interior = mid.copy()
            interior[j] = lo[j] + e
            domain = np.concatenate([[0.0], interior, [1.0]])
            if np.any(np.diff(domain) <= 0):
                continue  # epsilon pushed the knot past a neighbour
            condition = check_conjecture1(parity, domain, degree)
            smin, smax, rank, full = _measure(parity, domain, degree, n, cfg.rank_tol)
            records.append(
                TrialRecord(degree, k, n, n, condition, smin, smax, rank, full, None, e)
            )
    return TrialReport(cfg, records)
