"""Budgeted subset selectors.

select_greedy re-orthogonalizes every remaining row against the growing
basis at each step (exact greedy maximization of the representativeness
objective); select_divbs keeps the rows fixed and instead deflates the
running batch-sum vector, which is the fast approximation.  The remaining
selectors are baselines.  All selectors are deterministic: ties in any
argmax go to the lowest row index, and stochastic strategies are driven
entirely by the config seed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolationError
from .linalg import DEFAULT_EPS, FeatureMatrix, OrthonormalBasis
from .objective import ObjectiveValue, representativeness

PAD_NONE = "none"
PAD_UNIFORM = "uniform-random"


@dataclass
class SelectionConfig:
    budget: int
    eps: float = DEFAULT_EPS
    tie_break: str = "lowest-index"
    pad_policy: str = PAD_UNIFORM
    seed: int = 0
    normalize_features: bool = False

    def __post_init__(self):
        if self.budget < 1:
            raise ContractViolationError(f"budget must be >= 1, got {self.budget}")
        if self.tie_break != "lowest-index":
            raise ContractViolationError(f"unsupported tie_break rule {self.tie_break!r}")
        if self.pad_policy not in (PAD_NONE, PAD_UNIFORM):
            raise ContractViolationError(f"unknown pad_policy {self.pad_policy!r}")


@dataclass
class SelectionResult:
    indices: list[int]
    padded: list[bool]
    objective: ObjectiveValue
    step_scores: list[float]
    wall_time: float


def _check_budget(features: FeatureMatrix, cfg: SelectionConfig):
    if cfg.budget > features.n_rows:
        raise ContractViolationError(
            f"budget {cfg.budget} exceeds the {features.n_rows} available rows"
        )


def _prepared_values(features: FeatureMatrix, cfg: SelectionConfig) -> np.ndarray:
    X = features.values
    if not cfg.normalize_features:
        return X
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        row = int(np.argmin(norms))
        raise ContractViolationError(f"cannot normalize zero feature row {row}")
    return X / norms[:, None]


def _finish(features, cfg, X, indices, scores, t0) -> SelectionResult:
    obj = representativeness(FeatureMatrix(X), indices, cfg.eps) if X is not None else (
        representativeness(features, indices, cfg.eps)
    )
    result = SelectionResult(
        indices=list(indices),
        padded=[False] * len(indices),
        objective=obj,
        step_scores=[float(s) for s in scores],
        wall_time=time.perf_counter() - t0,
    )
    return pad_selection(result, features, cfg)


def select_greedy(features: FeatureMatrix, cfg: SelectionConfig) -> SelectionResult:
    """Exact greedy selection.

    The score of every remaining row is |unit residual . Sum| with Sum the
    fixed full-batch feature sum; rows whose residual against the selected
    span falls below the dependence threshold leave the candidate pool.
    """
    _check_budget(features, cfg)
    t0 = time.perf_counter()
    X = _prepared_values(features, cfg)
    n, _ = X.shape
    total = X.sum(axis=0)
    R = X.copy()
    orig_norms = np.linalg.norm(X, axis=1)
    thresholds = cfg.eps * np.maximum(1.0, orig_norms)
    alive = np.ones(n, dtype=bool)
    indices: list[int] = []
    scores: list[float] = []
    while len(indices) < cfg.budget:
        res_norms = np.linalg.norm(R, axis=1)
        alive &= res_norms > thresholds
        if not alive.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.abs(R @ total) / res_norms
        s[~alive] = -np.inf
        idx = int(np.argmax(s))
        e = R[idx] / res_norms[idx]
        indices.append(idx)
        scores.append(float(s[idx]))
        alive[idx] = False
        R -= np.outer(R @ e, e)
    return _finish(features, cfg, X, indices, scores, t0)


def select_divbs(features: FeatureMatrix, cfg: SelectionConfig) -> SelectionResult:
    """Fast approximate selection.

    Scores rows by |g . Sum| against a running Sum vector that is deflated
    by the component along each newly selected direction; stops early when
    Sum is driven to (numerical) zero.  Rows dependent on the selected span
    are excluded from candidacy and the argmax re-evaluated.
    """
    _check_budget(features, cfg)
    t0 = time.perf_counter()
    X = _prepared_values(features, cfg)
    n, d = X.shape
    total = X.sum(axis=0)
    running = total.copy()
    sum_floor = cfg.eps * max(1.0, float(np.linalg.norm(total)))
    orig_norms = np.linalg.norm(X, axis=1)
    basis = OrthonormalBasis(d, cfg.eps)
    alive = np.ones(n, dtype=bool)
    indices: list[int] = []
    scores: list[float] = []
    while len(indices) < cfg.budget and float(np.linalg.norm(running)) > sum_floor:
        s = np.abs(X @ running)
        s[~alive] = -np.inf
        picked = None
        while alive.any():
            idx = int(np.argmax(s))
            res = basis.residual(X[idx])
            norm = float(np.linalg.norm(res))
            if norm <= cfg.eps * max(1.0, float(orig_norms[idx])):
                alive[idx] = False
                s[idx] = -np.inf
                continue
            picked = (idx, res / norm)
            break
        if picked is None:
            break
        idx, e = picked
        indices.append(idx)
        scores.append(float(s[idx]))
        alive[idx] = False
        basis._append(e)
        running -= np.dot(e, running) * e
        # scrub drift against the whole basis (a no-op in exact arithmetic)
        running -= basis.vectors.T @ (basis.vectors @ running)
    return _finish(features, cfg, X, indices, scores, t0)


def select_uniform(features: FeatureMatrix, cfg: SelectionConfig) -> SelectionResult:
    """Seeded uniform sample of budget rows without replacement."""
    _check_budget(features, cfg)
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    indices = rng.choice(features.n_rows, size=cfg.budget, replace=False).tolist()
    return _finish(features, cfg, None, indices, [], t0)


def select_top_score(
    features: FeatureMatrix, scores, cfg: SelectionConfig
) -> SelectionResult:
    """Budget rows with the largest externally supplied scores.

    Pass scores=None for the gradient-norm convenience mode, which scores
    each row by its Euclidean norm.
    """
    _check_budget(features, cfg)
    t0 = time.perf_counter()
    if scores is None:
        scores = np.linalg.norm(features.values, axis=1)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (features.n_rows,):
        raise ContractViolationError(
            f"scores length {scores.shape} does not match {features.n_rows} rows"
        )
    order = np.lexsort((np.arange(features.n_rows), -scores))
    indices = order[: cfg.budget].tolist()
    step_scores = [float(scores[i]) for i in indices]
    return _finish(features, cfg, None, indices, step_scores, t0)


def select_kmeanspp(features: FeatureMatrix, cfg: SelectionConfig) -> SelectionResult:
    """k-means++ seeding as a selector.

    First row uniform; each next row sampled proportionally to its squared
    Euclidean distance to the nearest already-selected row.  When every
    remaining distance is zero (duplicate-only batches) the draw falls back
    to uniform among the unselected rows.
    """
    _check_budget(features, cfg)
    t0 = time.perf_counter()
    X = features.values
    n = features.n_rows
    rng = np.random.default_rng(cfg.seed)
    first = int(rng.integers(n))
    indices = [first]
    chosen = np.zeros(n, dtype=bool)
    chosen[first] = True
    d2 = np.sum((X - X[first]) ** 2, axis=1)
    while len(indices) < cfg.budget:
        d2[chosen] = 0.0
        total = float(d2.sum())
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            remaining = np.flatnonzero(~chosen)
            idx = int(remaining[rng.integers(remaining.size)])
        indices.append(idx)
        chosen[idx] = True
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return _finish(features, cfg, None, indices, [], t0)


def pad_selection(
    result: SelectionResult, features: FeatureMatrix, cfg: SelectionConfig
) -> SelectionResult:
    """Fill an undershooting selection to the budget with seeded uniform draws."""
    if len(set(result.indices)) != len(result.indices):
        raise ContractViolationError("selection contains duplicate indices")
    missing = cfg.budget - len(result.indices)
    if cfg.pad_policy != PAD_UNIFORM or missing <= 0:
        return result
    pool = np.setdiff1d(np.arange(features.n_rows), np.asarray(result.indices, dtype=int))
    # independent stream so padding never perturbs the selector's own draws
    rng = np.random.default_rng([cfg.seed, 0x9AD])
    extra = rng.choice(pool, size=missing, replace=False).tolist()
    return replace(
        result,
        indices=result.indices + [int(i) for i in extra],
        padded=result.padded + [True] * missing,
    )


STRATEGIES = {
    "uniform": select_uniform,
    "greedy": select_greedy,
    "divbs": select_divbs,
    "kmeanspp": select_kmeanspp,
}
