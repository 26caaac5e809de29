"""Shared data model: samples, fold plans, penalties, and estimate summaries.

Every other module speaks this vocabulary. All types here are immutable
after construction and safe to share read-only across concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

__all__ = [
    "Dataset",
    "FoldPlan",
    "PenaltySpec",
    "EstimateSummary",
    "SplitMix64",
    "make_fold_plan",
    "wald_summary",
    "Z_975",
    "InvalidArgumentError",
    "DomainError",
    "InvalidGeneratorError",
    "DegenerateRepresenterError",
    "NoSolutionError",
    "FitWarning",
]

# Two-sided 97.5% standard normal quantile, pinned for reproducible intervals.
Z_975 = 1.959963984540054


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DomainError(ValueError):
    """A value lies outside the open domain it must belong to."""


class InvalidGeneratorError(ValueError):
    """A user-supplied generator fails a structural requirement."""


class DegenerateRepresenterError(RuntimeError):
    """Fitted representer values cannot support the requested update."""


class NoSolutionError(RuntimeError):
    """A scalar root-finding step found no root in its bracket."""


class FitWarning(UserWarning):
    """Non-fatal numerical issue during fitting or prediction."""


_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Portable 64-bit PRNG (splitmix64).

    The generator is defined by its published constants, so identical seeds
    produce identical streams on every platform and Python version. It backs
    everything that must be bit-reproducible: fold shuffles, random Fourier
    draws, and replication seed chains.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise InvalidArgumentError("bound must be positive")
        threshold = ((1 << 64) // bound) * bound
        while True:
            r = self.next_uint64()
            if r < threshold:
                return r % bound

    def uniform(self, size: int | None = None):
        """Uniform double(s) in the open interval (0, 1)."""
        if size is None:
            return ((self.next_uint64() >> 11) + 0.5) * 2.0**-53
        return np.array(
            [((self.next_uint64() >> 11) + 0.5) * 2.0**-53 for _ in range(size)]
        )

    def normal(self, size: int):
        """Standard normal draws via the inverse CDF of uniforms."""
        return ndtri(self.uniform(size))

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class Dataset:
    """A sample of regressors ``X`` (n x d) and outcomes ``Y`` (length n).

    ``treat_col`` optionally marks the column of ``X`` holding a binary
    treatment indicator; that column must then be exactly 0.0 or 1.0.
    """

    X: np.ndarray
    Y: np.ndarray
    treat_col: int | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2:
            raise InvalidArgumentError("X must be a 2-D matrix")
        if Y.ndim != 1:
            raise InvalidArgumentError("Y must be a 1-D vector")
        n, d = X.shape
        if n < 2 or d < 1:
            raise InvalidArgumentError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
        if len(Y) != n:
            raise InvalidArgumentError(f"X has {n} rows but Y has {len(Y)} entries")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("X contains non-finite values")
        if not np.all(np.isfinite(Y)):
            raise InvalidArgumentError("Y contains non-finite values")
        if self.treat_col is not None:
            tc = int(self.treat_col)
            if not 0 <= tc < d:
                raise InvalidArgumentError(f"treat_col {tc} out of range for d={d}")
            D = X[:, tc]
            bad = np.flatnonzero((D != 0.0) & (D != 1.0))
            if bad.size:
                raise InvalidArgumentError(
                    f"treatment column must be exactly 0.0 or 1.0; "
                    f"row {bad[0]} has {D[bad[0]]!r}"
                )
            object.__setattr__(self, "treat_col", tc)
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def treatment(self) -> np.ndarray:
        """The binary treatment column D."""
        if self.treat_col is None:
            raise InvalidArgumentError("dataset has no treatment column")
        return self.X[:, self.treat_col]

    @property
    def covariates(self) -> np.ndarray:
        """X with the treatment column removed (Z), or X itself if unset."""
        if self.treat_col is None:
            return self.X
        return np.delete(self.X, self.treat_col, axis=1)

    def subset(self, idx: np.ndarray) -> "Dataset":
        """Row subset as a new Dataset (the subset must still have n >= 2)."""
        return Dataset(self.X[idx], self.Y[idx], treat_col=self.treat_col)


@dataclass(frozen=True)
class FoldPlan:
    """Cross-fitting fold assignments: values in {0, ..., K-1}, one per row."""

    assignments: np.ndarray
    K: int
    seed: int

    def eval_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == k)

    def train_indices(self, k: int) -> np.ndarray:
        """Complement of fold k; equals the full index set when K == 1."""
        if self.K == 1:
            return np.arange(len(self.assignments))
        return np.flatnonzero(self.assignments != k)


def make_fold_plan(n: int, K: int, seed: int) -> FoldPlan:
    """Deterministic balanced fold assignment.

    Indices are shuffled with a Fisher-Yates pass driven by splitmix64 and
    split round-robin, so fold sizes differ by at most one and identical
    (n, K, seed) yield identical assignments on every platform.
    """
    n = int(n)
    K = int(K)
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    if K < 1 or K > n:
        raise InvalidArgumentError(f"need 1 <= K <= n, got K={K}, n={n}")
    order = list(range(n))
    SplitMix64(seed).shuffle(order)
    assignments = np.empty(n, dtype=np.int64)
    for pos, idx in enumerate(order):
        assignments[idx] = pos % K
    assignments.setflags(write=False)
    return FoldPlan(assignments=assignments, K=K, seed=int(seed))


@dataclass(frozen=True)
class PenaltySpec:
    """An l_q coefficient penalty: value (1/q) * sum_j |b_j|^q, scaled by lam.

    ``smoothing_mu`` controls the pseudo-Huber smoothing used when q == 1.
    """

    p_norm: float = 2.0
    lam: float = 0.0
    smoothing_mu: float = 1e-6

    def __post_init__(self):
        if self.p_norm < 1.0:
            raise InvalidArgumentError(f"p_norm must be >= 1, got {self.p_norm}")
        if self.lam < 0.0:
            raise InvalidArgumentError(f"lam must be >= 0, got {self.lam}")
        if self.smoothing_mu <= 0.0:
            raise InvalidArgumentError(
                f"smoothing_mu must be > 0, got {self.smoothing_mu}"
            )


@dataclass(frozen=True)
class EstimateSummary:
    """Point estimate with Wald inference and the scores that produced it."""

    estimator_name: str
    theta: float
    se: float
    ci_lower: float
    ci_upper: float
    p_value: float
    scores: np.ndarray
    degenerate: bool = False
    nonorthogonal_se: bool = False


def _std_normal_sf(x: float) -> float:
    # 1 - Phi(x), evaluated stably through erfc.
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def wald_summary(
    name: str,
    theta: float,
    scores: np.ndarray,
    ci_level: float = 0.95,
    nonorthogonal_se: bool = False,
) -> EstimateSummary:
    """Wald summary from empirical score variance.

    The scores are stored as passed and centered internally; the standard
    error uses the n-1 sample variance. A zero score variance is flagged
    degenerate, with p-value 0 for theta != 0 and 1 otherwise.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or len(scores) < 2:
        raise InvalidArgumentError("scores must be a 1-D vector with n >= 2")
    if not (0.0 < ci_level < 1.0):
        raise InvalidArgumentError(f"ci_level must be in (0, 1), got {ci_level}")
    theta = float(theta)
    n = len(scores)
    centered = scores - scores.mean()
    se = float(centered.std(ddof=1) / math.sqrt(n))
    z = Z_975 if ci_level == 0.95 else float(-ndtri((1.0 - ci_level) / 2.0))
    if se > 0.0:
        p_value = 2.0 * _std_normal_sf(abs(theta / se))
        degenerate = False
    else:
        p_value = 0.0 if theta != 0.0 else 1.0
        degenerate = True
    return EstimateSummary(
        estimator_name=str(name),
        theta=theta,
        se=se,
        ci_lower=theta - z * se,
        ci_upper=theta + z * se,
        p_value=p_value,
        scores=scores,
        degenerate=degenerate,
        nonorthogonal_se=bool(nonorthogonal_se),
    )
