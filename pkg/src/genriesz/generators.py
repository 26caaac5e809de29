"""Bregman generators, their links, inverse links, and convex conjugates.

A generator g is a strictly convex scalar function. Its derivative is used
as the link of a GLM-style representer model, its convex conjugate supplies
the dual objective, and the conjugate's derivative recovers the inverse
link. Generators whose domain is one-sided (|alpha| > C, or alpha in (0,1))
are handled through a per-row branch label s in {+1, -1}: all closed forms
are stored for the positive branch and extended by the sign convention

    g(a; s)     = g_plus(s * a)
    link(a; s)  = s * link_plus(s * a)
    inv(v; s)   = s * inv_plus(s * v)
    conj(v; s)  = conj_plus(s * v)

so a single monotone inverse per branch suffices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import expit, xlogy

from .core import (
    DomainError,
    FitWarning,
    InvalidArgumentError,
    InvalidGeneratorError,
)

__all__ = [
    "GeneratorSpec",
    "make_builtin",
    "numeric_generator",
    "bregman_divergence",
    "BUILTIN_KINDS",
]

BUILTIN_KINDS = ("squared", "ukl", "bkl", "bp", "pu")

# Evaluation points are kept this far inside an open boundary.
_MARGIN = 1e-8


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _check_branch(branch) -> np.ndarray:
    b = _as_float_array(branch)
    if not np.all((b == 1.0) | (b == -1.0)):
        raise InvalidArgumentError("branch labels must be +1 or -1")
    return b


@dataclass(frozen=True)
class GeneratorSpec:
    """A Bregman generator with link, inverse link, and convex conjugate.

    ``domain`` is the open interval of representer values on the positive
    branch; ``dual_domain`` is the open interval of link values there. The
    callables are vectorized and branch-aware (``branch`` may be a scalar
    or a per-row array of +1/-1 labels). Instances are immutable and all
    evaluation callables are pure.
    """

    kind: str
    C: float
    omega: float | None
    branch_fn: Callable[[np.ndarray], float] | None
    domain: tuple[float, float]
    dual_domain: tuple[float, float]
    _g: Callable = None
    _link: Callable = None
    _inv_link: Callable = None
    _conjugate: Callable = None

    # -- branch handling ---------------------------------------------------

    def branches(self, X: np.ndarray) -> np.ndarray:
        """Per-row branch labels for a design matrix (constant +1 if unset)."""
        X = _as_float_array(X)
        if self.branch_fn is None:
            return np.ones(X.shape[0])
        labels = np.array([float(self.branch_fn(row)) for row in X])
        return _check_branch(labels)

    def with_branch_fn(self, branch_fn) -> "GeneratorSpec":
        return replace(self, branch_fn=branch_fn)

    # -- domain checks -----------------------------------------------------

    def _require_alpha(self, a_plus, branch):
        lo, hi = self.domain
        bad = (a_plus <= lo) | (a_plus >= hi)
        if np.any(bad):
            val = np.atleast_1d(a_plus)[np.atleast_1d(bad)][0]
            raise DomainError(
                f"{self.kind}: representer value {val} outside open domain "
                f"({lo}, {hi}) on its branch"
            )

    def _require_dual(self, v_plus, branch):
        lo, hi = self.dual_domain
        bad = (v_plus <= lo) | (v_plus >= hi)
        if np.any(bad):
            val = np.atleast_1d(v_plus)[np.atleast_1d(bad)][0]
            raise DomainError(
                f"{self.kind}: link value {val} outside open range "
                f"({lo}, {hi}) on its branch"
            )

    # -- branch-aware evaluation --------------------------------------------

    def g(self, alpha, branch=1.0):
        b = _check_branch(branch)
        a_plus = b * _as_float_array(alpha)
        self._require_alpha(a_plus, b)
        return self._g(a_plus)

    def link(self, alpha, branch=1.0):
        b = _check_branch(branch)
        a_plus = b * _as_float_array(alpha)
        self._require_alpha(a_plus, b)
        return b * self._link(a_plus)

    def inv_link(self, v, branch=1.0):
        b = _check_branch(branch)
        v_plus = b * _as_float_array(v)
        self._require_dual(v_plus, b)
        return b * self._inv_link(v_plus)

    def conjugate(self, v, branch=1.0):
        b = _check_branch(branch)
        v_plus = b * _as_float_array(v)
        self._require_dual(v_plus, b)
        return self._conjugate(v_plus)

    # -- solver-facing helpers (no exceptions) -------------------------------

    def clamp_dual(self, u):
        """Clamp positive-branch link values into the dual domain.

        Returns the clamped array and the number of rows that moved. Used on
        evaluation rows, where the fitting barrier never acted.
        """
        u = _as_float_array(u)
        lo, hi = self.dual_domain
        uc = u
        if np.isfinite(lo):
            uc = np.maximum(uc, lo + _MARGIN)
        if np.isfinite(hi):
            uc = np.minimum(uc, hi - _MARGIN)
        return uc, int(np.count_nonzero(uc != u))

    def dual_terms(self, u):
        """Conjugate values and derivatives for the solver.

        ``u`` holds positive-branch link values (branch * f). Values outside
        the open dual domain yield +inf so a line search backtracks; within
        a margin of a finite boundary both value and derivative are taken at
        the margin point, where the conjugate's own log-barrier growth keeps
        gradients finite and inward-pointing.
        """
        u = _as_float_array(u)
        lo, hi = self.dual_domain
        infeasible = (u <= lo) | (u >= hi)
        uc, _ = self.clamp_dual(u)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = self._conjugate(uc)
            derivs = self._inv_link(uc)
        vals = np.where(infeasible, np.inf, vals)
        return vals, derivs


# ---------------------------------------------------------------------------
# Built-in generators (closed forms on the positive branch)
# ---------------------------------------------------------------------------


def _make_squared(C: float) -> dict:
    return dict(
        domain=(-math.inf, math.inf),
        dual_domain=(-math.inf, math.inf),
        _g=lambda a: (a - C) ** 2,
        _link=lambda a: 2.0 * (a - C),
        _inv_link=lambda v: C + 0.5 * v,
        _conjugate=lambda v: C * v + 0.25 * v**2,
    )


def _make_ukl(C: float) -> dict:
    return dict(
        domain=(C, math.inf),
        dual_domain=(-math.inf, math.inf),
        _g=lambda a: (a - C) * np.log(a - C) - a,
        _link=lambda a: np.log(a - C),
        _inv_link=lambda v: np.exp(v) + C,
        _conjugate=lambda v: C * v + np.exp(v) + C,
    )


def _make_bkl(C: float) -> dict:
    def g(a):
        return (a - C) * np.log(a - C) - (a + C) * np.log(a + C)

    def inv(v):
        e = np.exp(v)
        return C * (1.0 + e) / (1.0 - e)

    return dict(
        domain=(C, math.inf),
        dual_domain=(-math.inf, 0.0),
        _g=g,
        _link=lambda a: np.log(a - C) - np.log(a + C),
        _inv_link=inv,
        _conjugate=lambda v: inv(v) * v - g(inv(v)),
    )


def _make_bp(C: float, omega: float) -> dict:
    w = float(omega)

    def g(a):
        t = a - C
        return (t ** (1.0 + w) - t) / w - t

    def inv(v):
        return C + (1.0 + w * v / (1.0 + w)) ** (1.0 / w)

    return dict(
        domain=(C, math.inf),
        dual_domain=(-(1.0 + w) / w, math.inf),
        _g=g,
        _link=lambda a: ((1.0 + w) / w) * ((a - C) ** w - 1.0),
        _inv_link=inv,
        _conjugate=lambda v: inv(v) * v - g(inv(v)),
    )


def _make_pu(C: float) -> dict:
    def g(a):
        # xlogy keeps 0*log(0) = 0 when the inverse link saturates.
        return C * (xlogy(a, a) + xlogy(1.0 - a, 1.0 - a))

    def inv(v):
        return expit(v / C)

    return dict(
        domain=(0.0, 1.0),
        dual_domain=(-math.inf, math.inf),
        _g=g,
        _link=lambda a: C * (np.log(a) - np.log(1.0 - a)),
        _inv_link=inv,
        _conjugate=lambda v: inv(v) * v - g(inv(v)),
    )


def make_builtin(
    kind: str,
    C: float = 0.0,
    omega: float | None = None,
    branch_fn: Callable[[np.ndarray], float] | None = None,
) -> GeneratorSpec:
    """Construct a built-in generator.

    kind      closed form on the positive branch (alpha > C unless noted)
    --------  ----------------------------------------------------------
    squared   g = (a - C)^2                     link 2(a - C)
    ukl       g = (a-C)log(a-C) - a             link log(a - C)
    bkl       g = (a-C)log(a-C) - (a+C)log(a+C) link log((a-C)/(a+C)) < 0
    bp        g = ((a-C)^(1+w) - (a-C))/w - (a-C), w > 0
    pu        g = C(a log a + (1-a)log(1-a)) on a in (0, 1)

    ``branch_fn`` maps a data row to +1 or -1 and extends one-sided domains
    to the negative branch; ``pu`` admits no sign extension.
    """
    C = float(C)
    if kind == "squared":
        if omega is not None:
            raise InvalidArgumentError("omega is only valid for the bp generator")
        parts = _make_squared(C)
    elif kind == "ukl":
        if C < 0.0:
            raise InvalidArgumentError(f"ukl requires C >= 0, got {C}")
        if omega is not None:
            raise InvalidArgumentError("omega is only valid for the bp generator")
        parts = _make_ukl(C)
    elif kind == "bkl":
        if C <= 0.0:
            raise InvalidArgumentError(
                f"bkl requires C > 0 (the link degenerates at C = 0), got {C}"
            )
        if omega is not None:
            raise InvalidArgumentError("omega is only valid for the bp generator")
        parts = _make_bkl(C)
    elif kind == "bp":
        if C < 0.0:
            raise InvalidArgumentError(f"bp requires C >= 0, got {C}")
        if omega is None or omega <= 0.0:
            raise InvalidArgumentError(f"bp requires omega > 0, got {omega}")
        parts = _make_bp(C, omega)
    elif kind == "pu":
        if C <= 0.0:
            raise InvalidArgumentError(f"pu requires C > 0, got {C}")
        if omega is not None:
            raise InvalidArgumentError("omega is only valid for the bp generator")
        if branch_fn is not None:
            raise InvalidArgumentError(
                "pu admits no sign extension; leave branch_fn unset"
            )
        parts = _make_pu(C)
    else:
        raise InvalidArgumentError(
            f"unknown generator kind {kind!r}; expected one of {BUILTIN_KINDS}"
        )
    return GeneratorSpec(
        kind=kind,
        C=C,
        omega=float(omega) if omega is not None else None,
        branch_fn=branch_fn,
        **parts,
    )


def bregman_divergence(gen: GeneratorSpec, a0, a, branch=1.0):
    """Pointwise divergence g(a0) - g(a) - g'(a) (a0 - a), on one branch.

    Nonnegative everywhere and zero only at a0 == a by strict convexity.
    """
    a0 = _as_float_array(a0)
    a = _as_float_array(a)
    return gen.g(a0, branch) - gen.g(a, branch) - gen.link(a, branch) * (a0 - a)


# ---------------------------------------------------------------------------
# Numeric fallback for user-defined generators
# ---------------------------------------------------------------------------


def _interior_point(lo: float, hi: float) -> float:
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi - 1.0
    if math.isinf(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


def _central_diff(g_fn, a: float, lo: float, hi: float) -> float:
    h = max(1e-6, 1e-6 * abs(a))
    # Shrink the step near a boundary so both probes stay inside the domain.
    gap = min(a - lo, hi - a)
    if math.isfinite(gap):
        h = min(h, 0.5 * gap)
    return (g_fn(a + h) - g_fn(a - h)) / (2.0 * h)


def _numeric_inverse(g_fn, lo, hi, v, max_iter=200, clamp=False):
    """Solve link(a) = v by expanding a bracket and bisecting.

    The link is the central-difference derivative of ``g_fn``; it is
    increasing on the domain for convex ``g_fn``. With ``clamp`` the
    nearest probed point is returned instead of raising when ``v`` lies
    outside the link's range.
    """
    link = lambda a: _central_diff(g_fn, a, lo, hi)
    m = _interior_point(lo, hi)

    def probe_down(k):
        return m - 2.0**k if math.isinf(lo) else lo + (m - lo) / 2.0**k

    def probe_up(k):
        return m + 2.0**k if math.isinf(hi) else hi - (hi - m) / 2.0**k

    a_lo, a_hi = m, m
    f_lo = f_hi = link(m)
    for k in range(128):
        if f_lo <= v:
            break
        a_lo = probe_down(k)
        f_lo = link(a_lo)
    else:
        if clamp:
            return a_lo
        raise DomainError(
            f"link value {v} below the attainable range on ({lo}, {hi}); "
            f"no root bracketed"
        )
    for k in range(128):
        if f_hi >= v:
            break
        a_hi = probe_up(k)
        f_hi = link(a_hi)
    else:
        if clamp:
            return a_hi
        raise DomainError(
            f"link value {v} above the attainable range on ({lo}, {hi}); "
            f"no root bracketed"
        )
    for _ in range(max_iter):
        if a_hi - a_lo <= 1e-10:
            break
        mid = 0.5 * (a_lo + a_hi)
        if not (a_lo < mid < a_hi):
            break
        if link(mid) < v:
            a_lo = mid
        else:
            a_hi = mid
    return 0.5 * (a_lo + a_hi)


def _domain_grid(lo: float, hi: float, num: int = 41) -> np.ndarray:
    m = _interior_point(lo, hi)
    offsets = np.concatenate([-np.geomspace(1e-3, 1e3, num // 2)[::-1],
                              [0.0],
                              np.geomspace(1e-3, 1e3, num // 2)])
    pts = m + offsets
    span = hi - lo
    if math.isfinite(lo):
        pts = np.maximum(pts, lo + (1e-6 * span if math.isfinite(span) else 1e-6))
    if math.isfinite(hi):
        pts = np.minimum(pts, hi - (1e-6 * span if math.isfinite(span) else 1e-6))
    return np.unique(pts)


def numeric_generator(
    g_fn: Callable[[float], float],
    domain: tuple[float, float],
    branch_fn: Callable[[np.ndarray], float] | None = None,
) -> GeneratorSpec:
    """Build a GeneratorSpec from a bare convex scalar function.

    The link is approximated by central differences with step
    max(1e-6, 1e-6 |a|), its inverse by bracketed bisection to 1e-10 in the
    representer value, and the conjugate through the identity
    g*(v) = a*(v) v - g(a*(v)). Convexity is the caller's contract; a grid
    spot-check warns when it looks violated, and a non-monotone link raises.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise InvalidArgumentError(f"domain must be a nonempty open interval, got {domain}")

    grid = _domain_grid(lo, hi)
    gvals = np.array([g_fn(a) for a in grid])
    if not np.all(np.isfinite(gvals)):
        raise InvalidArgumentError("g_fn must be finite on its domain")
    second = np.diff(gvals, 2)
    if np.any(second < -1e-8 * max(1.0, np.max(np.abs(gvals)))):
        warnings.warn(
            "numeric generator: grid spot-check suggests g_fn is not convex",
            FitWarning,
        )
    link_vals = np.array([_central_diff(g_fn, a, lo, hi) for a in grid])
    if np.any(np.diff(link_vals) <= 0.0):
        raise InvalidGeneratorError(
            "numeric generator: derivative of g_fn is not strictly increasing"
        )

    # Estimated link range, probed just inside the domain; used for clamping.
    near = 1e-9
    p_lo = lo + near * max(1.0, abs(lo)) if math.isfinite(lo) else min(grid[0], -1e9)
    p_hi = hi - near * max(1.0, abs(hi)) if math.isfinite(hi) else max(grid[-1], 1e9)
    dual_lo = float(_central_diff(g_fn, p_lo, lo, hi))
    dual_hi = float(_central_diff(g_fn, p_hi, lo, hi))

    def g_vec(a):
        a = np.atleast_1d(_as_float_array(a))
        out = np.array([g_fn(float(x)) for x in a])
        return out if out.size > 1 else float(out[0])

    def link_vec(a):
        a = np.atleast_1d(_as_float_array(a))
        out = np.array([_central_diff(g_fn, float(x), lo, hi) for x in a])
        return out if out.size > 1 else float(out[0])

    def inv_vec(v):
        v = np.atleast_1d(_as_float_array(v))
        out = np.array([_numeric_inverse(g_fn, lo, hi, float(x)) for x in v])
        return out if out.size > 1 else float(out[0])

    def conj_vec(v):
        v = np.atleast_1d(_as_float_array(v))
        astar = np.array([_numeric_inverse(g_fn, lo, hi, float(x), clamp=True) for x in v])
        out = astar * v - np.array([g_fn(float(a)) for a in astar])
        return out if out.size > 1 else float(out[0])

    return GeneratorSpec(
        kind="custom",
        C=0.0,
        omega=None,
        branch_fn=branch_fn,
        domain=(lo, hi),
        dual_domain=(dual_lo, dual_hi),
        _g=g_vec,
        _link=link_vec,
        _inv_link=inv_vec,
        _conjugate=conj_vec,
    )
