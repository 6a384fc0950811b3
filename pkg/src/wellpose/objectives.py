"""Objectives on finite metric spaces and their eps-argmin geometry.

An :class:`ObjectiveFunction` is a proper extended-real function given by
a value table; +inf marks points outside the effective domain (the float
``inf`` is the explicit marker; large sentinel values are never used).
The central objects are the sublevel sets

    argmin_set(f, eps) = { x : f(x) <= inf f + eps }

whose diameters as a function of eps form the well-posedness modulus:
the minimum is strong exactly when that modulus tends to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import PreconditionError
from .spaces import FiniteMetricSpace, PointSubset, diam

__all__ = [
    "ObjectiveFunction",
    "ModulusCurve",
    "StrongMinCertificate",
    "ContEpsReport",
    "inf_value",
    "argmin_set",
    "wellposedness_modulus",
    "regularize",
    "check_cont_eps_lemma",
    "sup_norm",
]


def _as_values(obj, space: FiniteMetricSpace) -> np.ndarray:
    """Accept an ObjectiveFunction-like (has .values/.space) or an array."""
    values = getattr(obj, "values", None)
    if values is not None:
        other_space = getattr(obj, "space", None)
        if other_space is not None and other_space is not space:
            raise ValueError("operands live on different spaces")
        return values
    values = np.asarray(obj, dtype=np.float64)
    if values.shape != (space.n,):
        raise ValueError("value table does not match the space")
    return values


@dataclass(frozen=True, eq=False)
class ObjectiveFunction:
    """Proper extended-real function on a finite metric space.

    Values may be +inf (effective-domain marker) but never -inf or NaN,
    and at least one value is finite.
    """

    space: FiniteMetricSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.space.n,):
            raise ValueError("value table does not match the space")
        if np.any(np.isnan(values)) or np.any(values == -np.inf):
            raise ValueError("values must avoid NaN and -inf")
        if not np.any(np.isfinite(values)):
            raise ValueError("objective must be proper (some finite value)")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __add__(self, other) -> "ObjectiveFunction":
        # +inf + finite = +inf, so perturbing never leaves the domain
        return ObjectiveFunction(self.space, self.values + _as_values(other, self.space))

    def __sub__(self, other) -> "ObjectiveFunction":
        return ObjectiveFunction(self.space, self.values - _as_values(other, self.space))


def sup_norm(values: np.ndarray) -> float:
    return float(np.max(np.abs(values)))


def inf_value(f: ObjectiveFunction) -> float:
    """Exact minimum of the value table (finite by properness)."""
    return float(np.min(f.values))


def argmin_set(f: ObjectiveFunction, eps: float) -> PointSubset:
    """Sublevel set {x : f(x) <= inf f + eps}, exact index subset.

    eps = 0 gives the exact argmin set; negative eps is a domain error.
    """
    if not (eps >= 0.0):
        raise ValueError("eps must be nonnegative")
    bound = inf_value(f) + eps
    return PointSubset(f.space, frozenset(np.flatnonzero(f.values <= bound).tolist()))


@dataclass(frozen=True)
class ModulusCurve:
    """diam(argmin_set(f, eps)) sampled over an increasing eps grid."""

    eps_grid: tuple[float, ...]
    diam_values: tuple[float, ...]

    def __post_init__(self):
        if len(self.eps_grid) != len(self.diam_values) or not self.eps_grid:
            raise ValueError("grid and values must align and be non-empty")
        eps = np.asarray(self.eps_grid)
        if np.any(eps <= 0.0) or np.any(np.diff(eps) <= 0.0):
            raise ValueError("eps grid must be positive and strictly increasing")
        if np.any(np.diff(self.diam_values) < 0.0):
            raise ValueError("modulus must be non-decreasing in eps")

    def to_csv(self, header: str = "eps,diam") -> str:
        """CSV text with shortest round-trip float formatting."""
        lines = [header]
        for e, d in zip(self.eps_grid, self.diam_values):
            lines.append(f"{float(e)!r},{float(d)!r}")
        return "\n".join(lines) + "\n"


def wellposedness_modulus(f: ObjectiveFunction, eps_grid) -> ModulusCurve:
    """Modulus curve eps -> diam(argmin_set(f, eps)) over a grid."""
    eps_grid = tuple(float(e) for e in eps_grid)
    diams = tuple(diam(argmin_set(f, e)) for e in eps_grid)
    return ModulusCurve(eps_grid, diams)


@dataclass(frozen=True)
class StrongMinCertificate:
    """Exact minimizer together with its decay-of-diameter evidence."""

    minimizer: int
    modulus: ModulusCurve
    thresholds: Mapping[float, float]

    @classmethod
    def build(cls, f: ObjectiveFunction, delta_grid) -> "StrongMinCertificate":
        minimizer = int(np.argmin(f.values))
        curve = wellposedness_modulus(f, sorted(float(d) for d in delta_grid))
        thresholds = dict(zip(curve.eps_grid, curve.diam_values))
        if f.values[minimizer] != inf_value(f):  # pragma: no cover - by construction
            raise ValueError("minimizer must attain the exact minimum")
        return cls(minimizer, curve, thresholds)


def regularize(f: ObjectiveFunction, eps: float) -> ObjectiveFunction:
    """Ball infimum (f)_eps(x) = inf { f(y) : d(y, x) <= eps }.

    eps = 0 returns f unchanged; the result never exceeds f pointwise.
    """
    if not (eps >= 0.0):
        raise ValueError("eps must be nonnegative")
    if eps == 0.0:
        return f
    out = np.empty(f.space.n, dtype=np.float64)
    chunk = 512
    for lo in range(0, f.space.n, chunk):
        idx = np.arange(lo, min(lo + chunk, f.space.n))
        block = f.space.block(idx)
        masked = np.where(block <= eps, f.values[None, :], np.inf)
        out[idx] = masked.min(axis=1)
    return ObjectiveFunction(f.space, out)


@dataclass(frozen=True, eq=False)
class ContEpsReport:
    """Replayable record of one sup-norm stability check.

    holds asserts argmin_set(f + g, eps/3) ⊆ argmin_set(f, eps); under the
    precondition sup|g| < eps/3 this is a theorem, so holds=False flags an
    implementation bug, not a mathematical counterexample.
    """

    eps: float
    holds: bool
    omega_perturbed: PointSubset
    omega_base: PointSubset


def check_cont_eps_lemma(f: ObjectiveFunction, g, eps: float) -> ContEpsReport:
    """Check the eps/3 sublevel-set stability statement for f under g.

    Precondition (strict): sup|g| < eps/3.  A violated precondition
    raises PreconditionError, since outside it the inclusion may genuinely
    fail and must not be reported as a refutation.  The strictness
    margin should dominate float rounding (generators keep it large).
    """
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    gvals = _as_values(g, f.space)
    if not np.all(np.isfinite(gvals)):
        raise ValueError("perturbation must be bounded (finite values)")
    third = eps / 3.0
    if not (sup_norm(gvals) < third):
        raise PreconditionError("need sup|g| < eps/3 strictly")
    omega_pert = argmin_set(f + gvals, third)
    omega_base = argmin_set(f, eps)
    return ContEpsReport(
        eps=eps,
        holds=omega_pert.members <= omega_base.members,
        omega_perturbed=omega_pert,
        omega_base=omega_base,
    )
