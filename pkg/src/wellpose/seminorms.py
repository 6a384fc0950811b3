"""Seminorm expression trees on R^d with vectorized evaluation.

Nodes: absolute linear functionals, max/sum combinations, non-negative
scaling, the euclidean norm, and the line quotient

    q(x) = min_t base(x - t * direction),

the seminorm that flattens base along one direction.  The minimum is
convex in t and is bracketed analytically, then resolved by golden
section; reported values are minima over sampled points, so they never
undershoot the true quotient and never exceed base(x).

Every node also carries a magnitude majorant (an upper bound on the
absolute values flowing through its evaluation) used to scale rounding
tolerances in exactness tests.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SeminormExpr",
    "AbsLinear",
    "MaxOf",
    "SumOf",
    "Scale",
    "Euclidean",
    "LineQuotient",
    "linf_norm",
    "l1_norm",
    "euclidean_norm",
    "seminorm_to_json",
    "seminorm_from_json",
]

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - np.sqrt(5.0)) / 2.0
_GOLDEN_ITERS = 72  # bracket width shrinks below 1e-15 of its start


def _as_points(X, dim: int) -> np.ndarray:
    pts = np.asarray(X, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"expected points of shape (m, {dim}), got {pts.shape}")
    return pts


class SeminormExpr:
    """Base class; subclasses implement eval_many and magnitude_many."""

    dim: int

    def eval_many(self, X) -> np.ndarray:
        raise NotImplementedError

    def magnitude_many(self, X) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> float:
        pts = np.asarray(x, dtype=np.float64).reshape(1, -1)
        return float(self.eval_many(pts)[0])

    def __add__(self, other):
        if isinstance(other, SeminormExpr):
            return SumOf((self, other))
        return NotImplemented


class AbsLinear(SeminormExpr):
    """x -> |a . x|"""

    def __init__(self, coef):
        coef = np.asarray(coef, dtype=np.float64)
        if coef.ndim != 1 or coef.size == 0 or not np.all(np.isfinite(coef)):
            raise ValueError("coef must be a non-empty finite vector")
        coef = coef.copy()
        coef.flags.writeable = False
        self.coef = coef
        self.dim = coef.size

    def eval_many(self, X):
        return np.abs(_as_points(X, self.dim) @ self.coef)

    def magnitude_many(self, X):
        return np.abs(_as_points(X, self.dim)) @ np.abs(self.coef)


class Euclidean(SeminormExpr):
    """x -> ||x||_2"""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)

    def eval_many(self, X):
        return np.linalg.norm(_as_points(X, self.dim), axis=1)

    def magnitude_many(self, X):
        return self.eval_many(X)


def _combine(children) -> tuple[tuple, int]:
    kids = tuple(children)
    if not kids:
        raise ValueError("need at least one child")
    dim = kids[0].dim
    for k in kids:
        if not isinstance(k, SeminormExpr):
            raise ValueError("children must be seminorm expressions")
        if k.dim != dim:
            raise ValueError("children must share a dimension")
    return kids, dim


class MaxOf(SeminormExpr):
    """Pointwise maximum of children."""

    def __init__(self, children):
        self.children, self.dim = _combine(children)

    def eval_many(self, X):
        return np.max([c.eval_many(X) for c in self.children], axis=0)

    def magnitude_many(self, X):
        return np.max([c.magnitude_many(X) for c in self.children], axis=0)


class SumOf(SeminormExpr):
    """Pointwise sum of children."""

    def __init__(self, children):
        self.children, self.dim = _combine(children)

    def eval_many(self, X):
        return np.sum([c.eval_many(X) for c in self.children], axis=0)

    def magnitude_many(self, X):
        return np.sum([c.magnitude_many(X) for c in self.children], axis=0)


class Scale(SeminormExpr):
    """Non-negative multiple of a child."""

    def __init__(self, factor: float, child: SeminormExpr):
        factor = float(factor)
        if not (factor >= 0.0 and np.isfinite(factor)):
            raise ValueError("factor must be finite and >= 0")
        self.factor = factor
        self.child = child
        self.dim = child.dim

    def eval_many(self, X):
        return self.factor * self.child.eval_many(X)

    def magnitude_many(self, X):
        return self.factor * self.child.magnitude_many(X)


class LineQuotient(SeminormExpr):
    """x -> min_t base(x - t * direction); base(direction) must be > 0."""

    def __init__(self, base: SeminormExpr, direction):
        direction = np.asarray(direction, dtype=np.float64)
        if direction.shape != (base.dim,) or not np.all(np.isfinite(direction)):
            raise ValueError(f"direction must be a finite vector of length {base.dim}")
        bd = float(base.eval_many(direction.reshape(1, -1))[0])
        if not (bd > 0.0):
            raise ValueError("base must be positive on the direction")
        direction = direction.copy()
        direction.flags.writeable = False
        self.base = base
        self.direction = direction
        self.dir_value = bd
        self.dim = base.dim

    def eval_many(self, X):
        pts = _as_points(X, self.dim)
        at_zero = self.base.eval_many(pts)
        # base(x - t dir) >= |t| bd - base(x), so |t*| <= 2 base(x) / bd
        T = 2.0 * at_zero / self.dir_value
        a = -T
        b = T.copy()

        def phi(t):
            return self.base.eval_many(pts - t[:, None] * self.direction[None, :])

        best = at_zero.copy()
        c = a + _INV_PHI2 * (b - a)
        d = a + _INV_PHI * (b - a)
        yc = phi(c)
        yd = phi(d)
        for _ in range(_GOLDEN_ITERS):
            np.minimum(best, yc, out=best)
            np.minimum(best, yd, out=best)
            left = yc < yd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            h = b - a
            c = a + _INV_PHI2 * h
            d = a + _INV_PHI * h
            yc = phi(c)
            yd = phi(d)
        np.minimum(best, yc, out=best)
        np.minimum(best, yd, out=best)
        np.minimum(best, phi(0.5 * (a + b)), out=best)
        return best

    def magnitude_many(self, X):
        pts = _as_points(X, self.dim)
        T = 2.0 * self.base.eval_many(pts) / self.dir_value
        dir_mag = float(self.base.magnitude_many(self.direction.reshape(1, -1))[0])
        return self.base.magnitude_many(pts) + T * dir_mag


def linf_norm(dim: int) -> SeminormExpr:
    eye = np.eye(dim)
    return MaxOf(tuple(AbsLinear(eye[i]) for i in range(dim)))


def l1_norm(dim: int) -> SeminormExpr:
    eye = np.eye(dim)
    return SumOf(tuple(AbsLinear(eye[i]) for i in range(dim)))


def euclidean_norm(dim: int) -> SeminormExpr:
    return Euclidean(dim)


def seminorm_to_json(expr: SeminormExpr) -> dict:
    if isinstance(expr, AbsLinear):
        return {"kind": "abslinear", "coef": [float(c) for c in expr.coef]}
    if isinstance(expr, Euclidean):
        return {"kind": "euclidean", "dim": expr.dim}
    if isinstance(expr, MaxOf):
        return {"kind": "max", "children": [seminorm_to_json(c) for c in expr.children]}
    if isinstance(expr, SumOf):
        return {"kind": "sum", "children": [seminorm_to_json(c) for c in expr.children]}
    if isinstance(expr, Scale):
        return {"kind": "scale", "factor": float(expr.factor),
                "child": seminorm_to_json(expr.child)}
    if isinstance(expr, LineQuotient):
        return {"kind": "linequotient", "base": seminorm_to_json(expr.base),
                "direction": [float(c) for c in expr.direction]}
    raise ValueError(f"cannot serialize {type(expr).__name__}")


def seminorm_from_json(desc: dict) -> SeminormExpr:
    if not isinstance(desc, dict):
        raise ValueError("seminorm descriptor must be an object")
    kind = desc.get("kind")
    if kind == "abslinear":
        return AbsLinear(desc["coef"])
    if kind == "euclidean":
        return Euclidean(int(desc["dim"]))
    if kind == "max":
        return MaxOf(tuple(seminorm_from_json(c) for c in desc["children"]))
    if kind == "sum":
        return SumOf(tuple(seminorm_from_json(c) for c in desc["children"]))
    if kind == "scale":
        return Scale(float(desc["factor"]), seminorm_from_json(desc["child"]))
    if kind == "linequotient":
        return LineQuotient(seminorm_from_json(desc["base"]), desc["direction"])
    raise ValueError(f"unknown seminorm kind {kind!r}")
