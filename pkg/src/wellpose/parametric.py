"""Parameter-indexed objective families and epi-continuity certificates.

A :class:`ParametricFamily` assigns one objective f_p to every point p of
a finite parameter space.  The checks in this module search a decreasing
delta grid for the largest closed parameter ball on which a uniform
epi-continuity condition holds:

  condition 1 (at an anchor x):  every q near p admits x_q in B_eps(x)
      with f_q(x_q) <= f_p(x) + eps;
  condition 2: every q near p satisfies f_q >= (f_p)_eps - eps pointwise.

Certificates carry replayable witnesses.  All "largest delta" searches
rely on the checks being downward closed in delta: shrinking delta only
shrinks both the parameter ball and the sublevel sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .objectives import ObjectiveFunction, argmin_set, inf_value, regularize
from .spaces import FiniteMetricSpace, PointSubset, ball, diam

__all__ = [
    "ParameterGrid",
    "ParametricFamily",
    "EpiCertificate",
    "UniformEpiReport",
    "FiveRReport",
    "UscReport",
    "SelectionGapReport",
    "SumEpiReport",
    "default_delta_grid",
    "value_function",
    "check_cond1",
    "check_cond2",
    "certify_uniform_epi",
    "recheck_certificate",
    "check_5r_lemma",
    "argmin_usc",
    "vime_family",
    "no_continuous_selection_demo",
    "check_sum_epi",
    "analytic_epi_delta",
    "family_from_json",
]


@dataclass(frozen=True, eq=False)
class ParameterGrid:
    """Finite parameter space plus an optional witness index set."""

    space: FiniteMetricSpace
    witness: tuple[int, ...] = ()

    def __post_init__(self):
        for i in self.witness:
            if not (0 <= i < self.space.n):
                raise ValueError(f"witness index {i} out of range")


@dataclass(frozen=True, eq=False)
class ParametricFamily:
    """One proper objective per parameter, all on a shared domain.

    ``lipschitz_in_p`` (optional) asserts sup_x |f_p(x) - f_q(x)| <= L * mu(p, q)
    and unlocks an analytic delta fast path that searches cross-check.
    """

    params: ParameterGrid
    domain: FiniteMetricSpace
    table: tuple[ObjectiveFunction, ...]
    lipschitz_in_p: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.table) != self.params.space.n:
            raise ValueError("need exactly one objective per parameter")
        for f in self.table:
            if f.space is not self.domain:
                raise ValueError("family members must share the domain space")

    def objective(self, p: int) -> ObjectiveFunction:
        return self.table[p]

    def add_perturbation(self, g_fam) -> "ParametricFamily":
        """Pointwise sum family (f_p + g_p); g_fam is a PerturbationFamily
        over the same parameter space (a bare space, not a grid)."""
        if g_fam.params is not self.params.space:
            raise ValueError("perturbation family uses a different parameter space")
        summed = tuple(f + g for f, g in zip(self.table, g_fam.table))
        return ParametricFamily(self.params, self.domain, summed, meta={"kind": "sum"})


def default_delta_grid(fam: ParametricFamily, eps: float, octaves: int = 16) -> tuple[float, ...]:
    """Geometric grid {eps, eps/2, ..., eps/2^octaves}, decreasing.

    Capped below by the minimal positive pairwise parameter distance:
    radii below it only see the singleton ball.
    """
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    pspace = fam.params.space
    spacing = np.inf
    for i in range(pspace.n):
        row = pspace.row(i)
        pos = row[row > 0.0]
        if pos.size:
            spacing = min(spacing, float(pos.min()))
    vals = [eps / (2.0**k) for k in range(octaves + 1)]
    kept = tuple(v for v in vals if not (v < spacing))
    return kept if kept else (float(spacing) if np.isfinite(spacing) else eps,)


def _check_grid(delta_grid) -> tuple[float, ...]:
    grid = tuple(float(d) for d in delta_grid)
    if not grid:
        raise ValueError("delta grid must be non-empty")
    arr = np.asarray(grid)
    if np.any(arr <= 0.0) or np.any(np.diff(arr) >= 0.0):
        raise ValueError("delta grid must be positive and strictly decreasing")
    return grid


def _largest_delta(delta_grid: tuple[float, ...], min_bad_dist: float) -> float | None:
    # works(delta) iff the closed ball B_delta(p) contains no bad q,
    # i.e. delta < min distance to a bad parameter
    for d in delta_grid:
        if d < min_bad_dist:
            return d
    return None


def value_function(fam: ParametricFamily) -> np.ndarray:
    """V(p) = inf_x f_p(x) per parameter index."""
    return np.array([inf_value(f) for f in fam.table], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class EpiCertificate:
    """Outcome of one condition check at parameter p.

    delta is the largest grid radius on which the condition held, or None
    (FAIL).  For condition 1 the witnesses map each q in B_delta(p) to a
    chosen x_q; for condition 2 a violation records the failing (q, x).
    """

    condition: int
    p: int
    eps: float
    delta: float | None
    anchor_x: int | None = None
    witnesses: dict | None = None
    vacuous: bool = False
    violation: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.delta is not None


def check_cond1(fam: ParametricFamily, p: int, x: int, eps: float, delta_grid) -> EpiCertificate:
    """Largest grid delta such that every q in B_delta(p) admits a point
    x_q in B_eps(x) with f_q(x_q) <= f_p(x) + eps.

    A +inf anchor value makes the condition vacuous; this is reported
    (vacuous=True) with the full grid radius.
    """
    grid = _check_grid(delta_grid)
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    fp_x = float(fam.objective(p).values[x])
    if fp_x == np.inf:
        return EpiCertificate(1, p, eps, grid[0], anchor_x=x, witnesses={}, vacuous=True)
    bound = fp_x + eps
    ball_x = ball(fam.domain, x, eps).sorted_indices()
    prow = fam.params.space.row(p)
    candidates = np.flatnonzero(prow <= grid[0])
    witnesses: dict[int, int] = {}
    min_bad = np.inf
    for q in candidates:
        sub = fam.objective(int(q)).values[ball_x]
        k = int(np.argmin(sub))  # first minimum = lowest index
        if sub[k] <= bound:
            witnesses[int(q)] = int(ball_x[k])
        else:
            min_bad = min(min_bad, float(prow[q]))
    delta = _largest_delta(grid, min_bad)
    if delta is None:
        return EpiCertificate(1, p, eps, None, anchor_x=x, witnesses=None)
    keep = {q: w for q, w in witnesses.items() if prow[q] <= delta}
    return EpiCertificate(1, p, eps, delta, anchor_x=x, witnesses=keep)


def check_cond2(fam: ParametricFamily, p: int, eps: float, delta_grid) -> EpiCertificate:
    """Largest grid delta such that f_q >= (f_p)_eps - eps holds pointwise
    for every q in B_delta(p)."""
    grid = _check_grid(delta_grid)
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    floor = regularize(fam.objective(p), eps).values - eps
    prow = fam.params.space.row(p)
    candidates = np.flatnonzero(prow <= grid[0])
    min_bad = np.inf
    violation = None
    for q in candidates:
        viol = fam.objective(int(q)).values < floor
        if np.any(viol):
            d = float(prow[q])
            if d < min_bad:
                min_bad = d
                violation = (int(q), int(np.flatnonzero(viol)[0]))
    delta = _largest_delta(grid, min_bad)
    if delta is None:
        return EpiCertificate(2, p, eps, None, violation=violation)
    return EpiCertificate(2, p, eps, delta)


@dataclass(frozen=True, eq=False)
class UniformEpiReport:
    """Conditions 1 (uniform over all anchors) and 2 at one parameter."""

    p: int
    eps: float
    cond1_delta: float | None
    cond2: EpiCertificate

    @property
    def delta(self) -> float | None:
        if self.cond1_delta is None or self.cond2.delta is None:
            return None
        return min(self.cond1_delta, self.cond2.delta)

    @property
    def ok(self) -> bool:
        return self.delta is not None


def certify_uniform_epi(fam: ParametricFamily, p: int, eps: float, delta_grid) -> UniformEpiReport:
    """Certify both conditions at p with one delta uniform over anchors.

    On finite domains the per-anchor condition-1 radii have a positive
    minimum, so the uniform variant is equivalent to quantifying the
    anchor before delta.
    """
    grid = _check_grid(delta_grid)
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    fp = fam.objective(p).values
    prow = fam.params.space.row(p)
    candidates = np.flatnonzero(prow <= grid[0])
    min_bad = np.inf
    for q in candidates:
        # (f_q)_eps <= f_p + eps everywhere == condition 1 at every anchor
        reg_q = regularize(fam.objective(int(q)), eps).values
        if not np.all(reg_q <= fp + eps):
            min_bad = min(min_bad, float(prow[q]))
    cond1_delta = _largest_delta(grid, min_bad)
    cond2 = check_cond2(fam, p, eps, grid)
    return UniformEpiReport(p=p, eps=eps, cond1_delta=cond1_delta, cond2=cond2)


def recheck_certificate(fam: ParametricFamily, cert: EpiCertificate) -> bool:
    """Replay a successful certificate from its recorded witnesses."""
    if cert.delta is None:
        raise ValueError("cannot replay a failed certificate")
    prow = fam.params.space.row(cert.p)
    qs = np.flatnonzero(prow <= cert.delta)
    if cert.condition == 1:
        if cert.vacuous:
            return float(fam.objective(cert.p).values[cert.anchor_x]) == np.inf
        bound = float(fam.objective(cert.p).values[cert.anchor_x]) + cert.eps
        xrow = fam.domain.row(cert.anchor_x)
        for q in qs:
            xq = cert.witnesses.get(int(q))
            if xq is None:
                return False
            if not (xrow[xq] <= cert.eps):
                return False
            if not (fam.objective(int(q)).values[xq] <= bound):
                return False
        return True
    floor = regularize(fam.objective(cert.p), cert.eps).values - cert.eps
    return all(bool(np.all(fam.objective(int(q)).values >= floor)) for q in qs)


def analytic_epi_delta(fam: ParametricFamily, eps: float) -> float | None:
    """eps / L for families with a declared sup-norm Lipschitz constant.

    Any delta <= eps/L satisfies both conditions: condition 1 with
    x_q = x, condition 2 through f_q >= f_p - L*delta >= (f_p)_eps - eps.
    """
    if fam.lipschitz_in_p is None:
        return None
    if fam.lipschitz_in_p == 0.0:
        return np.inf
    return eps / fam.lipschitz_in_p


@dataclass(frozen=True, eq=False)
class FiveRReport:
    """Radius propagation: one delta controlling a whole parameter ball."""

    p: int
    eps: float
    r: float
    delta: float | None
    q_diams: dict

    @property
    def ok(self) -> bool:
        return self.delta is not None


def check_5r_lemma(fam: ParametricFamily, p: int, eps: float, r: float, delta_grid) -> FiveRReport:
    """Search for a grid delta with diam(argmin_set(f_q, delta)) < 5r for
    every q in B_delta(p).

    Precondition (checked): diam(argmin_set(f_p, eps)) < r.  On families
    certified epi-continuous the search must succeed; a FAIL is a bug
    indicator, not a counterexample.
    """
    grid = _check_grid(delta_grid)
    if not (eps > 0.0 and r > 0.0):
        raise ValueError("eps and r must be positive")
    base_diam = diam(argmin_set(fam.objective(p), eps))
    if not (base_diam < r):
        raise PreconditionError(
            f"hypothesis fails: diam(argmin_set(f_p, eps)) = {base_diam} >= r = {r}"
        )
    five_r = 5.0 * r
    prow = fam.params.space.row(p)
    for delta in grid:
        qs = np.flatnonzero(prow <= delta)
        q_diams = {}
        good = True
        for q in qs:
            d = diam(argmin_set(fam.objective(int(q)), delta))
            q_diams[int(q)] = d
            if not (d < five_r):
                good = False
                break
        if good:
            return FiveRReport(p=p, eps=eps, r=r, delta=delta, q_diams=q_diams)
    return FiveRReport(p=p, eps=eps, r=r, delta=None, q_diams={})


@dataclass(frozen=True, eq=False)
class UscReport:
    """Argmin upper semicontinuity evidence around a unique minimizer."""

    p: int
    eps: float
    x_p: int
    delta: float | None

    @property
    def ok(self) -> bool:
        return self.delta is not None


def argmin_usc(fam: ParametricFamily, p: int, eps: float, delta_grid) -> UscReport:
    """Largest grid delta with argmin_set(f_q, delta) ⊆ B_eps(x_p) for all
    q in B_delta(p), where x_p is the unique exact minimizer of f_p.

    A non-unique exact argmin violates the hypothesis and raises.
    """
    grid = _check_grid(delta_grid)
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    exact = argmin_set(fam.objective(p), 0.0)
    if len(exact) != 1:
        raise PreconditionError("argmin_usc needs a unique exact minimizer")
    x_p = int(next(iter(exact)))
    target = ball(fam.domain, x_p, eps)
    prow = fam.params.space.row(p)
    min_bad = np.inf
    candidates = np.flatnonzero(prow <= grid[0])
    for delta in grid:
        ok = True
        for q in candidates:
            if prow[q] <= delta:
                omega = argmin_set(fam.objective(int(q)), delta)
                if not omega.issubset(target):
                    ok = False
                    break
        if ok:
            return UscReport(p=p, eps=eps, x_p=x_p, delta=delta)
    return UscReport(p=p, eps=eps, x_p=x_p, delta=None)


# ----------------------------------------------------------------------
# the vime family


def vime_family(x_steps: int = 999, p_steps: int = 999) -> ParametricFamily:
    """Two-ramp family on the unit interval with a flat middle third.

    f_p is (1-p)(3x-1) on [0, 1/3], 0 on [1/3, 2/3], p(2-3x) on [2/3, 1];
    P = X = uniform grids with the given number of steps.  Steps that are
    multiples of 3 put the breakpoints exactly on the grid; breakpoints
    carry the exact value 0 shared by both adjacent pieces.  Piece
    membership is decided by integer comparisons (3i vs steps), never by
    float coordinates, so the block structure of sublevel-set claims is
    exact.  The family is 1-Lipschitz in p in sup norm.
    """
    if x_steps < 3 or p_steps < 3:
        raise ValueError("steps must be >= 3")
    X = FiniteMetricSpace.grid1d(0.0, 1.0, x_steps)
    P = FiniteMetricSpace.grid1d(0.0, 1.0, p_steps)
    xs = np.arange(x_steps + 1, dtype=np.float64) / x_steps
    ps = np.arange(p_steps + 1, dtype=np.float64) / p_steps
    i3 = 3 * np.arange(x_steps + 1)
    left = i3 < x_steps
    right = i3 > 2 * x_steps
    table_vals = np.zeros((p_steps + 1, x_steps + 1), dtype=np.float64)
    table_vals[:, left] = np.outer(1.0 - ps, 3.0 * xs[left] - 1.0)
    table_vals[:, right] = np.outer(ps, 2.0 - 3.0 * xs[right])
    table = tuple(ObjectiveFunction(X, row) for row in table_vals)
    meta = {"kind": "vime", "x_steps": x_steps, "p_steps": p_steps}
    return ParametricFamily(ParameterGrid(P), X, table, lipschitz_in_p=1.0, meta=meta)


def _vime_blocks(fam: ParametricFamily) -> tuple[frozenset, frozenset, frozenset]:
    k = fam.meta["x_steps"]
    i3 = 3 * np.arange(k + 1)
    left = frozenset(np.flatnonzero(i3 <= k).tolist())
    interior = frozenset(np.flatnonzero((i3 > k) & (i3 < 2 * k)).tolist())
    right = frozenset(np.flatnonzero(i3 >= 2 * k).tolist())
    return left, interior, right


@dataclass(frozen=True, eq=False)
class SelectionGapReport:
    """Evidence that near-minimizers jump across the middle gap."""

    eps: float
    left_ok: bool
    right_ok: bool
    gap_ok: bool
    gap_interval: tuple[float, float]
    bad_p: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.left_ok and self.right_ok and self.gap_ok


def no_continuous_selection_demo(fam: ParametricFamily, eps: float) -> SelectionGapReport:
    """Verify the three block claims for the vime family at one eps.

    Requires eps in (0, 1/2) (a domain error otherwise) and a family
    built by vime_family.  Claims: the eps-argmin at p=0 stays in the
    left third, at p=1 in the right third, and for every p it misses the
    open middle third entirely, so any selection of near-minimizers
    must jump across a gap of width 1/3 somewhere.
    """
    if fam.meta.get("kind") != "vime":
        raise ValueError("demo requires a family built by vime_family")
    if not (0.0 < eps < 0.5):
        raise ValueError("eps must lie in (0, 1/2)")
    left, interior, right = _vime_blocks(fam)
    p_last = fam.params.space.n - 1
    omega0 = argmin_set(fam.objective(0), eps)
    omega1 = argmin_set(fam.objective(p_last), eps)
    left_ok = omega0.members <= left
    right_ok = omega1.members <= right
    bad_p = []
    for p in range(fam.params.space.n):
        if not argmin_set(fam.objective(p), eps).members.isdisjoint(interior):
            bad_p.append(p)
    return SelectionGapReport(
        eps=eps,
        left_ok=left_ok,
        right_ok=right_ok,
        gap_ok=not bad_p,
        gap_interval=(1.0 / 3.0, 2.0 / 3.0),
        bad_p=tuple(bad_p),
    )


# ----------------------------------------------------------------------
# sum preservation


@dataclass(frozen=True, eq=False)
class SumEpiReport:
    """Epi-continuity of f + g after a joint-continuity precheck on g."""

    p: int
    eps: float
    gcont_delta: float | None
    epi: UniformEpiReport | None

    @property
    def ok(self) -> bool:
        return self.gcont_delta is not None and self.epi is not None and self.epi.ok


def check_sum_epi(fam: ParametricFamily, g_fam, p: int, eps: float, delta_grid) -> SumEpiReport:
    """Certify the summed family (f_p + g_p) at p.

    First verifies joint continuity of g at p for this eps: a grid delta
    with |g_q(y) - g_p(x)| < eps whenever mu(q, p) <= delta and
    d(y, x) <= delta.  A failed precheck is reported (gcont_delta=None),
    not raised: it is an outcome of the check, and the summed-family
    certification is then skipped.
    """
    grid = _check_grid(delta_grid)
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    pspace = fam.params.space
    dom = fam.domain
    gp = np.asarray(g_fam.table[p].values, dtype=np.float64)
    prow = pspace.row(p)
    gcont_delta = None
    for delta in grid:
        qs = np.flatnonzero(prow <= delta)
        ok = True
        for q in qs:
            gq = np.asarray(g_fam.table[int(q)].values, dtype=np.float64)
            # max over x of max_{y in B_delta(x)} |g_q(y) - g_p(x)|
            for lo in range(0, dom.n, 512):
                idx = np.arange(lo, min(lo + 512, dom.n))
                mask = dom.block(idx) <= delta
                gap = np.abs(gq[None, :] - gp[idx, None])
                worst = np.where(mask, gap, -np.inf).max()
                if not (worst < eps):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            gcont_delta = delta
            break
    if gcont_delta is None:
        return SumEpiReport(p=p, eps=eps, gcont_delta=None, epi=None)
    summed = fam.add_perturbation(g_fam)
    epi = certify_uniform_epi(summed, p, eps, grid)
    return SumEpiReport(p=p, eps=eps, gcont_delta=gcont_delta, epi=epi)


# ----------------------------------------------------------------------
# JSON descriptors
#
# { "kind": "vime"|"table"|"lipschitz_expr", "params": {...} }


def family_from_json(desc: dict) -> ParametricFamily:
    from .spaces import space_from_json

    if not isinstance(desc, dict):
        raise ValueError("family descriptor must be an object")
    kind = desc.get("kind")
    params = desc.get("params", {})
    if kind == "vime":
        return vime_family(int(params.get("x_steps", 999)), int(params.get("p_steps", 999)))
    if kind == "table":
        domain = space_from_json(params["domain"])
        pspace = space_from_json(params["param_space"])
        values = np.asarray(params["values"], dtype=np.float64)
        if values.shape != (pspace.n, domain.n):
            raise ValueError("value table shape must be (n_params, n_points)")
        table = tuple(ObjectiveFunction(domain, row) for row in values)
        witness = tuple(int(i) for i in params.get("witness", ()))
        return ParametricFamily(ParameterGrid(pspace, witness), domain, table,
                                meta={"kind": "table"})
    if kind == "lipschitz_expr":
        domain = space_from_json(params["domain"])
        pspace = space_from_json(params["param_space"])
        base = np.asarray(params["base"], dtype=np.float64)
        bump = np.asarray(params["bump"], dtype=np.float64)
        coef = np.asarray(params["coef"], dtype=np.float64)
        if base.shape != (domain.n,) or bump.shape != (domain.n,) or coef.shape != (pspace.n,):
            raise ValueError("base/bump/coef shapes must match the spaces")
        table = tuple(ObjectiveFunction(domain, base + c * bump) for c in coef)
        lip = params.get("lipschitz")
        if lip is None:
            # empirical coefficient slope over parameter pairs
            worst = 0.0
            for i in range(pspace.n):
                row = pspace.row(i)
                for j in range(i + 1, pspace.n):
                    if row[j] > 0.0:
                        worst = max(worst, abs(float(coef[i] - coef[j])) / float(row[j]))
            lip = worst * float(np.max(np.abs(bump)))
        return ParametricFamily(ParameterGrid(pspace), domain, table,
                                lipschitz_in_p=float(lip), meta={"kind": "lipschitz_expr"})
    raise ValueError(f"unknown family kind {kind!r}")
