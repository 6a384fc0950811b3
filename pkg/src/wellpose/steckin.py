"""Renorming pipeline for metric projection onto convex bodies.

The ambient space is R^d with a reference norm (``base``).  Candidate
seminorms are compared through sphere-sampled estimates:

  k_nu:  sup of nu on the base unit sphere (equivalence from above),
  a_nu:  inf of nu on the base unit sphere (equivalence from below),
  rho:   sup of |nu1 - nu2| over the base unit ball, the divergence the
         whole stability analysis is budgeted in.

Each estimate carries an error bound derived from the recorded sphere
mesh h: a sample sup M bounds the true sup by M / (1 - h), and the
sample inf m overshoots the true inf by at most M h / (1 - h).

:func:`wellpose_point` perturbs a seminorm so the projection problem at
one point becomes well posed, and :func:`baire_renorm` chains such steps
under a total rho budget while protecting every earlier step's claim
through a shrinking-radius ledger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import PreconditionError, ReplayError
from .objectives import ModulusCurve
from .seminorms import AbsLinear, LineQuotient, MaxOf, Scale, SeminormExpr, SumOf

__all__ = [
    "NormedSetting",
    "make_setting",
    "MeshEstimate",
    "ANuEstimate",
    "RhoEstimate",
    "k_nu",
    "a_nu",
    "rho",
    "N0OpenReport",
    "n0_open_check",
    "ConvexBody",
    "segment_body",
    "polytope_body",
    "validate_sample",
    "set_diameter",
    "ProjectionReport",
    "metric_projection",
    "c_of_p",
    "stech_perturb_seminorm",
    "WellposeReport",
    "wellpose_point",
    "LedgerStep",
    "BudgetLedger",
    "RenormReport",
    "baire_renorm",
]


@dataclass(frozen=True, eq=False)
class NormedSetting:
    """Ambient dimension, reference norm, and its sampled unit sphere.

    mesh is the achieved covering fineness: the largest base-gap between
    adjacent sample points.  All estimate error bounds scale with it.
    """

    dim: int
    base: SeminormExpr
    sphere: np.ndarray
    mesh: float


def _normalize_rows(base: SeminormExpr, u: np.ndarray) -> np.ndarray:
    b = base.eval_many(u)
    if not np.all(b > 0.0):
        raise ValueError("base must be positive away from the origin")
    return u / b[:, None]


def make_setting(dim: int, base: SeminormExpr, mesh: float) -> NormedSetting:
    """Sample the base unit sphere finely enough for the requested mesh."""
    if base.dim != dim:
        raise ValueError("base dimension mismatch")
    if not (mesh > 0.0):
        raise ValueError("mesh must be positive")
    if dim == 1:
        u = np.array([[1.0], [-1.0]])
        sphere = _normalize_rows(base, u)
        achieved = 0.0  # two points cover the two-point sphere exactly
    elif dim == 2:
        m = 64
        while True:
            angles = 2.0 * np.pi * np.arange(m) / m
            u = np.column_stack([np.cos(angles), np.sin(angles)])
            sphere = _normalize_rows(base, u)
            gaps = base.eval_many(sphere - np.roll(sphere, -1, axis=0))
            achieved = float(gaps.max())
            if achieved <= mesh:
                break
            if m >= 2**21:
                raise ValueError("requested mesh is too fine for the circle sampler")
            m *= 2
    elif dim == 3:
        for level in range(8):
            verts, edges = _icosphere(level)
            sphere = _normalize_rows(base, verts)
            gaps = base.eval_many(sphere[edges[:, 0]] - sphere[edges[:, 1]])
            achieved = float(gaps.max())
            if achieved <= mesh:
                break
        else:
            raise ValueError("requested mesh is too fine for the sphere sampler")
    else:
        raise ValueError("only dimensions 1, 2, 3 are supported")
    sphere = np.ascontiguousarray(sphere)
    sphere.flags.writeable = False
    return NormedSetting(dim=dim, base=base, sphere=sphere, mesh=achieved)


def _icosphere(level: int) -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    verts = [np.asarray(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        split = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            split += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = split
    edges = set()
    for a, b, c in faces:
        edges |= {(min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(a, c), max(a, c))}
    return np.array(verts), np.array(sorted(edges))


# ----------------------------------------------------------------------
# sphere-sampled estimates


@dataclass(frozen=True)
class MeshEstimate:
    """Sample value plus a one-sided bound on what the sample missed."""

    value: float
    error_bound: float


@dataclass(frozen=True)
class ANuEstimate:
    value: float
    error_bound: float
    equivalent: bool


@dataclass(frozen=True)
class RhoEstimate:
    value: float
    error_bound: float


def _sup_factor(setting: NormedSetting) -> float:
    if not (setting.mesh < 1.0):
        raise ValueError("sphere mesh must be < 1 for sup estimates")
    return 1.0 / (1.0 - setting.mesh)


def k_nu(nu: SeminormExpr, setting: NormedSetting) -> MeshEstimate:
    """Sample sup of nu on the base sphere; true sup <= value + error."""
    if nu.dim != setting.dim:
        raise ValueError("dimension mismatch")
    M = float(nu.eval_many(setting.sphere).max())
    factor = _sup_factor(setting)
    return MeshEstimate(value=M, error_bound=M * setting.mesh * factor)


def a_nu(nu: SeminormExpr, setting: NormedSetting) -> ANuEstimate:
    """Sample inf of nu on the base sphere; true inf >= value - error.

    equivalent reports whether the certified lower bound is positive,
    i.e. nu dominates a positive multiple of the base norm.
    """
    if nu.dim != setting.dim:
        raise ValueError("dimension mismatch")
    vals = nu.eval_many(setting.sphere)
    m = float(vals.min())
    M = float(vals.max())
    err = M * _sup_factor(setting) * setting.mesh
    return ANuEstimate(value=m, error_bound=err, equivalent=bool(m - err > 0.0))


def rho(nu1: SeminormExpr, nu2: SeminormExpr, setting: NormedSetting) -> RhoEstimate:
    """Sup of |nu1 - nu2| over the base unit ball.

    The difference is absolutely homogeneous, so the ball sup equals the
    sphere sup and the sample max is a lower estimate.
    """
    if nu1.dim != setting.dim or nu2.dim != setting.dim:
        raise ValueError("dimension mismatch")
    v1 = nu1.eval_many(setting.sphere)
    v2 = nu2.eval_many(setting.sphere)
    value = float(np.abs(v1 - v2).max())
    factor = _sup_factor(setting)
    err = (float(v1.max()) + float(v2.max())) * factor * setting.mesh
    return RhoEstimate(value=value, error_bound=err)


@dataclass(frozen=True, eq=False)
class N0OpenReport:
    """Certified-stability check: nearby seminorms stay equivalent.

    margin is the certified lower bound on the perturbed sphere inf
    implied by the base estimates; holds compares the measured perturbed
    inf against it and must be True whenever the arithmetic is sound.
    """

    a_nu_base: ANuEstimate
    a_nu_prime: ANuEstimate
    rho: RhoEstimate
    margin: float
    holds: bool


def n0_open_check(nu: SeminormExpr, nu_prime: SeminormExpr, setting: NormedSetting) -> N0OpenReport:
    a_base = a_nu(nu, setting)
    a_prime = a_nu(nu_prime, setting)
    r = rho(nu, nu_prime, setting)
    margin = a_base.value - r.value - (a_base.error_bound + r.error_bound)
    holds = bool(a_prime.value >= margin)
    return N0OpenReport(a_nu_base=a_base, a_nu_prime=a_prime, rho=r,
                        margin=margin, holds=holds)


# ----------------------------------------------------------------------
# convex bodies and projection


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Convex hull of vertices, probed through a finite boundary sample.

    mesh records the sample spacing (euclidean); membership queries use
    the exact hull, while projection estimates range over the sample.
    """

    vertices: np.ndarray
    sample: np.ndarray
    mesh: float

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64)
        samp = np.asarray(self.sample, dtype=np.float64)
        if verts.ndim != 2 or samp.ndim != 2 or verts.shape[1] != samp.shape[1]:
            raise ValueError("vertices and sample must be (k, d) and (m, d)")
        if verts.shape[0] == 0 or samp.shape[0] == 0:
            raise ValueError("body needs at least one vertex and one sample point")
        if not (np.all(np.isfinite(verts)) and np.all(np.isfinite(samp))):
            raise ValueError("body data must be finite")
        verts = verts.copy()
        samp = samp.copy()
        verts.flags.writeable = False
        samp.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "sample", samp)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def contains(self, p, tol: float = 1e-9) -> bool:
        p = np.asarray(p, dtype=np.float64).reshape(-1)
        if p.size != self.dim:
            raise ValueError("point has the wrong dimension")
        k = self.vertices.shape[0]
        A_eq = np.vstack([self.vertices.T, np.ones((1, k))])
        b_eq = np.concatenate([p, [1.0]])
        res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq,
                      bounds=[(0.0, None)] * k, method="highs",
                      options={"primal_feasibility_tolerance": tol})
        return bool(res.status == 0)


def segment_body(a, b, n_samples: int = 2001) -> ConvexBody:
    """Line segment from a to b with a uniform sample."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("endpoints must be vectors of equal length")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    ts = np.linspace(0.0, 1.0, n_samples)
    sample = a[None, :] + ts[:, None] * (b - a)[None, :]
    mesh = float(np.linalg.norm(b - a) / (n_samples - 1))
    return ConvexBody(vertices=np.stack([a, b]), sample=sample, mesh=mesh)


def polytope_body(vertices, n_samples: int = 2048, seed: int = 0) -> ConvexBody:
    """Convex hull of vertices sampled by seeded barycentric mixing."""
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[0] < 1:
        raise ValueError("vertices must be a non-empty (k, d) array")
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(verts.shape[0]), size=max(n_samples - verts.shape[0], 0))
    sample = np.vstack([verts, weights @ verts]) if weights.size else verts.copy()
    # nearest-neighbour spacing as a fineness proxy
    mesh = 0.0
    m = sample.shape[0]
    for lo in range(0, m, 256):
        blk = sample[lo:lo + 256]
        d2 = np.sum((blk[:, None, :] - sample[None, :, :]) ** 2, axis=2)
        rows = np.arange(lo, min(lo + 256, m))
        d2[np.arange(blk.shape[0]), rows] = np.inf
        mesh = max(mesh, float(np.sqrt(d2.min(axis=1).max())))
    return ConvexBody(vertices=verts, sample=sample, mesh=mesh)


def validate_sample(body: ConvexBody, limit: int = 64, tol: float = 1e-9) -> bool:
    """Membership-check up to limit evenly spaced sample points."""
    m = body.sample.shape[0]
    idx = np.unique(np.linspace(0, m - 1, min(limit, m)).astype(int))
    return all(body.contains(body.sample[i], tol=tol) for i in idx)


def _linear_rows(expr: SeminormExpr) -> np.ndarray | None:
    """Rows L with expr(z) = max_j |L_j . z|, when the tree permits."""
    if isinstance(expr, AbsLinear):
        return expr.coef[None, :]
    if isinstance(expr, Scale):
        rows = _linear_rows(expr.child)
        return None if rows is None else expr.factor * rows
    if isinstance(expr, MaxOf):
        parts = [_linear_rows(c) for c in expr.children]
        if any(p is None for p in parts):
            return None
        return np.vstack(parts)
    return None


def set_diameter(points: np.ndarray, nu: SeminormExpr) -> float:
    """max over pairs of nu(x - y), with a fast path for max-of-linear trees."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != nu.dim:
        raise ValueError("points must be (m, d) matching the seminorm")
    if pts.shape[0] == 0:
        raise ValueError("diameter of an empty set is undefined")
    if pts.shape[0] == 1:
        return 0.0
    rows = _linear_rows(nu)
    if rows is not None:
        proj = pts @ rows.T
        return float((proj.max(axis=0) - proj.min(axis=0)).max())
    best = 0.0
    m = pts.shape[0]
    for i0 in range(0, m, 64):
        blk = pts[i0:i0 + 64]
        diffs = (blk[:, None, :] - pts[None, i0:, :]).reshape(-1, pts.shape[1])
        best = max(best, float(nu.eval_many(diffs).max()))
    return best


@dataclass(frozen=True, eq=False)
class ProjectionReport:
    """Distance, minimizing sample indices, and the localization curve."""

    dist: float
    argmin_indices: tuple[int, ...]
    curve: ModulusCurve


def _ascending_grid(delta_grid) -> tuple[float, ...]:
    grid = sorted({float(d) for d in delta_grid})
    if not grid or grid[0] <= 0.0:
        raise ValueError("delta grid must be positive")
    return tuple(grid)


def metric_projection(nu: SeminormExpr, body: ConvexBody, p, delta_grid,
                      setting: NormedSetting) -> ProjectionReport:
    """Evaluate nu(p - x) over the body sample; near-minimizer spreads
    are measured in the setting's base norm per grid tolerance."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.size != body.dim or nu.dim != body.dim or setting.dim != body.dim:
        raise ValueError("dimension mismatch")
    grid = _ascending_grid(delta_grid)
    values = nu.eval_many(p[None, :] - body.sample)
    dist = float(values.min())
    argmin = tuple(int(i) for i in np.flatnonzero(values == dist))
    diams = []
    for d in grid:
        members = body.sample[values <= dist + d]
        diams.append(set_diameter(members, setting.base))
    curve = ModulusCurve(eps_grid=grid, diam_values=tuple(diams))
    return ProjectionReport(dist=dist, argmin_indices=argmin, curve=curve)


def c_of_p(body: ConvexBody, p, setting: NormedSetting) -> float:
    """Largest base distance from p to the sampled body."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    return float(setting.base.eval_many(p[None, :] - body.sample).max())


def stech_perturb_seminorm(nu: SeminormExpr, x_star, eps: float,
                           setting: NormedSetting) -> SeminormExpr:
    """nu + (eps/2) base + (eps/2) line-quotient of base along x_star.

    The quotient term vanishes along x_star, so a point reached from p
    in that direction keeps a strict advantage; the base term restores
    definiteness.  Both added terms are dominated by (eps/2) base on the
    unit ball, so the move costs at most eps in rho.
    """
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    lq = LineQuotient(setting.base, x_star)
    return SumOf((nu, Scale(eps / 2.0, setting.base), Scale(eps / 2.0, lq)))


@dataclass(frozen=True, eq=False)
class WellposeReport:
    """One localization step at a point p outside or inside the body.

    delta is the largest grid tolerance whose near-minimizers have base
    diameter below the step budget (None if every strategy failed);
    added_exprs are the seminorm terms summed onto nu.
    """

    nu_prime: SeminormExpr
    status: str
    delta: float | None
    achieved_diam: float | None
    moved: float
    dist: float
    curve: ModulusCurve
    x_star: tuple[float, ...] | None
    added_exprs: tuple[SeminormExpr, ...]

    @property
    def ok(self) -> bool:
        return self.delta is not None


def _localization_search(values: np.ndarray, sample: np.ndarray, grid_desc,
                         base: SeminormExpr, eps: float):
    dist = float(values.min())
    for d in grid_desc:
        members = sample[values <= dist + d]
        dm = set_diameter(members, base)
        if dm < eps:
            return d, dm
    return None, None


def wellpose_point(nu: SeminormExpr, body: ConvexBody, p, eps: float,
                   setting: NormedSetting, delta_grid=None) -> WellposeReport:
    """Perturb nu so the projection of p onto the body localizes.

    Strategies, in order: a point of the body only needs the base term
    (status "interior"); otherwise the quotient construction along the
    first minimizer ("perturbed"), then along the second distinct
    minimizer ("perturbed_alt"), then the plain base term ("fallback").
    The first strategy whose largest grid tolerance keeps near-minimizer
    base diameter below eps wins.
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.size != body.dim or nu.dim != body.dim or setting.dim != body.dim:
        raise ValueError("dimension mismatch")
    if not (eps > 0.0):
        raise ValueError("eps must be positive")
    if delta_grid is None:
        delta_grid = tuple(eps / 2.0**k for k in range(33))
    grid_desc = sorted({float(d) for d in delta_grid}, reverse=True)
    if grid_desc[-1] <= 0.0:
        raise ValueError("delta grid must be positive")

    base_term = (Scale(eps, setting.base),)
    if body.contains(p):
        strategies = [("interior", base_term, None)]
    else:
        vals0 = nu.eval_many(p[None, :] - body.sample)
        order = np.argsort(vals0, kind="stable")
        x1 = p - body.sample[order[0]]
        strategies = [("perturbed", _quotient_terms(setting, x1, eps), tuple(float(v) for v in x1))]
        for k in range(1, order.size):
            if not np.array_equal(body.sample[order[k]], body.sample[order[0]]):
                x2 = p - body.sample[order[k]]
                strategies.append(
                    ("perturbed_alt", _quotient_terms(setting, x2, eps),
                     tuple(float(v) for v in x2)))
                break
        strategies.append(("fallback", base_term, None))

    last = None
    for status, terms, x_star in strategies:
        nu2 = SumOf((nu,) + terms)
        values = nu2.eval_many(p[None, :] - body.sample)
        delta, dm = _localization_search(values, body.sample, grid_desc, setting.base, eps)
        last = (status, terms, x_star, nu2, values, delta, dm)
        if delta is not None:
            break
    status, terms, x_star, nu2, values, delta, dm = last
    dist = float(values.min())
    grid_asc = tuple(reversed(grid_desc))
    diams = [set_diameter(body.sample[values <= dist + d], setting.base) for d in grid_asc]
    curve = ModulusCurve(eps_grid=grid_asc, diam_values=tuple(diams))
    moved = rho(nu2, nu, setting).value
    return WellposeReport(nu_prime=nu2, status=status, delta=delta,
                          achieved_diam=dm, moved=moved, dist=dist,
                          curve=curve, x_star=x_star, added_exprs=terms)


def _quotient_terms(setting: NormedSetting, x_star: np.ndarray, eps: float):
    lq = LineQuotient(setting.base, x_star)
    return (Scale(eps / 2.0, setting.base), Scale(eps / 2.0, lq))


# ----------------------------------------------------------------------
# budgeted iteration


@dataclass(frozen=True, eq=False)
class LedgerStep:
    """Bookkeeping for one renorming step.

    radius is the stability allowance delta/(3 c_p): as long as all
    later moves sum below it, this step's localization claim survives at
    tolerance delta/3.  protect_after records the allowance left for
    later steps once this step's own move is deducted from its elders.
    """

    index: int
    point: tuple[float, ...]
    eps_step: float
    status: str
    delta: float
    achieved_diam: float
    c_p: float
    radius: float
    moved: float
    x_star: tuple[float, ...] | None
    added_exprs: tuple[SeminormExpr, ...]


@dataclass(frozen=True, eq=False)
class BudgetLedger:
    eps_total: float
    spent: float
    steps: tuple[LedgerStep, ...]


@dataclass(frozen=True, eq=False)
class RenormReport:
    """Outcome of the budgeted renorming loop.

    per_point holds the final-seminorm replay at each witness: the claim
    diameter at delta/3 and the localization curve.  rho_total and
    a_final certify the budget and the preserved equivalence.
    """

    success: bool
    reason: str | None
    nu_final: SeminormExpr
    ledger: BudgetLedger
    per_point: tuple[dict, ...]
    rho_total: RhoEstimate | None
    a_final: ANuEstimate | None


def baire_renorm(nu0: SeminormExpr, body: ConvexBody, witness_points, eps_total: float,
                 n_target: int, setting: NormedSetting, delta_grid=None) -> RenormReport:
    """Make the projection well posed at every witness point at once.

    Step i spends eps_i = half of the smallest current allowance (budget
    left, every earlier protection, 1/n_target), so later moves can
    never spend an earlier claim's radius.  The final seminorm is then
    replayed at every witness at tolerance delta_i/3; replay failures
    raise ReplayError because the ledger arithmetic guarantees them.

    Precondition: eps_total must stay below the certified equivalence
    margin of nu0, or the budget could destroy definiteness.
    """
    if not (eps_total > 0.0):
        raise ValueError("eps_total must be positive")
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    points = [np.asarray(p, dtype=np.float64).reshape(-1) for p in witness_points]
    if not points:
        raise ValueError("need at least one witness point")
    a0 = a_nu(nu0, setting)
    if not (eps_total < a0.value - a0.error_bound):
        raise PreconditionError(
            "budget reaches the equivalence margin: "
            f"eps_total={eps_total} vs certified inf {a0.value - a0.error_bound}"
        )

    nu = nu0
    remaining = eps_total
    protect: list[float] = []
    steps: list[LedgerStep] = []
    spent = 0.0
    # halving alone never reaches zero; below this floor a step cannot
    # make progress the budget arithmetic can still resolve
    floor = eps_total * 2.0**-40

    def _fail(reason: str) -> RenormReport:
        ledger = BudgetLedger(eps_total=eps_total, spent=spent, steps=tuple(steps))
        return RenormReport(success=False, reason=reason, nu_final=nu,
                            ledger=ledger, per_point=(), rho_total=None, a_final=None)

    for i, p in enumerate(points):
        allowance = min([remaining, 1.0 / n_target] + protect)
        eps_i = 0.5 * allowance
        if not (eps_i > floor):
            return _fail("budget_exhausted")
        wp = wellpose_point(nu, body, p, eps_i, setting, delta_grid)
        if wp.delta is None:
            return _fail("step_failed")
        cp = c_of_p(body, p, setting)
        radius = wp.delta / (3.0 * cp)
        protect = [t - eps_i for t in protect]
        protect.append(radius)
        steps.append(LedgerStep(
            index=i, point=tuple(float(v) for v in p), eps_step=eps_i,
            status=wp.status, delta=wp.delta, achieved_diam=wp.achieved_diam,
            c_p=cp, radius=radius, moved=wp.moved, x_star=wp.x_star,
            added_exprs=wp.added_exprs,
        ))
        nu = wp.nu_prime
        remaining -= eps_i
        spent += eps_i

    per_point = []
    for step, p in zip(steps, points):
        values = nu.eval_many(p[None, :] - body.sample)
        dist = float(values.min())
        tol = step.delta / 3.0
        members = body.sample[values <= dist + tol]
        dm = set_diameter(members, setting.base)
        if not (dm < step.eps_step):
            raise ReplayError(
                f"final replay broke step {step.index}: diam {dm} at tolerance "
                f"{tol} is not below {step.eps_step}"
            )
        grid = tuple(sorted({float(d) for d in (tol, 2.0 * tol, 3.0 * tol)}))
        diams = tuple(set_diameter(body.sample[values <= dist + d], setting.base) for d in grid)
        per_point.append({
            "index": step.index,
            "point": step.point,
            "delta_over_3": tol,
            "diam": dm,
            "eps_step": step.eps_step,
            "bound": 1.0 / n_target,
            "curve": ModulusCurve(eps_grid=grid, diam_values=diams),
        })

    rho_total = rho(nu, nu0, setting)
    if rho_total.value > eps_total * (1.0 + 1e-12) + 1e-15:
        raise ReplayError(
            f"total move {rho_total.value} exceeds the budget {eps_total}"
        )
    a_final = a_nu(nu, setting)
    if not (a_final.value - a_final.error_bound > 0.0):
        raise ReplayError("final seminorm lost certified equivalence")
    ledger = BudgetLedger(eps_total=eps_total, spent=spent, steps=tuple(steps))
    return RenormReport(success=True, reason=None, nu_final=nu, ledger=ledger,
                        per_point=tuple(per_point), rho_total=rho_total, a_final=a_final)
