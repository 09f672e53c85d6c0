"""Best-constant estimation for the weighted Poincaré and Korn inequalities.

Every estimate is a lower bound: the best constant is a supremum of
quotients and we only ever evaluate quotients of concrete fields.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import cg

from kornlab.errors import ConstantsError, FieldError
from kornlab.fields import (
    Grid,
    ScalarField,
    VectorField,
    example_field,
    gradient,
    rotation_test_field,
    sym_gradient,
    weighted_lp_norm,
    weighted_mean,
)
from kornlab.gallery import rooms_and_corridors
from kornlab.geom import RectDomain, box_boundary_gap, contains
from kornlab.models import (
    BlowupReport,
    ConstantEstimate,
    ExponentParams,
    PipelineReport,
    RectangleCheck,
    RoomsSpec,
    Verdict,
)
from kornlab.scaling import HPolicy, predicted_exponents, predicts_korn_failure, room_integrals

logger = logging.getLogger(__name__)

KINDS = ("poincare", "korn", "korn_tilde", "korn_lp_cube")
RESTARTS = 8
POWER_TOL = 1e-6
AGREE_TOL = 0.01
MIN_FEATURE_CELLS = 8
DEFAULT_BUDGET = 200

Box = tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class QuotientProblem:
    """Which quotient to maximize, on which grid.

    ``cube`` is the reference cube Q of the korn_tilde and korn_lp_cube kinds
    and must lie strictly inside the domain.
    """

    kind: str
    params: ExponentParams
    grid: Grid
    cube: Box | None = None
    warm_starts: list[ScalarField | VectorField] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConstantsError(f"unknown kind '{self.kind}', expected one of {KINDS}")
        if self.kind != "poincare" and self.params.p <= 1:
            raise ConstantsError(f"Korn quotients need p > 1, got p={self.params.p}")
        if self.kind in ("korn_tilde", "korn_lp_cube"):
            if self.cube is None:
                raise ConstantsError(f"kind {self.kind} needs a reference cube")
            check_cube(self.grid.domain, self.cube)
            if not self.grid.in_box(self.cube).any():
                raise ConstantsError(f"reference cube {self.cube} contains no grid cells")

    @property
    def mask(self) -> np.ndarray | None:
        return None if self.cube is None else self.grid.in_box(self.cube)


def check_cube(domain: RectDomain, cube: Box) -> None:
    x0, y0, x1, y1 = cube
    if x1 <= x0 or y1 <= y0:
        raise ConstantsError(f"degenerate reference cube {cube}")
    center = (0.5 * (x0 + x1), 0.5 * (y0 + y1))
    if not contains(domain, center) or box_boundary_gap(domain, cube) <= 0:
        raise ConstantsError(f"reference cube {cube} is not compactly inside '{domain.name}'")


def check_resolution(grid: Grid) -> None:
    a = grid.domain.array
    narrow = float(np.minimum(a[:, 2] - a[:, 0], a[:, 3] - a[:, 1]).min())
    if narrow / grid.h < MIN_FEATURE_CELLS - 1e-9:
        raise ConstantsError(
            f"grid h={grid.h:.3g} resolves the narrowest feature ({narrow:.3g}) with "
            f"{narrow / grid.h:.1f} cells, need {MIN_FEATURE_CELLS}"
        )


# ---------------------------------------------------------------------------
# Quotients
# ---------------------------------------------------------------------------


def poincare_quotient(u: ScalarField, params: ExponentParams) -> float:
    """‖u - u_a‖^p in L^p(ρ^a) over ‖∇u‖^p in L^p(ρ^b)."""
    p = params.p
    den = weighted_lp_norm(gradient(u), p, params.b) ** p
    if den == 0:
        raise ConstantsError("zero denominator: u is constant")
    centered = ScalarField(u.grid, u.values - weighted_mean(u, params.a))
    return weighted_lp_norm(centered, p, params.a) ** p / den


def korn_quotient(
    v: VectorField,
    params: ExponentParams,
    kind: str = "korn",
    cube: Box | None = None,
) -> float:
    """‖Dv‖ over ‖ε(v)‖ plus a lower-order term chosen by ``kind``.

    korn uses ‖v‖ on the domain, korn_tilde uses ‖Dv‖ on the cube and
    korn_lp_cube uses ‖v‖ on the cube, all in L^p(ρ^a).
    """
    p, a = params.p, params.a
    du, eps = sym_gradient(v)
    num = weighted_lp_norm(du, p, a)
    first = weighted_lp_norm(eps, p, params.b - p)
    if kind == "korn":
        second = weighted_lp_norm(v, p, a)
    elif kind in ("korn_tilde", "korn_lp_cube"):
        if cube is None:
            raise ConstantsError(f"kind {kind} needs a reference cube")
        mask = v.grid.in_box(cube)
        second = weighted_lp_norm(du if kind == "korn_tilde" else v, p, a, mask=mask)
    else:
        raise ConstantsError(f"unknown Korn kind '{kind}'")
    if first + second == 0:
        raise ConstantsError("zero denominator")
    return num / (first + second)


def quotient(problem: QuotientProblem, f: ScalarField | VectorField) -> float:
    if problem.kind == "poincare":
        return poincare_quotient(f, problem.params)
    return korn_quotient(f, problem.params, problem.kind, problem.cube)


# ---------------------------------------------------------------------------
# Sparse operators
# ---------------------------------------------------------------------------


def difference_matrix(grid: Grid) -> sparse.csr_matrix:
    """(2M, M) matrix of the grid partial derivatives, rows [∂x; ∂y]."""
    m = len(grid)
    here = np.arange(m)
    rows, cols, vals = [], [], []
    for axis, (dx, dy) in enumerate(((1, 0), (0, 1))):
        plus, minus = grid.shifted(dx, dy), grid.shifted(-dx, -dy)
        has_p, has_m = plus >= 0, minus >= 0
        if not (has_p | has_m).all():
            raise ConstantsError("grid has isolated cells; refine h")
        span = (has_p.astype(float) + has_m.astype(float)) * grid.h
        rows += [axis * m + here, axis * m + here]
        cols += [np.where(has_p, plus, here), np.where(has_m, minus, here)]
        vals += [1.0 / span, -1.0 / span]
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * m, m)
    )


def edge_matrix(grid: Grid) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Differences across lattice edges and the ρ value at each edge midpoint."""
    m = len(grid)
    here = np.arange(m)
    rows, cols, vals, rho = [], [], [], []
    count = 0
    for dx, dy in ((1, 0), (0, 1)):
        nb = grid.shifted(dx, dy)
        ok = nb >= 0
        src, dst = here[ok], nb[ok]
        e = np.arange(count, count + len(src))
        rows += [e, e]
        cols += [dst, src]
        vals += [np.full(len(src), 1.0 / grid.h), np.full(len(src), -1.0 / grid.h)]
        rho.append(0.5 * (grid.rho[src] + grid.rho[dst]))
        count += len(src)
    matrix = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(count, m)
    )
    return matrix, np.concatenate(rho)


def _strain_matrices(grid: Grid) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Full gradient and symmetric gradient of [v1; v2], four blocks of M rows each."""
    g = difference_matrix(grid)
    m = len(grid)
    gx, gy = g[:m], g[m:]
    zero = sparse.csr_matrix((m, m))
    full = sparse.bmat([[gx, zero], [gy, zero], [zero, gx], [zero, gy]], format="csr")
    off = sparse.hstack([0.5 * gy, 0.5 * gx])
    strain = sparse.vstack(
        [sparse.hstack([gx, zero]), off, off, sparse.hstack([zero, gy])], format="csr"
    )
    return full, strain


def _weights(grid: Grid, a: float, mask: np.ndarray | None = None) -> np.ndarray:
    w = grid.rho**a * grid.h**2
    return w if mask is None else np.where(mask, w, 0.0)


def _norm(op, x: np.ndarray, w: np.ndarray, p: float) -> tuple[float, np.ndarray]:
    """Weighted L^p norm of the block field op @ x and its gradient in x."""
    y = (op @ x).reshape(-1, len(w))
    mag = np.sqrt((y**2).sum(axis=0))
    total = float(np.sum(w * mag**p))
    if total == 0:
        return 0.0, np.zeros_like(x)
    nrm = total ** (1 / p)
    with np.errstate(divide="ignore", invalid="ignore"):
        coeff = np.where(mag > 0, w * mag ** (p - 2), 0.0)
    grad = nrm ** (1 - p) * (op.T @ (coeff * y).ravel())
    return nrm, grad


class _Objective:
    """log of the quotient as a function of the flat field values."""

    def __init__(self, problem: QuotientProblem) -> None:
        grid, params = problem.grid, problem.params
        self.problem = problem
        self.m = len(grid)
        self.p = params.p
        mask = problem.mask
        if problem.kind == "poincare":
            self.dim = self.m
            self.grad = difference_matrix(grid)
            self.w_a = _weights(grid, params.a)
            self.w_b = _weights(grid, params.b)
        else:
            self.dim = 2 * self.m
            self.full, self.strain = _strain_matrices(grid)
            self.w_a = _weights(grid, params.a)
            self.w_eps = _weights(grid, params.b - params.p)
            self.w_low = self.w_a if mask is None else _weights(grid, params.a, mask)
        self.eye = sparse.identity(self.dim, format="csr")

    def project(self, x: np.ndarray) -> np.ndarray:
        if self.problem.kind == "poincare":
            return x - np.dot(self.w_a, x) / self.w_a.sum()
        return x

    def direction(self, g: np.ndarray) -> np.ndarray:
        if self.problem.kind == "poincare":
            return self.project(g - self.w_a * g.sum() / self.w_a.sum())
        return g

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        p = self.p
        if self.problem.kind == "poincare":
            num, g_num = _norm(self.eye, x, self.w_a, p)
            den, g_den = _norm(self.grad, x, self.w_b, p)
            if num == 0 or den == 0:
                return -math.inf, np.zeros_like(x)
            return p * (math.log(num) - math.log(den)), p * (g_num / num - g_den / den)
        num, g_num = _norm(self.full, x, self.w_a, p)
        first, g_first = _norm(self.strain, x, self.w_eps, p)
        low_op = self.full if self.problem.kind == "korn_tilde" else self.eye
        second, g_second = _norm(low_op, x, self.w_low, p)
        den = first + second
        if num == 0 or den == 0:
            return -math.inf, np.zeros_like(x)
        return math.log(num) - math.log(den), g_num / num - (g_first + g_second) / den

    def to_field(self, x: np.ndarray) -> ScalarField | VectorField:
        grid = self.problem.grid
        if self.problem.kind == "poincare":
            return ScalarField(grid, x.copy())
        return VectorField(grid, x.reshape(2, -1).T.copy())


def _flatten(f: ScalarField | VectorField) -> np.ndarray:
    return f.values.copy() if f.values.ndim == 1 else f.values.T.ravel().copy()


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def _random_start(problem: QuotientProblem, rng: np.random.Generator, modes: int = 4):
    grid = problem.grid
    x0, y0, x1, y1 = grid.domain.bbox
    sx = (grid.xy[:, 0] - x0) / (x1 - x0)
    sy = (grid.xy[:, 1] - y0) / (y1 - y0)
    comps = 1 if problem.kind == "poincare" else 2
    out = np.zeros((comps, len(grid)))
    for c in range(comps):
        for k in range(modes + 1):
            for m in range(modes + 1):
                coef = rng.standard_normal() / (1 + k + m) ** 2
                out[c] += coef * np.cos(k * math.pi * sx) * np.cos(m * math.pi * sy)
    return out.ravel()


def _ascend(obj: _Objective, x0: np.ndarray, budget: int) -> tuple[float, np.ndarray, int]:
    """Normalized gradient ascent with a backtracking step on the log-quotient."""
    x = obj.project(x0)
    x /= np.linalg.norm(x) or 1.0
    val, g = obj(x)
    step = 0.1
    it = 0
    for it in range(1, budget + 1):
        d = obj.direction(g)
        nd = float(np.linalg.norm(d))
        if nd == 0 or not math.isfinite(val):
            break
        improved = False
        while step > 1e-10:
            trial = obj.project(x + step * d / nd)
            trial /= np.linalg.norm(trial)
            tv, tg = obj(trial)
            if tv > val:
                improved = tv - val > 1e-10 * max(1.0, abs(val))
                x, val, g = trial, tv, tg
                step *= 1.5
                break
            step *= 0.5
        if not improved:
            break
    return math.exp(val) if math.isfinite(val) else 0.0, x, it


def _quadratic_forms(problem: QuotientProblem):
    """Numerator and denominator matrices of the p = 2 pencil, and the deflation."""
    grid, params = problem.grid, problem.params
    if problem.kind == "poincare":
        edges, rho_e = edge_matrix(grid)
        den = (edges.T @ sparse.diags(rho_e**params.b * grid.h**2) @ edges).tocsr()
        w = _weights(grid, params.a)
        num = sparse.diags(w).tocsr()

        def deflate(x):
            return x - np.dot(w, x) / w.sum()

        return num, den, deflate
    full, strain = _strain_matrices(grid)
    w_a = np.tile(_weights(grid, params.a), 4)
    w_e = np.tile(_weights(grid, params.b - 2), 4)
    num = (full.T @ sparse.diags(w_a) @ full).tocsr()
    den = strain.T @ sparse.diags(w_e) @ strain
    mask = problem.mask
    if problem.kind == "korn":
        den = den + sparse.diags(np.tile(_weights(grid, params.a), 2))
    elif problem.kind == "korn_tilde":
        den = den + full.T @ sparse.diags(np.tile(_weights(grid, params.a, mask), 4)) @ full
    else:
        den = den + sparse.diags(np.tile(_weights(grid, params.a, mask), 2))
    m = len(grid)

    def deflate(x):
        if problem.kind != "korn_tilde":
            return x
        y = x.reshape(2, m)
        return (y - y.mean(axis=1, keepdims=True)).ravel()

    return num, den.tocsr(), deflate


def _power_iteration(problem: QuotientProblem, x0: np.ndarray, budget: int):
    """Largest eigenvalue of den⁻¹ num by power iteration with CG inner solves."""
    num, den, deflate = _quadratic_forms(problem)
    x = deflate(x0)
    x /= np.linalg.norm(x)
    mu_prev = None
    mu = 0.0
    for it in range(1, budget + 1):
        rhs = num @ x
        y, info = cg(den, rhs, x0=x, rtol=1e-10, maxiter=20 * len(x))
        if info < 0:
            raise ConstantsError("conjugate gradient breakdown in the denominator form")
        y = deflate(y)
        norm = np.linalg.norm(y)
        if norm == 0:
            raise ConstantsError("denominator degenerate on the whole search space")
        x = y / norm
        d = float(x @ (den @ x))
        if d <= 0:
            raise ConstantsError("denominator degenerate on the whole search space")
        mu = float(x @ (num @ x)) / d
        logger.debug("power iteration %d: %.10g", it, mu)
        if mu_prev is not None and abs(mu - mu_prev) < POWER_TOL * abs(mu):
            return mu, x, it, True
        mu_prev = mu
    return mu, x, budget, False


def _warm_starts(problem: QuotientProblem) -> list[ScalarField | VectorField]:
    grid = problem.grid
    x0, y0, x1, y1 = grid.domain.bbox
    center = (0.5 * (x0 + x1), 0.5 * (y0 + y1))
    if problem.kind == "poincare":
        extra = [ScalarField(grid, grid.xy[:, 0].copy())]
    else:
        extra = [rotation_test_field(ScalarField(grid, grid.rho.copy()), center)]
    return [*problem.warm_starts, *extra]


def estimate_constant(
    problem: QuotientProblem,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    threads: int = 1,
) -> ConstantEstimate:
    """Lower bound on the best constant of ``problem``.

    p = 2 runs power iteration on the quadratic pencil and reports the quotient
    of its maximizer; other p run gradient ascent from eight seeded random starts
    plus the warm starts. The result is never below the quotient of any warm start.
    """
    check_resolution(problem.grid)
    obj = _Objective(problem)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(RESTARTS)]
    starts = [_random_start(problem, rng) for rng in rngs]
    warm = _warm_starts(problem)

    candidates: list[tuple[float, ScalarField | VectorField]] = []
    for w in warm:
        try:
            candidates.append((quotient(problem, w), w))
        except (ConstantsError, FieldError):
            logger.debug("warm start skipped: zero denominator")

    if problem.params.p == 2:
        mu, x, iterations, converged = _power_iteration(problem, starts[0], budget)
        maximizer = obj.to_field(x)
        value = quotient(problem, maximizer)
        candidates.append((value, maximizer))
        method, restarts = "eigen", [value]
        logger.info("%s eigen path: pencil value %.8g, quotient %.8g", problem.kind, mu, value)
    else:
        inits = starts + [_flatten(w) for w in warm]

        def run(x0: np.ndarray) -> tuple[float, np.ndarray, int]:
            return _ascend(obj, x0, budget)

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            results = list(pool.map(run, inits))
        iterations = sum(r[2] for r in results)
        restarts = [r[0] for r in results[:RESTARTS]]
        for _, x, _ in results:
            f = obj.to_field(x)
            try:
                candidates.append((quotient(problem, f), f))
            except ConstantsError:
                continue
        tail = restarts[-3:]
        converged = min(tail) > 0 and max(tail) / min(tail) - 1 <= AGREE_TOL
        method = "ascent"
        logger.info("%s ascent: restarts %s", problem.kind, ", ".join(f"{r:.6g}" for r in restarts))

    if not candidates:
        raise ConstantsError("denominator degenerate on the whole search space")
    best, field_ = max(candidates, key=lambda c: c[0])
    return ConstantEstimate(
        kind=problem.kind,
        lower_bound=float(best),
        method=method,
        iterations=iterations,
        converged=converged,
        seed=seed,
        restarts=restarts,
        maximizer=np.atleast_2d(field_.values.T).tolist(),
    )


def neumann_oracle(grid: Grid, params: ExponentParams | None = None) -> float:
    """Reciprocal of the first nonzero eigenvalue of the weighted discrete Neumann Laplacian."""
    params = params or ExponentParams(p=2, q=2, a=0, b=0)
    if len(grid) > 6000:
        raise ConstantsError(f"dense oracle limited to 6000 cells, grid has {len(grid)}")
    edges, rho_e = edge_matrix(grid)
    stiff = (edges.T @ sparse.diags(rho_e**params.b * grid.h**2) @ edges).toarray()
    mass = np.diag(_weights(grid, params.a))
    values = linalg.eigh(stiff, mass, eigvals_only=True, subset_by_index=[0, 1])
    if values[1] <= 0:
        raise ConstantsError("disconnected grid: Neumann spectrum has a repeated zero")
    return float(1.0 / values[1])


# ---------------------------------------------------------------------------
# Blow-up along rooms
# ---------------------------------------------------------------------------


def blowup_experiment(
    spec: RoomsSpec,
    params: ExponentParams,
    kind: str = "korn",
    rooms: list[int] | None = None,
    policy: HPolicy | None = None,
) -> BlowupReport:
    """Korn quotients of the room fields u_i, whose lower-order terms vanish on Q_0.

    Growth ≥ 10 with a predicted failure gives ``fails``; growth ≤ 2 with a
    predicted success gives ``consistent-holds``; anything else is a mismatch.
    """
    if kind not in KINDS[1:]:
        raise ConstantsError(f"blow-up needs a Korn kind, got '{kind}'")
    if params.p <= 1:
        raise ConstantsError(f"Korn quotients need p > 1, got p={params.p}")
    domain, placement = rooms_and_corridors(spec)
    indices = rooms or [r.index for r in placement.rooms]
    if len(indices) < 2:
        raise ConstantsError("blow-up needs at least two rooms")
    p = params.p
    e = predicted_exponents(params)
    exponent = (e["room_Du"] - min(e["corridor_eps"], e["room_u"])) / p
    rows = []
    for i in indices:
        vals = room_integrals(domain, placement, i, params, policy)
        num = (vals["room_Du"] + vals["corridor_Du"]) ** (1 / p)
        first = (vals["room_eps"] + vals["corridor_eps"]) ** (1 / p)
        # u_i vanishes on the unit square Q_0
        second = (vals["room_u"] + vals["corridor_u"]) ** (1 / p) if kind == "korn" else 0.0
        if first + second == 0:
            raise ConstantsError(f"zero denominator for room {i}")
        r = placement.room(i).r
        rows.append((i, r, num / (first + second), exponent))
        logger.debug("room %d: quotient %.6g", i, rows[-1][2])
    lo = min(rows, key=lambda row: row[0])
    hi = max(rows, key=lambda row: row[0])
    growth = hi[2] / lo[2]
    fails = predicts_korn_failure(params)
    if fails and growth >= 10:
        verdict = Verdict.FAILS
    elif not fails and growth <= 2:
        verdict = Verdict.CONSISTENT_HOLDS
    else:
        verdict = Verdict.MISMATCH
    logger.info("blow-up growth %.4g over rooms %d..%d: %s", growth, lo[0], hi[0], verdict.value)
    return BlowupReport(
        params=params,
        kind=kind,
        rows=rows,
        predicted=Verdict.FAILS if fails else Verdict.HOLDS,
        growth=growth,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# Korn to Poincaré through rotation fields
# ---------------------------------------------------------------------------


def _box_distance(xy: np.ndarray, box: Box) -> np.ndarray:
    dx = np.maximum(0.0, np.maximum(box[0] - xy[:, 0], xy[:, 0] - box[2]))
    dy = np.maximum(0.0, np.maximum(box[1] - xy[:, 1], xy[:, 1] - box[3]))
    return np.hypot(dx, dy)


def _boxes_gap(a: Box, b: Box) -> float:
    dx = max(0.0, a[0] - b[2], b[0] - a[2])
    dy = max(0.0, a[1] - b[3], b[1] - a[3])
    return math.hypot(dx, dy)


def admissible_rectangles(domain: RectDomain, cube: Box, h: float) -> list[Box]:
    """Corner boxes of each component rectangle kept far enough from the cube."""
    out: list[Box] = []
    for x0, y0, x1, y1 in domain.array:
        short = min(x1 - x0, y1 - y0)
        s, inset = short / 4, short / 8
        for bx in (x0 + inset, x1 - inset - s):
            for by in (y0 + inset, y1 - inset - s):
                box = (float(bx), float(by), float(bx + s), float(by + s))
                if _boxes_gap(box, cube) > 8 * h and box not in out:
                    out.append(box)
    return out


def ramp(grid: Grid, box: Box, cube: Box) -> ScalarField:
    """1 near ``box``, 0 near ``cube``, linear in the distance to the cube between."""
    gap = _boxes_gap(box, cube)
    h = grid.h
    if gap <= 8 * h:
        raise ConstantsError(f"rectangle {box} is within 8 cells of the cube")
    d = _box_distance(grid.xy, cube)
    return ScalarField(grid, np.clip((d - 2 * h) / (gap - 4 * h), 0.0, 1.0))


def smooth_random_field(grid: Grid, rng: np.random.Generator, modes: int = 3) -> ScalarField:
    x0, y0, x1, y1 = grid.domain.bbox
    sx = (grid.xy[:, 0] - x0) / (x1 - x0)
    sy = (grid.xy[:, 1] - y0) / (y1 - y0)
    values = np.zeros(len(grid))
    for k in range(modes + 1):
        for m in range(modes + 1):
            values += rng.standard_normal() * np.sin((k + 1) * math.pi * sx + m * sy)
    return ScalarField(grid, values)


def korn_poincare_pipeline(
    domain: RectDomain,
    params: ExponentParams,
    cube: Box,
    h: float,
    rects: list[Box] | None = None,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
) -> PipelineReport:
    """Turn a korn_tilde estimate into ∫_A ρ^a ≤ C ∫ |∇u|^p ρ^(b-p) for ramps u.

    With v = ((x₂ - y₂)u, (y₁ - x₁)u) and y the cube center, |ε(v)| ≤ 2|x - y||∇u|
    and v is a rotation where u = 1, so C = C_K^p 2^(p/2) diam(Ω)^p.
    """
    check_cube(domain, cube)
    grid = Grid.build(domain, h)
    p = params.p
    y = (0.5 * (cube[0] + cube[2]), 0.5 * (cube[1] + cube[3]))
    dist = np.hypot(grid.xy[:, 0] - y[0], grid.xy[:, 1] - y[1])

    rng = np.random.default_rng(seed)
    max_excess = -math.inf
    pointwise_ok = True
    for _ in range(5):
        u = smooth_random_field(grid, rng)
        grad = gradient(u).magnitude()
        _, eps = sym_gradient(rotation_test_field(u, y))
        excess = eps.magnitude() - 2 * dist * grad
        slack = 4 * h * float(grad.max())
        max_excess = max(max_excess, float(excess.max()))
        pointwise_ok &= bool((excess <= slack).all())

    boxes = rects if rects is not None else admissible_rectangles(domain, cube, h)
    if not boxes:
        raise ConstantsError("no admissible rectangle lies far enough from the cube")
    ramps = [ramp(grid, box, cube) for box in boxes]
    problem = QuotientProblem(
        "korn_tilde",
        params,
        grid,
        cube=cube,
        warm_starts=[rotation_test_field(u, y) for u in ramps],
    )
    korn = estimate_constant(problem, budget=budget, seed=seed, threads=threads).lower_bound
    constant = korn**p * 2 ** (p / 2) * domain.diameter ** p

    checks = []
    for box, u in zip(boxes, ramps):
        lhs = float(np.sum(_weights(grid, params.a, grid.in_box(box))))
        rhs = constant * float(np.sum(gradient(u).magnitude() ** p * _weights(grid, params.b - p)))
        checks.append(RectangleCheck(box=list(box), lhs=lhs, rhs=rhs, holds=lhs <= rhs))
    ok = pointwise_ok and all(c.holds for c in checks)
    return PipelineReport(
        params=params,
        cube=list(cube),
        pointwise_ok=pointwise_ok,
        max_excess=max_excess,
        korn_constant=korn,
        constant=constant,
        rectangles=checks,
        verdict=Verdict.HOLDS if ok else Verdict.FAILS,
    )
