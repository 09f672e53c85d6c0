"""Exponent calculators, threshold predicates and log-log slope measurement."""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import beta as beta_fn

from kornlab.errors import ScalingError
from kornlab.fields import Grid, example_field, sym_gradient, weighted_integral
from kornlab.geom import RectDomain
from kornlab.models import ExponentParams, FitReport, PlacementTable, ScalingReport, Verdict

logger = logging.getLogger(__name__)

QUANTITIES = ("room_Du", "corridor_eps", "room_u")
# Relative tolerance on a fitted slope.
SLOPE_TOL = 0.02
_EQ_TOL = 1e-12


class HPolicy(BaseModel):
    """Per-room grid spacing: h ∝ min(r^σ, r^τ) in corridors and h ∝ r in rooms."""

    cells_across: int = Field(default=16, ge=1)
    room_cells: int = Field(default=64, ge=4)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def fit_line(xs: np.ndarray, ys: np.ndarray) -> FitReport:
    """Least-squares line y = slope * x + intercept with its r²."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    report = FitReport(samples=[(float(a), float(b)) for a, b in zip(x, y)])
    if len(x) < 2 or np.ptp(x) == 0:
        return report
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    report.slope = float(slope)
    report.intercept = float(intercept)
    report.r_squared = float(min(1.0, max(0.0, r2)))
    return report


def fit_loglog(xs: np.ndarray, ys: np.ndarray) -> FitReport:
    """Fit log y against log x; samples keep the original values."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if (x <= 0).any() or (y <= 0).any():
        raise ScalingError("log-log fit needs positive samples")
    report = fit_line(np.log(x), np.log(y))
    report.samples = [(float(a), float(b)) for a, b in zip(x, y)]
    return report


# ---------------------------------------------------------------------------
# Closed-form exponents and predicates
# ---------------------------------------------------------------------------


def predicted_exponents(params: ExponentParams) -> dict[str, float]:
    """Scaling exponents in r_i of the three rooms-and-corridors integrals."""
    p, a, b = params.p, params.a, params.b
    return {
        "room_Du": a + 2,
        "corridor_eps": params.sigma * (b + 1) + params.tau * (1 - p),
        "room_u": a + p + 2,
    }


def _trichotomy(lhs: float, rhs: float) -> Verdict:
    if abs(lhs - rhs) <= _EQ_TOL * max(1.0, abs(lhs), abs(rhs)):
        return Verdict.BORDERLINE
    return Verdict.HOLDS if lhs > rhs else Verdict.FAILS


def _require_korn(params: ExponentParams) -> None:
    if params.p <= 1:
        raise ScalingError(f"Korn inequalities need p > 1, got p={params.p}")


def korn_verdict_sjohn(params: ExponentParams) -> Verdict:
    """n + a against s(n + b - 1) - p + 1.

    Equality is borderline except on John domains (s = 1), where it is the
    classical unweighted Korn inequality.
    """
    _require_korn(params)
    n = params.n
    lhs = n + params.a
    rhs = params.s * (n + params.b - 1) - params.p + 1
    verdict = _trichotomy(lhs, rhs)
    if verdict is Verdict.BORDERLINE and params.s == 1:
        return Verdict.HOLDS
    return verdict


def qhbc_factor(beta: float) -> float:
    return 2 * beta / (1 + beta)


def korn_verdict_qhbc(params: ExponentParams) -> Verdict:
    """(a + n)·2β/(1 + β) against n + b - p; equality is left open."""
    _require_korn(params)
    n = params.n
    return _trichotomy((params.a + n) * qhbc_factor(params.beta), n + params.b - params.p)


def _poincare_side_conditions(params: ExponentParams) -> None:
    p, q, n = params.p, params.q, params.n
    if q < p:
        raise ScalingError(f"side condition p <= q violated: p={p}, q={q}")
    if p < n and q > n * p / (n - p) + _EQ_TOL:
        raise ScalingError(
            f"side condition q <= np/(n-p) = {n * p / (n - p):.6g} violated: q={q}"
        )


def poincare_qhbc_sum(params: ExponentParams) -> float:
    n = params.n
    return (params.a + n) / params.q * qhbc_factor(params.beta) + (
        params.p - n - params.b
    ) / params.p


def poincare_verdict_qhbc(params: ExponentParams) -> Verdict:
    """Sign of (a + n)/q·2β/(1 + β) + (p - n - b)/p under the side conditions."""
    _poincare_side_conditions(params)
    total = poincare_qhbc_sum(params)
    if abs(total) <= _EQ_TOL:
        return Verdict.NOT_GUARANTEED
    return Verdict.HOLDS if total > 0 else Verdict.FAILS


def poincare_verdict_sjohn(params: ExponentParams) -> Verdict:
    n = params.n
    lhs = n + params.a
    rhs = params.s * (n + params.b - 1) - params.p + 1
    return Verdict.HOLDS if lhs >= rhs - _EQ_TOL else Verdict.NOT_GUARANTEED


def reduced_verdict_sjohn(params: ExponentParams) -> Verdict:
    """Rooms-and-corridors with τ = 1: Korn fails when a + 2 < σ(b + 1) + 1 - p."""
    _require_korn(params)
    return _trichotomy(params.a + 2, params.sigma * (params.b + 1) + 1 - params.p)


def reduced_verdict_qhbc(params: ExponentParams) -> Verdict:
    """Rooms-and-corridors with τ = σ: Korn fails when a + 2 < σ(b + 2 - p)."""
    _require_korn(params)
    return _trichotomy(params.a + 2, params.sigma * (params.b + 2 - params.p))


def exponent_condition_qhbc(params: ExponentParams) -> tuple[bool, float]:
    """(a/n + 1)·2β/((1 + β)q) + 1/n - 1/p - b/(np) > 0, with its value."""
    n, p, q = params.n, params.p, params.q
    value = (params.a / n + 1) * qhbc_factor(params.beta) / q + 1 / n - 1 / p - params.b / (n * p)
    return value > 0, value


def predicts_korn_failure(params: ExponentParams) -> bool:
    """The room estimate a + 2 lies below both competing exponents."""
    e = predicted_exponents(params)
    return e["room_Du"] < min(e["corridor_eps"], e["room_u"]) - _EQ_TOL


def corridor_eps_oracle(r: float, params: ExponentParams) -> float:
    """Closed form of ∫_C |ε(u)|^p ρ^(b-p) with ρ = r^σ/2 - |x - x_i| across the corridor.

    Equals 2^(p+1) t^(1-p) (w/2)^(b+1) B(b - p + 1, p + 1) with w = r^σ, t = r^τ.
    """
    p, b = params.p, params.b
    if b - p <= -1:
        raise ScalingError(f"corridor integral diverges for b - p = {b - p}")
    w = r**params.sigma
    t = r**params.tau
    return 2 ** (p + 1) * t ** (1 - p) * (w / 2) ** (b + 1) * beta_fn(b - p + 1, p + 1)


# ---------------------------------------------------------------------------
# Per-room measurement
# ---------------------------------------------------------------------------


def room_grids(
    domain: RectDomain, placement: PlacementTable, i: int, policy: HPolicy
) -> tuple[Grid, Grid]:
    """Room and corridor grids of room i, each resolving its own feature."""
    room = placement.room(i)
    w = room.r**placement.sigma
    t = room.r**placement.tau
    if policy.cells_across < 8:
        raise ScalingError(
            f"corridor of room {i} under-resolved: {policy.cells_across} cells across (< 8)"
        )
    corridor = Grid.build(domain, min(w, t) / policy.cells_across, window=tuple(room.corridor))
    chamber = Grid.build(domain, room.r / policy.room_cells, window=tuple(room.room))
    if len(corridor) == 0 or len(chamber) == 0:
        raise ScalingError(f"room {i} produced an empty grid")
    return chamber, corridor


def room_integrals(
    domain: RectDomain,
    placement: PlacementTable,
    i: int,
    params: ExponentParams,
    policy: HPolicy | None = None,
) -> dict[str, float]:
    """p-th power integrals of u_i split by region.

    Keys: room_Du, room_u, corridor_eps, corridor_Du, corridor_u (room_eps vanishes).
    """
    policy = policy or HPolicy()
    p, a, b = params.p, params.a, params.b
    out: dict[str, float] = {}
    for label, grid in zip(("room", "corridor"), room_grids(domain, placement, i, policy)):
        u, _ = example_field(placement, i, grid)
        du, eps = sym_gradient(u)
        out[f"{label}_Du"] = weighted_integral(du.magnitude() ** p, grid, a)
        out[f"{label}_eps"] = weighted_integral(eps.magnitude() ** p, grid, b - p)
        out[f"{label}_u"] = weighted_integral(u.magnitude() ** p, grid, a)
    return out


def measure_scaling(
    domain: RectDomain,
    placement: PlacementTable,
    params: ExponentParams,
    quantity: str,
    policy: HPolicy | None = None,
    rooms: list[int] | None = None,
) -> ScalingReport:
    """Fit log(integral) against log(r_i) over the rooms and compare with the prediction."""
    if quantity not in QUANTITIES:
        raise ScalingError(f"unknown quantity '{quantity}', expected one of {QUANTITIES}")
    if params.n != 2:
        raise ScalingError("measurements are two-dimensional; set n = 2")
    indices = rooms or [r.index for r in placement.rooms]
    if len(indices) < 3:
        raise ScalingError(f"need at least 3 rooms, got {len(indices)}")
    rs, values = [], []
    for i in indices:
        vals = room_integrals(domain, placement, i, params, policy)
        rs.append(placement.room(i).r)
        values.append(vals[quantity])
        logger.debug("room %d: %s = %.6g", i, quantity, vals[quantity])
    fit = fit_loglog(np.array(rs), np.array(values))
    predicted = predicted_exponents(params)[quantity]
    rel = abs(fit.slope - predicted) / max(1.0, abs(predicted))
    report = ScalingReport(
        params=params,
        quantity=quantity,
        samples=fit.samples,
        fitted_slope=fit.slope,
        predicted_slope=predicted,
        rel_error=rel,
        intercept=fit.intercept,
        verdict=Verdict.HOLDS if rel <= SLOPE_TOL else Verdict.FAILS,
    )
    if quantity == "corridor_eps":
        report.notes.append("exact geometric ρ used in the corridor, not r^σ - |x - x_i|")
    logger.info(
        "%s slope %.6g (predicted %.6g, rel. error %.3g)", quantity, fit.slope, predicted, rel
    )
    return report

