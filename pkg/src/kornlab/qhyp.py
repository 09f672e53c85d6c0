"""Quasihyperbolic distance, geodesic chains, shadows and domain classifiers.

Geodesics are shortest paths on a graph whose nodes are the centers and
corners of the Whitney cubes. Inside each cube every pair of its nodes is
joined by a straight edge weighted by the trapezoid value of ∫ 1/ρ. Chains
P(Q) come from a coarser shortest-path tree on the cube centers alone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import ConvexHull, QhullError

from kornlab.errors import QuasihyperbolicError, WhitneyError
from kornlab.geom import (
    Point,
    RectDomain,
    WhitneyDecomposition,
    boundary_distance,
    boundary_set_distance,
    whitney_decompose,
)
from kornlab.models import FitReport, Verdict
from kornlab.scaling import fit_line, fit_loglog

logger = logging.getLogger(__name__)

# Sub-intervals of the trapezoid rule along every edge.
EDGE_SUBSAMPLES = 4
# Allowed undershoot of the graph distance below |log(ρ(x)/ρ(y))|.
LOWER_BOUND_TOL = 0.05
# Binary-search resolution of the exponent estimates.
RESOLUTION = 1e-3
# Share of the log-scale range, at the coarse end, that calibrates the constants.
CALIBRATION_SHARE = 0.25


@dataclass(frozen=True, eq=False)
class QhGraph:
    """Weighted graph surrogate of the quasihyperbolic metric."""

    decomp: WhitneyDecomposition
    coords: np.ndarray
    matrix: sparse.csr_matrix
    cube_nodes: list[np.ndarray]
    owner: dict[tuple[int, int], int] = field(repr=False)

    @property
    def domain(self) -> RectDomain:
        return self.decomp.domain


class QhDistance(NamedTuple):
    upper: float
    lower: float


@dataclass(frozen=True, eq=False)
class ChainTable:
    """P(Q) for every cube, and the shadows S(Q) obtained by inversion."""

    base: int
    chains: list[list[int]]
    shadows: list[np.ndarray]


def _edge_weights(domain: RectDomain, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m = EDGE_SUBSAMPLES
    t = np.linspace(0.0, 1.0, m + 1)
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    rho = boundary_set_distance(domain, pts.reshape(-1, 2)).reshape(len(a), m + 1)
    if (rho <= 0).any():
        raise QuasihyperbolicError("graph edge touches the boundary")
    inv = 1.0 / rho
    mean = (inv[:, 1:-1].sum(axis=1) + 0.5 * (inv[:, 0] + inv[:, -1])) / m
    return np.linalg.norm(b - a, axis=1) * mean


def build_graph(decomp: WhitneyDecomposition) -> QhGraph:
    """Centers and corners of all cubes, complete within each closed cube."""
    cubes = decomp.cubes
    keys: dict[tuple[float, float], int] = {}
    coords: list[tuple[float, float]] = []
    for cube in cubes:
        keys[cube.center] = len(coords)
        coords.append(cube.center)

    def node(pt: tuple[float, float]) -> int:
        idx = keys.get(pt)
        if idx is None:
            idx = keys[pt] = len(coords)
            coords.append(pt)
        return idx

    corners = [
        [(b[0], b[1]), (b[2], b[1]), (b[0], b[3]), (b[2], b[3])]
        for b in (c.box for c in cubes)
    ]
    adj = decomp.adjacency
    cube_nodes: list[np.ndarray] = []
    for i, cube in enumerate(cubes):
        x0, y0, x1, y1 = cube.box
        on_boundary = set(corners[i])
        for j in adj.indices[adj.indptr[i] : adj.indptr[i + 1]]:
            for cx, cy in corners[j]:
                if (x0 <= cx <= x1 and cy in (y0, y1)) or (y0 <= cy <= y1 and cx in (x0, x1)):
                    on_boundary.add((cx, cy))
        ids = [i] + sorted(node(pt) for pt in on_boundary)
        cube_nodes.append(np.array(ids, dtype=np.int64))

    rows, cols, owners = [], [], []
    for i, ids in enumerate(cube_nodes):
        a, b = np.triu_indices(len(ids), k=1)
        rows.append(ids[a])
        cols.append(ids[b])
        owners.append(np.full(len(a), i, dtype=np.int64))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    o = np.concatenate(owners)
    lo, hi = np.minimum(r, c), np.maximum(r, c)
    n = len(coords)
    _, first = np.unique(lo * n + hi, return_index=True)
    lo, hi, o = lo[first], hi[first], o[first]

    xy = np.array(coords, dtype=float)
    w = _edge_weights(decomp.domain, xy[lo], xy[hi])
    matrix = sparse.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([lo, hi]), np.concatenate([hi, lo]))),
        shape=(n, n),
    ).tocsr()
    owner = {(int(u), int(v)): int(k) for u, v, k in zip(lo, hi, o)}
    logger.debug("Quasihyperbolic graph: %d nodes, %d edges", n, len(w))
    return QhGraph(decomp, xy, matrix, cube_nodes, owner)


def _attach(graph: QhGraph, points: list[Point]) -> tuple[sparse.csr_matrix, list[int]]:
    """Graph matrix extended by free points joined to every node of the cubes holding them."""
    n = graph.matrix.shape[0]
    rows, cols, weights = [], [], []
    ids = []
    for k, pt in enumerate(points):
        cubes = graph.decomp.covering(pt)
        nodes = np.unique(np.concatenate([graph.cube_nodes[c] for c in cubes]))
        a = np.repeat(np.array([pt], dtype=float), len(nodes), axis=0)
        b = graph.coords[nodes]
        keep = np.linalg.norm(b - a, axis=1) > 0
        w = _edge_weights(graph.domain, a[keep], b[keep])
        rows.extend([n + k] * int(keep.sum()))
        cols.extend(nodes[keep].tolist())
        weights.extend(w.tolist())
        ids.append(n + k)
    m = n + len(points)
    extra = sparse.coo_matrix((weights, (rows, cols)), shape=(m, m))
    return (_pad(graph.matrix, m) + extra + extra.T).tocsr(), ids


def _pad(matrix: sparse.csr_matrix, m: int) -> sparse.csr_matrix:
    coo = matrix.tocoo()
    return sparse.coo_matrix((coo.data, (coo.row, coo.col)), shape=(m, m)).tocsr()


def required_level(rho: float) -> int:
    """Smallest min_level whose coverage guarantee reaches boundary distance rho."""
    return max(0, math.ceil(math.log2(8.0 / rho)))


def qh_distance(
    domain: RectDomain,
    x: Point | tuple[float, float],
    y: Point | tuple[float, float],
    min_level: int,
    graph: QhGraph | None = None,
    relative: bool = False,
) -> QhDistance:
    """Graph upper bound on k(x, y) together with the lower bound |log(ρ(x)/ρ(y))|."""
    x, y = Point(*x), Point(*y)
    rx, ry = boundary_distance(domain, x), boundary_distance(domain, y)
    lower = abs(math.log(rx / ry)) if rx > 0 and ry > 0 else math.inf
    if x == y:
        return QhDistance(0.0, 0.0)
    floor = 8.0 * 2.0**-min_level
    for pt, rho in ((x, rx), (y, ry)):
        if rho < floor and not relative:
            need = required_level(rho)
            raise QuasihyperbolicError(
                f"Point ({pt.x}, {pt.y}) has ρ={rho:.3g} < 8·2^-{min_level}; "
                f"use min_level >= {need}",
                required_level=need,
            )
    if graph is None:
        graph = build_graph(whitney_decompose(domain, min_level, relative=relative))
    try:
        matrix, (ix, iy) = _attach(graph, [x, y])
    except WhitneyError as e:
        raise QuasihyperbolicError(str(e), required_level=min_level + 1) from e
    dist = dijkstra(matrix, directed=False, indices=ix)
    upper = float(dist[iy])
    if not math.isfinite(upper):
        raise QuasihyperbolicError("Points are not connected in the truncated graph")
    if upper < lower - LOWER_BOUND_TOL:
        raise QuasihyperbolicError(
            f"Graph distance {upper:.6g} undershoots the lower bound {lower:.6g}"
        )
    return QhDistance(upper, lower)


def _walk(pred: np.ndarray, target: int) -> list[int]:
    path = [target]
    while pred[path[-1]] >= 0:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def cube_metric(decomp: WhitneyDecomposition) -> sparse.csr_matrix:
    """Touching cubes joined center to center, weighted by ∫ 1/ρ along the segment."""
    upper = sparse.triu(decomp.adjacency, k=1).tocoo()
    centers = decomp.centers
    w = _edge_weights(decomp.domain, centers[upper.row], centers[upper.col])
    n = len(decomp)
    return sparse.coo_matrix((w, (upper.row, upper.col)), shape=(n, n)).tocsr()


def geodesic_chains(graph: QhGraph) -> ChainTable:
    """P(Q) as the path from the base cube to Q in a shortest-path tree of cubes.

    Consecutive cubes of a chain touch. Chains are tree paths, so every prefix of
    a chain is the chain of its last cube and the shadows nest.
    """
    decomp = graph.decomp
    count, _ = connected_components(decomp.adjacency, directed=False)
    if count != 1:
        raise QuasihyperbolicError(f"Truncated decomposition has {count} components")
    base = decomp.base
    _, pred = dijkstra(
        cube_metric(decomp), directed=False, indices=base, return_predecessors=True
    )
    chains: list[list[int]] = []
    for q in range(len(decomp.cubes)):
        chain = _walk(pred, q)
        if chain[0] != base:
            raise QuasihyperbolicError(f"Cube {q} is unreachable from the base cube")
        chains.append(chain)
    members: list[list[int]] = [[] for _ in decomp.cubes]
    for q, chain in enumerate(chains):
        for c in chain:
            members[c].append(q)
    shadows = [np.array(m, dtype=np.int64) for m in members]
    return ChainTable(base=base, chains=chains, shadows=shadows)


def _union_diameter(boxes: np.ndarray) -> float:
    pts = np.concatenate(
        [boxes[:, [0, 1]], boxes[:, [2, 1]], boxes[:, [0, 3]], boxes[:, [2, 3]]], axis=0
    )
    if len(pts) > 8:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).max())


def _envelope_verdict(xs: np.ndarray, resid: np.ndarray, slack: float) -> Verdict:
    """Holds when fine-scale residuals stay below the coarse-scale envelope plus slack."""
    if len(xs) < 4 or np.ptp(xs) == 0:
        return Verdict.INCONCLUSIVE
    cut = np.median(xs)
    fine, coarse = resid[xs <= cut], resid[xs > cut]
    if len(coarse) == 0 or len(fine) == 0:
        return Verdict.INCONCLUSIVE
    return Verdict.HOLDS if fine.max() <= coarse.max() + slack else Verdict.FAILS


def shadow_diameter_fit(
    decomp: WhitneyDecomposition, chains: ChainTable, beta: float
) -> FitReport:
    """Regress log diam S(Q) on log diam Q and test the bound exponent 2β/(1+β)."""
    if not 0 < beta <= 1:
        raise QuasihyperbolicError(f"beta must lie in (0, 1], got {beta}")
    boxes = decomp.boxes
    dq = decomp.sides * math.sqrt(2.0)
    ds = np.array([_union_diameter(boxes[s]) for s in chains.shadows])
    report = fit_loglog(dq, ds)
    slope = 2 * beta / (1 + beta)
    resid = np.log(ds) - slope * np.log(dq)
    report.verdict = _envelope_verdict(np.log(dq), resid, math.log(1.1))
    report.notes.append(f"bound slope 2β/(1+β) = {slope:.6g}")
    return report


def _strata(scale: np.ndarray, key: np.ndarray, samples: int) -> np.ndarray:
    """Per bin of an even split of the scale range, the index with the largest key."""
    edges = np.linspace(scale.min(), scale.max(), samples + 1)
    bins = np.clip(np.searchsorted(edges, scale, side="right") - 1, 0, samples - 1)
    order = np.lexsort((-key, bins))
    _, first = np.unique(bins[order], return_index=True)
    return order[first]


def _coarse(scale: np.ndarray) -> np.ndarray:
    """Mask of the coarsest part of the range; ``scale`` grows toward the boundary."""
    lo, hi = scale.min(), scale.max()
    return scale <= lo + CALIBRATION_SHARE * (hi - lo)


def _tree_profiles(
    coords: np.ndarray, rho: np.ndarray, dist: np.ndarray, pred: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean length from the root and smallest ρ along every shortest-path tree path."""
    n = len(coords)
    step = np.zeros(n)
    linked = pred >= 0
    step[linked] = np.linalg.norm(coords[linked] - coords[pred[linked]], axis=1)
    length = [math.inf] * n
    neck = [0.0] * n
    parent = pred.tolist()
    for v in np.argsort(dist, kind="stable").tolist():
        if not math.isfinite(dist[v]):
            break
        p = parent[v]
        if p < 0:
            length[v], neck[v] = 0.0, float(rho[v])
        else:
            length[v] = length[p] + float(step[v])
            neck[v] = min(float(rho[v]), neck[p])
    return np.array(length), np.array(neck)


def _search(feasible, lo: float, hi: float, largest: bool) -> float:
    """Binary search for the largest (or smallest) feasible exponent."""
    while hi - lo > RESOLUTION:
        mid = 0.5 * (lo + hi)
        if feasible(mid) == largest:
            lo = mid
        else:
            hi = mid
    return lo if largest else hi


def _reachable(decomp: WhitneyDecomposition, dist: np.ndarray) -> tuple[np.ndarray, list[str]]:
    reach = np.nonzero(np.isfinite(dist[: len(decomp)]))[0]
    lost = len(decomp) - len(reach)
    if not lost:
        return reach, []
    logger.warning("%d cubes are not connected to the base point", lost)
    return reach, [f"{lost} cubes unreachable from x0"]


def check_qhbc(
    domain: RectDomain,
    x0: Point | tuple[float, float] | None,
    samples: int,
    min_level: int,
    relative: bool = True,
    slack: float = 0.1,
) -> tuple[float, float, FitReport]:
    """Largest β with k(x, x0) <= (1/β) log(ρ(x0)/ρ(x)) + C0 over the cube centers.

    C0 is calibrated on the coarsest quarter of the log(ρ(x0)/ρ) range, and β is
    feasible when every finer cube obeys the same C0 up to ``slack``. The report
    carries one sample per ρ-stratum: the cube farthest from x0 in k.
    """
    if samples < 16:
        raise QuasihyperbolicError(f"need at least 16 samples, got {samples}")
    decomp = whitney_decompose(domain, min_level, x0=x0, relative=relative)
    graph = build_graph(decomp)
    base = decomp.base
    dist = dijkstra(graph.matrix, directed=False, indices=base)
    reach, notes = _reachable(decomp, dist)
    rho0 = boundary_distance(domain, decomp.cubes[base].center)
    rho = boundary_set_distance(domain, decomp.centers[reach])
    k = dist[reach]
    log_ratio = np.log(rho0 / rho)
    if len(reach) < 4 or np.ptp(log_ratio) == 0:
        report = FitReport(verdict=Verdict.INCONCLUSIVE, notes=[*notes, "degenerate sample set"])
        return 0.0, 0.0, report

    picked = _strata(log_ratio, k, samples)
    report = fit_line(log_ratio[picked], k[picked])
    report.notes.extend(notes)
    coarse = _coarse(log_ratio)

    def feasible(beta: float) -> bool:
        c = k - log_ratio / beta
        return bool(c[~coarse].max() <= c[coarse].max() + slack)

    beta = _search(feasible, RESOLUTION, 1.0, largest=True) if not feasible(1.0) else 1.0
    c0 = k - log_ratio / beta
    witness = int(np.argmax(c0))
    report.witness = [float(v) for v in decomp.centers[reach[witness]]]
    report.verdict = Verdict.HOLDS if beta > 0.05 else Verdict.FAILS
    report.notes.append(
        f"beta={beta:.4g} from {len(reach)} cubes in {len(picked)} strata "
        f"at min_level {min_level}"
    )
    logger.info("QHBC estimate for %s: beta=%.4g", domain.name, beta)
    return beta, float(c0.max()), report


def check_sjohn(
    domain: RectDomain,
    x0: Point | tuple[float, float] | None,
    samples: int,
    min_level: int,
    relative: bool = True,
    slack: float = math.log(2.0),
    forced_s: float | None = None,
    s_max: float = 6.0,
) -> tuple[float, float, FitReport]:
    """Smallest s with ρ(γ(t)) >= C t^s along discrete geodesics from samples to x0.

    Cubes are stratified by the bottleneck, the smallest ρ on their geodesic,
    and each stratum contributes the cube farthest from x0 in arclength. The
    constant is calibrated on the coarsest quarter of the bottleneck range;
    finer samples may fall below it by a factor e^slack at most. With
    ``forced_s`` the exponent is fixed and the verdict says whether it is
    feasible.
    """
    if samples < 16:
        raise QuasihyperbolicError(f"need at least 16 samples, got {samples}")
    decomp = whitney_decompose(domain, min_level, x0=x0, relative=relative)
    graph = build_graph(decomp)
    base = decomp.base
    report = FitReport()
    dist, pred = dijkstra(graph.matrix, directed=False, indices=base, return_predecessors=True)
    reach, report.notes = _reachable(decomp, dist)
    reach = reach[reach != base]
    rho_nodes = boundary_set_distance(domain, graph.coords)
    length, neck = _tree_profiles(graph.coords, rho_nodes, dist, pred)
    if len(reach) < 4 or np.ptp(neck[reach]) == 0:
        report.verdict = Verdict.INCONCLUSIVE
        report.notes.append("degenerate sample set")
        return 0.0, 0.0, report

    picked = reach[_strata(-np.log(neck[reach]), length[reach], samples)]
    log_t: list[np.ndarray] = []
    log_rho: list[np.ndarray] = []
    for q in picked:
        path = _walk(pred, int(q))[::-1]  # from the sample toward x0
        pts = graph.coords[path]
        t = np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))
        log_t.append(np.log(t))
        log_rho.append(np.log(rho_nodes[path[1:]]))
    coarse = _coarse(-np.log(neck[picked]))
    if coarse.all():
        report.verdict = Verdict.INCONCLUSIVE
        report.notes.append("degenerate sample set")
        return 0.0, 0.0, report

    def log_c(s: float) -> np.ndarray:
        # log C(s) per curve: min over vertices of log ρ - s log t
        return np.array([(lr - s * lt).min() for lt, lr in zip(log_t, log_rho)])

    def feasible(s: float) -> bool:
        c = log_c(s)
        return bool(c[~coarse].min() >= c[coarse].min() - slack)

    report.samples = [(float(length[q]), float(neck[q])) for q in picked]
    if forced_s is not None:
        s = forced_s
        report.verdict = Verdict.HOLDS if feasible(s) else Verdict.FAILS
    else:
        s = 1.0 if feasible(1.0) else _search(feasible, 1.0, s_max, largest=False)
        report.verdict = Verdict.HOLDS if s < s_max else Verdict.FAILS
    c = log_c(s)
    witness = int(np.argmin(c))
    report.witness = [float(v) for v in decomp.centers[picked[witness]]]
    report.slope = s
    report.intercept = float(c.min())
    report.notes.append(f"s={s:.4g} from {len(picked)} curves at min_level {min_level}")
    logger.info("s-John estimate for %s: s=%.4g", domain.name, s)
    return s, float(np.exp(c.min())), report
