"""Covering-based Hausdorff measure and dimension in the Fisher distance,
and the Jeffrey density sqrt(det G).

Point clouds carry a matrix of pairwise Fisher-distance estimates. Greedy
covers (lexicographic pick order, balls of radius delta/2) bound every
cover set's diameter by delta; premeasures use each set's *actual*
diameter, which is what makes 1-d estimates track curve length instead of
double-counting the greedy radius.

Distance matrices come from cumulative segment lengths for 1-parameter
models, pairwise path optimization (4 interior nodes) for higher
dimensions, or cheaper straight-segment / midpoint evaluations for dense
clouds where the metric barely turns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .distance import DistanceOptions, _segment_lengths, fisher_distance
from .errors import (
    DegenerateRegionError,
    DomainError,
    InsufficientScaleError,
    IntegrationError,
    SparseCloudError,
    UsageError,
)
from .fisher import directional_form, fisher_matrix
from .markov import MarkovKernel, pushforward_model
from .models import ParamModel
from .quadrature import gauss_legendre_rule, panel_nodes_weights, uniform_edges


def alpha_k(k) -> float:
    """Volume normalizer pi^(k/2) / Gamma(1 + k/2) for real dimension k >= 0.

    Matches the Lebesgue volume of the closed unit ball at integer k:
    alpha_0 = 1, alpha_1 = 2, alpha_2 = pi, alpha_3 = 4 pi / 3.
    """
    k = float(k)
    if k < 0:
        raise DomainError("dimension must be nonnegative")
    return float(np.exp(0.5 * k * np.log(np.pi) - gammaln(1.0 + 0.5 * k)))


@dataclass(frozen=True)
class MetricCloud:
    """Parameter points plus pairwise Fisher-distance estimates."""

    points: np.ndarray
    dist: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        d = np.asarray(self.dist, dtype=float)
        pts.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dist", d)
        M = pts.shape[0]
        if d.shape != (M, M):
            raise UsageError("distance matrix must be square over the points")
        if np.any(np.abs(np.diag(d)) > 0):
            raise UsageError("distance matrix needs a zero diagonal")
        if np.max(np.abs(d - d.T), initial=0.0) > 1e-12:
            raise UsageError("distance matrix must be symmetric")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def diameter(self) -> float:
        return float(np.max(self.dist, initial=0.0))

    def mesh(self) -> float:
        """Largest nearest-neighbor distance (0 for a single point)."""
        if self.size < 2:
            return 0.0
        d = self.dist + np.diag(np.full(self.size, np.inf))
        return float(np.max(np.min(d, axis=1)))

    def triangle_defect(self, rng=None, samples=200) -> float:
        """Worst sampled triangle violation d(i,k) - d(i,j) - d(j,k)."""
        if self.size < 3:
            return 0.0
        rng = rng or np.random.default_rng(0)
        worst = -np.inf
        for _ in range(samples):
            i, j, k = rng.choice(self.size, size=3, replace=False)
            worst = max(worst, self.dist[i, k] - self.dist[i, j] - self.dist[j, k])
        return float(worst)


def _lex_order(points) -> np.ndarray:
    return np.lexsort(points.T[::-1])


def greedy_cover(cloud: MetricCloud, delta) -> list:
    """Greedy delta-cover: sets of points within delta/2 of a representative.

    Representatives are picked in lexicographic parameter order, so the
    cover is deterministic. Returns a list of (member_indices, diameter).
    """
    if delta <= 0:
        raise UsageError("cover scale must be positive")
    order = _lex_order(cloud.points)
    covered = np.zeros(cloud.size, dtype=bool)
    sets = []
    r = 0.5 * float(delta)
    for idx in order:
        if covered[idx]:
            continue
        members = np.nonzero(~covered & (cloud.dist[idx] <= r))[0]
        covered[members] = True
        diam = float(np.max(cloud.dist[np.ix_(members, members)])) if members.size > 1 else 0.0
        sets.append((members, diam))
    return sets


def covering_number(cloud: MetricCloud, delta) -> int:
    """Size of the greedy delta-net."""
    return len(greedy_cover(cloud, delta))


def covering_profile(cloud: MetricCloud, deltas, k=None):
    """Covering counts (and raw premeasures) over a decreasing schedule.

    A cover built at a finer scale is admissible at every coarser scale,
    so the reported count at each scale is the minimum over the greedy
    nets at that scale and all finer ones; this restores the monotonicity
    the raw greedy heuristic can occasionally violate by one set.
    Premeasures stay per-level diagnostics (sum of per-set diameters to
    the k-th power), without cross-scale minimization.
    """
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1]
    ak = alpha_k(k) if k is not None else None
    raw_counts = []
    pres = [] if ak is not None else None
    for d in deltas:
        sets = greedy_cover(cloud, d)
        raw_counts.append(len(sets))
        if ak is not None:
            pres.append(ak * float(np.sum([(0.5 * diam) ** k for _, diam in sets])))
    counts = np.minimum.accumulate(np.asarray(raw_counts)[::-1])[::-1]
    return deltas, counts, np.asarray(pres) if pres is not None else None


@dataclass(frozen=True)
class CoverReport:
    deltas: np.ndarray
    counts: np.ndarray
    premeasures: np.ndarray
    k: float
    estimate: float
    stable: bool


def default_schedule(cloud: MetricCloud, levels=6) -> np.ndarray:
    """Geometric scale schedule diam/4, diam/8, ... (halving, ``levels`` long)."""
    diam = cloud.diameter()
    if diam <= 0:
        raise UsageError("cloud has zero diameter; no scales to build")
    return diam / 4.0 / (2.0 ** np.arange(levels))


def hausdorff_measure_estimate(
    cloud: MetricCloud, k, deltas=None, levels=6, enforce_density=True
) -> CoverReport:
    """Premeasure sum alpha_k (diam_j / 2)^k over greedy covers per scale.

    The reported estimate is the value at the smallest scale; the report is
    flagged unstable when the last two scales disagree by more than 10%,
    which is the expected signature of k below the cloud's dimension.
    """
    k = float(k)
    if k < 0:
        raise DomainError("dimension must be nonnegative")
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1] if deltas is not None else default_schedule(cloud, levels)
    if enforce_density and cloud.mesh() > float(np.min(deltas)) / 4.0:
        raise SparseCloudError(
            f"cloud mesh {cloud.mesh():.3g} too coarse for scale {np.min(deltas):.3g}"
        )
    deltas, counts, pres = covering_profile(cloud, deltas, k=k)
    stable = True
    if len(pres) >= 2:
        a, b = pres[-2], pres[-1]
        stable = abs(a - b) <= 0.10 * max(abs(b), 1e-300)
    return CoverReport(deltas, counts, pres, k, float(pres[-1]), stable)


def hausdorff_dimension_estimate(cloud: MetricCloud, deltas=None) -> float:
    """Least-squares slope of log N(delta) against log(1/delta).

    Scales below 2.5x the cloud mesh are excluded (covering numbers
    saturate there) as are scales where the net collapses to a single
    set next to larger informative scales. Fewer than three usable scales
    raise InsufficientScaleError; a cloud with zero diameter has dimension
    0 by convention.
    """
    diam = cloud.diameter()
    if diam <= 0:
        return 0.0
    if deltas is None:
        lo = max(2.5 * cloud.mesh(), diam / 256.0)
        hi = diam / 2.0
        if lo >= hi:
            raise InsufficientScaleError("mesh too coarse relative to the diameter")
        n = max(4, int(np.floor(np.log(hi / lo) / np.log(np.sqrt(2.0)))) + 1)
        deltas = hi / np.sqrt(2.0) ** np.arange(n)
    deltas, counts, _ = covering_profile(cloud, deltas)
    counts = counts.astype(float)
    if np.all(counts == 1.0):
        return 0.0
    usable = (deltas >= 2.5 * cloud.mesh()) & (counts < cloud.size)
    if int(np.sum(usable)) < 3:
        raise InsufficientScaleError(
            f"only {int(np.sum(usable))} usable scales; refine the cloud or widen the schedule"
        )
    x = np.log(1.0 / deltas[usable])
    y = np.log(counts[usable])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope


def flat_region_dimension_estimate(
    model: ParamModel, region, n_points=150000, seed=0, levels=5
):
    """Dimension readout for a region over which the metric is constant.

    The greedy net needs thousands of points per ball before its covering
    efficiency stops drifting with scale, which a full pairwise matrix
    cannot afford. When G is constant over the region (verified here by
    sampling; 1% relative tolerance) distances are exactly Mahalanobis, so
    the same greedy cover runs sparsely through a spatial index on
    G^(1/2)-mapped points. The slope window [diam/17, diam/6] balances
    boundary against occupancy bias.
    """
    from scipy.spatial import cKDTree

    lo = np.atleast_1d(np.asarray(region[0], float))
    hi = np.atleast_1d(np.asarray(region[1], float))
    n = lo.size
    corners = np.stack(np.meshgrid(*[(l, h) for l, h in zip(lo, hi)], indexing="ij"), axis=-1).reshape(-1, n)
    samples = np.vstack([corners, 0.5 * (lo + hi)])
    mats = [fisher_matrix(model, th).matrix for th in samples]
    G0 = mats[-1]
    scale = max(float(np.max(np.abs(G0))), 1e-300)
    for m in mats:
        if np.max(np.abs(m - G0)) > 0.01 * scale:
            raise UsageError("metric varies over the region; constant-metric path invalid")
    eigs, U = np.linalg.eigh(G0)
    if np.min(eigs) <= 0:
        raise DegenerateRegionError("metric not positive definite on the region")
    root = U @ np.diag(np.sqrt(eigs)) @ U.T

    rng = np.random.default_rng(seed)
    pts = (lo + (hi - lo) * rng.random((int(n_points), n))) @ root.T
    tree = cKDTree(pts)
    diam = float(np.linalg.norm((hi - lo) @ root.T))
    deltas = diam / 6.0 / np.sqrt(2.0) ** np.arange(levels)

    order = np.lexsort(pts.T[::-1])
    counts = []
    for delta in deltas:
        covered = np.zeros(len(pts), dtype=bool)
        count = 0
        r = 0.5 * delta
        for idx in order:
            if covered[idx]:
                continue
            covered[tree.query_ball_point(pts[idx], r)] = True
            count += 1
        counts.append(count)
    x = np.log(1.0 / deltas)
    y = np.log(counts)
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# Cloud construction
# ---------------------------------------------------------------------------

def cloud_from_params(
    model: ParamModel, params, mode="auto", opts: DistanceOptions | None = None, quad_points=4
) -> MetricCloud:
    """Build a metric cloud over parameter points of a model.

    Modes
    -----
    auto       cumulative segment lengths for 1-parameter models, pairwise
               path optimization with 4 interior nodes otherwise
    cumulative 1-d only: distances are differences of the cumulative
               Fisher length along the sorted parameter axis (exact for
               monotone 1-d families)
    fisher     pairwise optimized distances (upper bounds)
    segment    straight-segment lengths (upper bounds; tight when the
               metric is near-constant across the cloud)
    midpoint   one-point metric evaluation sqrt(d^T G(mid) d); cheapest,
               exact when G is constant
    """
    pts = np.atleast_2d(np.asarray(params, dtype=float))
    if mode == "auto":
        mode = "cumulative" if model.param_dim == 1 else "fisher"
    if mode == "cumulative":
        if model.param_dim != 1:
            raise UsageError("cumulative distances need a 1-parameter model")
        return _cloud_cumulative(model, pts, quad_points)
    if mode == "fisher":
        o = opts or DistanceOptions(interior_nodes=4)
        M = pts.shape[0]
        d = np.zeros((M, M))
        for i in range(M):
            for j in range(i + 1, M):
                d[i, j] = d[j, i] = fisher_distance(model, pts[i], pts[j], o).length
        return MetricCloud(pts, d)
    if mode == "segment":
        return _cloud_segment(model, pts, quad_points)
    if mode == "midpoint":
        return _cloud_midpoint(model, pts)
    raise UsageError(f"unknown cloud mode {mode!r}")


def _cloud_cumulative(model, pts, quad_points) -> MetricCloud:
    order = np.argsort(pts[:, 0])
    sorted_pts = pts[order]
    lengths = np.concatenate(
        [[0.0], np.cumsum(_segment_lengths(model, sorted_pts, quad_points))]
    )
    s = np.empty(pts.shape[0])
    s[order] = lengths
    return MetricCloud(pts, np.abs(s[:, None] - s[None, :]))


def _cloud_segment(model, pts, quad_points) -> MetricCloud:
    M, n = pts.shape
    ii, jj = np.triu_indices(M, k=1)
    a = pts[ii]
    v = pts[jj] - pts[ii]
    xg, wg = gauss_legendre_rule(quad_points)
    qs = 0.5 * (xg + 1.0)
    qw = 0.5 * wg
    d = np.zeros((M, M))
    chunk = max(1, 200_000 // max(model.space.size, 1))
    for start in range(0, ii.size, chunk):
        sl = slice(start, min(start + chunk, ii.size))
        aa = a[sl]
        vv = v[sl]
        thetas = (aa[:, None, :] + qs[None, :, None] * vv[:, None, :]).reshape(-1, n)
        speeds2 = directional_form(model, thetas, np.repeat(vv, quad_points, axis=0))
        lens = np.sqrt(np.maximum(speeds2, 0.0)).reshape(-1, quad_points) @ qw
        d[ii[sl], jj[sl]] = lens
    d = d + d.T
    return MetricCloud(pts, d)


def _cloud_midpoint(model, pts) -> MetricCloud:
    M, n = pts.shape
    ii, jj = np.triu_indices(M, k=1)
    d = np.zeros((M, M))
    chunk = max(1, 200_000 // max(model.space.size, 1))
    for start in range(0, ii.size, chunk):
        sl = slice(start, min(start + chunk, ii.size))
        mids = 0.5 * (pts[ii[sl]] + pts[jj[sl]])
        diffs = pts[jj[sl]] - pts[ii[sl]]
        forms = directional_form(model, mids, diffs)
        d[ii[sl], jj[sl]] = np.sqrt(np.maximum(forms, 0.0))
    d = d + d.T
    return MetricCloud(pts, d)


# ---------------------------------------------------------------------------
# Jeffrey density and measure
# ---------------------------------------------------------------------------

def jeffrey_density(model: ParamModel, theta) -> float:
    """sqrt(det G(theta)); zero wherever the metric is rank deficient."""
    G = fisher_matrix(model, theta)
    det = float(np.linalg.det(G.matrix))
    return float(np.sqrt(max(det, 0.0)))


def _region_rule(region, panels):
    lo, hi = np.atleast_1d(np.asarray(region[0], float)), np.atleast_1d(np.asarray(region[1], float))
    if lo.shape != hi.shape or np.any(lo > hi):
        raise UsageError("region must satisfy lo <= hi componentwise")
    rules = [panel_nodes_weights(uniform_edges(l, h, panels), 4) if h > l else (np.array([l]), np.array([0.0])) for l, h in zip(lo, hi)]
    if lo.size == 1:
        return rules[0][0][:, None], rules[0][1]
    if lo.size == 2:
        (nx, wx), (ny, wy) = rules
        gx, gy = np.meshgrid(nx, ny, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        w = (wx[:, None] * wy[None, :]).ravel()
        return pts, w
    raise UsageError("regions beyond 2 parameters are not supported")


def jeffrey_measure(model: ParamModel, region, panels=24) -> float:
    """Integral of sqrt(det G) over a parameter box by tensor quadrature."""
    pts, w = _region_rule(region, panels)
    if np.all(w == 0.0):
        return 0.0
    vals = np.array([jeffrey_density(model, th) for th in pts])
    if not np.all(np.isfinite(vals)):
        raise IntegrationError("non-finite Jeffrey density in the region")
    return float(np.sum(vals * w))


def jeffrey_vs_hausdorff_check(
    model: ParamModel,
    region,
    k=None,
    cloud_size=1601,
    mode=None,
    panels=24,
    rank_samples=9,
):
    """Compare the Jeffrey measure of a region with the Hausdorff estimate.

    The region must be nondegenerate (full metric rank at sampled points);
    otherwise DegenerateRegionError is raised since the comparison's
    hypotheses fail. The cover schedule halves from diam/4 but keeps the
    smallest scale at least 100x the cloud mesh so the greedy premeasure
    does not leak gap mass.
    """
    n = model.param_dim
    k = float(k) if k is not None else float(n)
    lo = np.atleast_1d(np.asarray(region[0], float))
    hi = np.atleast_1d(np.asarray(region[1], float))
    grid = [np.linspace(l, h, rank_samples) for l, h in zip(lo, hi)]
    mesh_pts = np.stack(np.meshgrid(*grid, indexing="ij"), axis=-1).reshape(-1, n)
    for th in mesh_pts:
        G = fisher_matrix(model, th)
        if G.rank < n:
            raise DegenerateRegionError(f"metric rank {G.rank} < {n} at theta={th}")

    jeffrey = jeffrey_measure(model, region, panels=panels)

    if n == 1:
        params = np.linspace(lo[0], hi[0], cloud_size)[:, None]
        cloud = cloud_from_params(model, params, mode=mode or "cumulative")
    else:
        side = int(round(cloud_size ** (1.0 / n)))
        axes = [np.linspace(l, h, side) for l, h in zip(lo, hi)]
        params = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        cloud = cloud_from_params(model, params, mode=mode or "midpoint")

    deltas = []
    d = cloud.diameter() / 4.0
    floor = max(100.0 * cloud.mesh(), 1e-12)
    while d >= floor and len(deltas) < 8:
        deltas.append(d)
        d /= 2.0
    if len(deltas) < 2:
        raise SparseCloudError("cloud too sparse for a two-scale schedule")
    report = hausdorff_measure_estimate(cloud, k, deltas=np.asarray(deltas))
    rel = abs(report.estimate - jeffrey) / max(abs(jeffrey), 1e-300)
    return {
        "jeffrey": jeffrey,
        "hausdorff": report.estimate,
        "rel_err": rel,
        "report": report,
    }


def _own_scale_estimate(cloud: MetricCloud, k) -> float:
    """Hausdorff estimate on the cloud's own stabilized schedule.

    The schedule halves from diam/4 but never drops below 4.5x the mesh,
    so greedy sets keep chaining instead of degenerating into singletons.
    A cloud whose diameter has collapsed has estimate 0 for k > 0.
    """
    diam = cloud.diameter()
    if diam <= 1e-12:
        return 0.0 if k > 0 else float(cloud.size)
    floor = max(4.5 * cloud.mesh(), 1e-12)
    deltas = [d for d in (diam / 4.0, diam / 8.0, diam / 16.0) if d >= floor]
    if not deltas:
        deltas = [max(diam / 4.0, floor)]
    report = hausdorff_measure_estimate(
        cloud, k, deltas=np.asarray(deltas), enforce_density=False
    )
    return report.estimate


def hausdorff_monotonicity_check(
    kernel: MarkovKernel,
    model: ParamModel,
    params,
    k=1.0,
    mode="segment",
    tolerance=0.10,
):
    """Pushforward never inflates the Hausdorff estimate (within tolerance).

    Both clouds sit over the same parameter points; the pushed cloud's
    distances are measured on the image family. Segment-mode distances
    contract pointwise under the pushforward (the metric does along every
    path), and each side is estimated at its own stabilized scales, which
    is the honest discretization of comparing two measures.
    """
    pts = np.atleast_2d(np.asarray(params, dtype=float))
    before_cloud = cloud_from_params(model, pts, mode=mode)
    pushed = pushforward_model(kernel, model)
    after_cloud = cloud_from_params(pushed, pts, mode=mode)
    before = _own_scale_estimate(before_cloud, k)
    after = _own_scale_estimate(after_cloud, k)
    holds = after <= before * (1.0 + tolerance) + 1e-12
    return {"before": before, "after": after, "holds": holds}
