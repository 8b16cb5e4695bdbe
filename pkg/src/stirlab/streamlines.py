"""Characteristic orbits of steady flows and invariant-set evidence.

Orbits solve dX/dt = u(X) in unwrapped (universal cover) coordinates, so
an orbit that circulates the torus shows up as linear drift rather than
a wrapped tangle.  The stream function is a first integral; its drift
along a computed orbit is the integration's error meter, and a trace
whose drift exceeds tolerance retries with a halved step.

Orbit classes follow the geometry dichotomy: bounded orbits (closed
level loops, stationary points, invariant bands) are the obstruction
witnesses, unbounded orbits that fill the cell are the enhancement
signature.  The sampling detector reports evidence with an explicit
tri-state; only the symbolic plateau inventory of profile flows
certifies anything.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, cKDTree
from scipy.stats import qmc

from .flows import (
    Cellular,
    Constant,
    CustomStream,
    FlowClass,
    FlowSpec,
    Percolating,
    Shear,
    TimePeriodic,
    _level_coordinate,
    classify_flow,
    point_velocity,
    speed_bound,
    stream_function,
)
from .spectral import Grid2, make_grid

__all__ = [
    "OrbitRecord",
    "InvariantSetReport",
    "trace",
    "invariant_set_detect",
    "unbounded_density_estimate",
    "orbit_to_csv",
    "invariant_report_json",
]

STATIONARY_TOL = 1e-8
RETURN_TOL = 1e-4
UNBOUNDED_PERIODS = 3.0
FIT_R2 = 0.9
DRIFT_FACTOR = 1e-6
MAX_HALVINGS = 4


@dataclass(frozen=True)
class OrbitRecord:
    """One traced characteristic in unwrapped coordinates.

    classification is one of Stationary / Bounded / Unbounded /
    Inconclusive; diameter accompanies Bounded, drift_rate and fit_r2
    accompany Unbounded.  energy_drift is max |U(X(t)) - U(x0)| over the
    samples (zero by convention for constant flows, whose stream
    function has no single-valued representative on the torus).
    """

    seed: tuple[float, float]
    samples: np.ndarray
    times: np.ndarray
    classification: str
    energy_drift: float
    dt_used: float
    diameter: float | None = None
    drift_rate: float | None = None
    fit_r2: float | None = None


def _cell_of(flow: FlowSpec) -> tuple[float, float]:
    if isinstance(flow, CustomStream):
        return (flow.stream.grid.lx, flow.stream.grid.ly)
    return (1.0, 1.0)


def _point_stream(flow: FlowSpec):
    """Pointwise stream-function evaluator, or None for constant flows."""
    if isinstance(flow, (Shear, Percolating)):

        def f(pts: np.ndarray) -> np.ndarray:
            return np.asarray(
                flow.profile.antiderivative(_level_coordinate(flow, pts[..., 0], pts[..., 1]))
            )

        return f
    if isinstance(flow, Cellular):
        a = flow.amplitude / (2.0 * np.pi)

        def f(pts: np.ndarray) -> np.ndarray:
            return a * np.sin(2 * np.pi * pts[..., 0]) * np.sin(2 * np.pi * pts[..., 1])

        return f
    if isinstance(flow, CustomStream):
        from .spectral import sample_fourier

        sf = flow.stream

        def f(pts: np.ndarray) -> np.ndarray:
            flat = pts.reshape(-1, 2)
            return sample_fourier(sf, flat).reshape(pts.shape[:-1])

        return f
    if isinstance(flow, Constant):
        return None
    raise TypeError(f"not a steady flow spec: {flow!r}")


def _stream_oscillation(flow: FlowSpec) -> float:
    if isinstance(flow, Constant):
        return 0.0
    if isinstance(flow, CustomStream):
        vals = flow.stream.values
    else:
        lx, ly = _cell_of(flow)
        vals = stream_function(flow, make_grid(64, 64, lx, ly)).values
    return float(vals.max() - vals.min())


def _integrate_batch(
    flow: FlowSpec, seeds: np.ndarray, t_span: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """RK4 on dX/dt = u(X); returns (times, samples[(n+1), m, 2])."""
    f = point_velocity(flow)
    n = max(1, math.ceil(t_span / dt - 1e-12))
    h = t_span / n
    m = seeds.shape[0]
    out = np.empty((n + 1, m, 2))
    out[0] = seeds
    p = seeds.copy()
    for k in range(n):
        k1 = f(p)
        k2 = f(p + 0.5 * h * k1)
        k3 = f(p + 0.5 * h * k2)
        k4 = f(p + h * k3)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = p
    return np.linspace(0.0, t_span, n + 1), out


def _energy_drift(flow: FlowSpec, samples: np.ndarray) -> np.ndarray:
    """max |U(X(t)) - U(X(0))| per seed; zeros for constant flows."""
    ps = _point_stream(flow)
    if ps is None:
        return np.zeros(samples.shape[1])
    vals = ps(samples)  # (n+1, m)
    return np.abs(vals - vals[0]).max(axis=0)


def _classify_one(
    flow: FlowSpec,
    times: np.ndarray,
    path: np.ndarray,
    dt: float,
    cell: tuple[float, float],
    stationary_tol: float,
    return_tol: float,
    unbounded_periods: float,
    fit_r2: float,
) -> tuple[str, float | None, float | None, float | None]:
    disp = np.linalg.norm(path - path[0], axis=1)
    if disp.max() <= stationary_tol:
        return "Stationary", 0.0, None, None
    if disp.max() <= 10.0 * return_tol:
        # too little excursion to distinguish a loop from a creep
        return "Inconclusive", None, None, None
    period = max(cell)
    if disp[-1] > unbounded_periods * period:
        # linear windowed fit of the displacement magnitude
        coef = np.polyfit(times, disp, 1)
        pred = np.polyval(coef, times)
        ss_res = float(((disp - pred) ** 2).sum())
        ss_tot = float(((disp - disp.mean()) ** 2).sum())
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
        if r2 >= fit_r2:
            return "Unbounded", None, float(coef[0]), r2
        return "Inconclusive", None, float(coef[0]), r2
    # candidate closed orbit: nearest return to the seed after leaving
    away = disp >= 0.25 * disp.max()
    first_away = int(np.argmax(away))
    later = disp[first_away:]
    if later.size < 3:
        return "Inconclusive", None, None, None
    rel = int(np.argmin(later))
    best = first_away + rel
    min_dist = disp[best]
    if min_dist > return_tol and 0 < best < disp.size - 1:
        min_dist = min(min_dist, _refine_return(flow, path[0], path[best - 1], dt))
    if min_dist <= return_tol:
        ext = path.max(axis=0) - path.min(axis=0)
        return "Bounded", float(np.hypot(ext[0], ext[1])), None, None
    return "Inconclusive", None, None, None


def _polyline_distance(pts: np.ndarray, q: np.ndarray) -> float:
    """Distance from q to the polyline through pts (segment-exact)."""
    a, b = pts[:-1], pts[1:]
    ab = b - a
    den = (ab * ab).sum(axis=1)
    den[den == 0.0] = 1.0
    t = np.clip(((q - a) * ab).sum(axis=1) / den, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return float(np.linalg.norm(proj - q, axis=1).min())


def _refine_return(flow: FlowSpec, seed: np.ndarray, start: np.ndarray, dt: float) -> float:
    """Minimum seed distance over a finely resampled two-step window."""
    _, fine = _integrate_batch(flow, start.reshape(1, 2), 2.0 * dt, dt / 64.0)
    return _polyline_distance(fine[:, 0, :], seed)


def trace(
    flow: FlowSpec,
    x0: tuple[float, float],
    t_span: float,
    dt: float,
    stationary_tol: float = STATIONARY_TOL,
    return_tol: float = RETURN_TOL,
    unbounded_periods: float = UNBOUNDED_PERIODS,
    fit_r2: float = FIT_R2,
    drift_factor: float = DRIFT_FACTOR,
    max_halvings: int = MAX_HALVINGS,
) -> OrbitRecord:
    """Trace one characteristic and classify its orbit.

    The step must satisfy dt <= 0.1/sup|u|.  The stream-function drift
    along the orbit is checked against drift_factor times the stream
    oscillation; failures halve dt and retry, up to max_halvings, after
    which the trace is rejected.
    """
    if isinstance(flow, TimePeriodic):
        raise TypeError("streamline classification needs a steady flow")
    if t_span <= 0 or dt <= 0:
        raise ValueError("t_span and dt must be positive")
    sup = speed_bound(flow)
    if sup > 0 and dt > 0.1 / sup:
        raise ValueError(f"dt={dt:g} exceeds 0.1/sup|u| = {0.1 / sup:g}")
    seed = np.asarray(x0, dtype=np.float64).reshape(1, 2)
    osc = _stream_oscillation(flow)
    tol = drift_factor * osc
    attempt_dt = dt
    for attempt in range(max_halvings + 1):
        times, samples = _integrate_batch(flow, seed, t_span, attempt_dt)
        drift = float(_energy_drift(flow, samples)[0])
        if drift <= tol or osc == 0.0:
            break
        attempt_dt *= 0.5
    else:
        raise RuntimeError(
            f"energy drift {drift:.3e} above tolerance {tol:.3e} "
            f"after {max_halvings} step halvings"
        )
    path = samples[:, 0, :]
    cls, diameter, rate, r2 = _classify_one(
        flow,
        times,
        path,
        attempt_dt,
        _cell_of(flow),
        stationary_tol,
        return_tol,
        unbounded_periods,
        fit_r2,
    )
    return OrbitRecord(
        seed=(float(x0[0]), float(x0[1])),
        samples=path,
        times=times,
        classification=cls,
        energy_drift=drift,
        dt_used=attempt_dt,
        diameter=diameter,
        drift_rate=rate,
        fit_r2=r2,
    )


def orbit_to_csv(record: OrbitRecord) -> str:
    """CSV text with header t,x1,x2 (repr-exact floats)."""
    lines = ["t,x1,x2"]
    for t, (x, y) in zip(record.times, record.samples):
        lines.append(f"{float(t)!r},{float(x)!r},{float(y)!r}")
    return "\n".join(lines) + "\n"


# -- invariant-set evidence ---------------------------------------------------


@dataclass(frozen=True)
class InvariantSetReport:
    """Sampling evidence for an invariant bounded open set.

    has_invariant_bounded_open_set is "yes" / "no" / "inconclusive" from
    seed statistics alone; symbolic carries the exact plateau verdict
    for profile flows (None elsewhere) and consistent says whether the
    two agree.  regions describe invariant bands in the level coordinate
    for profile flows, or bounded-cluster bounding boxes otherwise.
    """

    has_invariant_bounded_open_set: str
    counts: dict
    covering_radius_cells: float
    regions: tuple[dict, ...]
    symbolic: str | None
    consistent: bool | None
    seeds_used: int
    meta: dict = field(default_factory=dict)


def _symbolic_verdict(flow: FlowSpec) -> str | None:
    if isinstance(flow, (Shear, Percolating, Cellular, Constant)):
        cls = classify_flow(flow)
        if cls in (FlowClass.INVARIANT_SET, FlowClass.BOTH):
            return "yes"
        if cls in (FlowClass.ENHANCING, FlowClass.NONZERO_EIGENFUNCTION):
            return "no"
    return None


def _zero_plateau_bands(flow: FlowSpec) -> tuple[dict, ...]:
    if not isinstance(flow, (Shear, Percolating)):
        return ()
    bands = []
    for p in getattr(flow.profile, "plateaus", ()):
        if p.value == 0.0:
            bands.append({"kind": "level_band", "lo": p.lo, "hi": p.hi})
    return tuple(bands)


def _straighten(flow: FlowSpec, pts: np.ndarray) -> np.ndarray:
    """Coordinates in which invariant bands of profile flows are straight."""
    if isinstance(flow, (Shear, Percolating)):
        w = np.asarray(_level_coordinate(flow, pts[:, 0], pts[:, 1]))
        return np.stack([pts[:, 0] % 1.0, w % 1.0], axis=1)
    return pts


def _link_clusters(pts: np.ndarray, radius: float) -> list[np.ndarray]:
    """Single-linkage components at the given radius (flat union-find)."""
    n = pts.shape[0]
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tree = cKDTree(pts)
    for i, j in tree.query_pairs(radius):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(v) for v in groups.values()]


def _covering_radius(points: np.ndarray, grid: Grid2) -> float:
    """Largest grid-node distance to the point set, periodic metric."""
    if points.shape[0] == 0:
        return math.inf
    lx, ly = grid.lx, grid.ly
    wrapped = np.stack([points[:, 0] % lx, points[:, 1] % ly], axis=1)
    X, Y = grid.meshgrid()
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    tree = cKDTree(wrapped, boxsize=(lx, ly))
    dists, _ = tree.query(nodes)
    return float(dists.max())


def invariant_set_detect(
    flow: FlowSpec,
    grid: Grid2,
    seeds: int = 128,
    rng_seed: int = 0,
    t_span: float | None = None,
    dt: float | None = None,
) -> InvariantSetReport:
    """Seed-statistics evidence for an invariant bounded open set.

    Yes needs a positive-area cluster of Bounded/Stationary seeds whose
    convex hull (taken in level-straightened coordinates for profile
    flows, so wavy bands do not leak) contains no Unbounded seed; No
    needs the Unbounded seeds to cover the cell to within two grid
    cells; anything else is Inconclusive.  The verdict is evidence, not
    proof; the symbolic plateau classification rides along for profile
    flows.
    """
    if isinstance(flow, TimePeriodic):
        raise TypeError("streamline classification needs a steady flow")
    if seeds < 100:
        raise ValueError(f"need at least 100 seeds, got {seeds}")
    lx, ly = _cell_of(flow)
    sup = speed_bound(flow)
    if dt is None:
        dt = 0.05 / max(sup, 1e-12)
    if t_span is None:
        t_span = 40.0 * max(lx, ly) / max(sup, 1e-12)
    sampler = qmc.Halton(d=2, scramble=True, seed=rng_seed)
    pts = sampler.random(seeds) * np.array([lx, ly])

    osc = _stream_oscillation(flow)
    tol = DRIFT_FACTOR * osc
    cell = (lx, ly)

    # batched trace with batched step-halving for drift offenders
    labels = ["Rejected"] * seeds
    paths: dict[int, tuple[np.ndarray, np.ndarray, float]] = {}
    pending = np.arange(seeds)
    use_dt = dt
    for attempt in range(MAX_HALVINGS + 1):
        times, samples = _integrate_batch(flow, pts[pending], t_span, use_dt)
        drift = _energy_drift(flow, samples)
        ok = drift <= tol if osc > 0.0 else np.ones(pending.size, bool)
        for j in np.flatnonzero(ok):
            paths[int(pending[j])] = (times, samples[:, j, :], use_dt)
        pending = pending[~ok]
        if pending.size == 0:
            break
        use_dt *= 0.5

    for i, (t_i, path, dt_i) in paths.items():
        labels[i], *_ = _classify_one(
            flow, t_i, path, dt_i, cell,
            STATIONARY_TOL, RETURN_TOL, UNBOUNDED_PERIODS, FIT_R2,
        )
    counts = {k: labels.count(k) for k in
              ("Stationary", "Bounded", "Unbounded", "Inconclusive", "Rejected")}
    bounded_pts = pts[[i for i, l in enumerate(labels) if l in ("Bounded", "Stationary")]]
    unbounded_pts = pts[[i for i, l in enumerate(labels) if l == "Unbounded"]]

    h = max(lx / grid.nx, ly / grid.ny)
    cover = _covering_radius(unbounded_pts, grid)

    yes_evidence = False
    regions: list[dict] = []
    if bounded_pts.shape[0] >= 3:
        sb = _straighten(flow, bounded_pts)
        su = _straighten(flow, unbounded_pts) if unbounded_pts.shape[0] else unbounded_pts
        link = 3.0 * math.sqrt(lx * ly / seeds)
        for idx in _link_clusters(sb, link):
            if idx.size < 5:
                continue
            cluster = sb[idx]
            try:
                hull = ConvexHull(cluster)
            except Exception:
                continue
            if hull.volume <= 2.0 * h * h:
                continue
            if su.shape[0]:
                inside = Delaunay(cluster[hull.vertices]).find_simplex(su) >= 0
                if bool(inside.any()):
                    continue
            yes_evidence = True
            lo = cluster.min(axis=0)
            hi = cluster.max(axis=0)
            regions.append(
                {
                    "kind": "cluster_bbox",
                    "lo": [float(lo[0]), float(lo[1])],
                    "hi": [float(hi[0]), float(hi[1])],
                    "seeds": int(idx.size),
                }
            )

    if yes_evidence:
        verdict = "yes"
    elif cover <= 2.0 * h:
        verdict = "no"
    else:
        verdict = "inconclusive"

    bands = _zero_plateau_bands(flow)
    if bands:
        regions = list(bands) + regions
    symbolic = _symbolic_verdict(flow)
    consistent = None if symbolic is None else (verdict == symbolic or verdict == "inconclusive")
    return InvariantSetReport(
        has_invariant_bounded_open_set=verdict,
        counts=counts,
        covering_radius_cells=cover / h if math.isfinite(cover) else math.inf,
        regions=tuple(regions),
        symbolic=symbolic,
        consistent=consistent,
        seeds_used=seeds,
        meta={"t_span": t_span, "dt": dt, "grid_cell": h, "rng_seed": rng_seed},
    )


def invariant_report_json(report: InvariantSetReport) -> str:
    doc = {
        "schema": "invariant-set-report-v1",
        "has_invariant_bounded_open_set": report.has_invariant_bounded_open_set,
        "counts": report.counts,
        "covering_radius_cells": (
            None
            if math.isinf(report.covering_radius_cells)
            else report.covering_radius_cells
        ),
        "regions": list(report.regions),
        "symbolic": report.symbolic,
        "consistent_with_symbolic": report.consistent,
        "seeds_used": report.seeds_used,
        "meta": report.meta,
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def unbounded_density_estimate(
    flow: FlowSpec,
    seeds: int = 128,
    grid: Grid2 | None = None,
    rng_seed: int = 0,
) -> float:
    """Covering radius of the Unbounded seed subset in grid-cell units.

    Returns math.inf when no seed classifies Unbounded (cellular flows,
    stationary bands everywhere).
    """
    lx, ly = _cell_of(flow)
    if grid is None:
        grid = make_grid(32, 32, lx, ly)
    report = invariant_set_detect(flow, grid, seeds=seeds, rng_seed=rng_seed)
    return report.covering_radius_cells
