"""Divergence-free flow families on periodic cells, with classification.

Flows are defined by stream functions ``U`` and advect with ``u = (-dU/dy,
dU/dx)``.  The central family is the percolating one: a level-line
coordinate ``w(x) = {p(x1) - x2}`` and a velocity profile ``g`` (the
derivative of the stream profile) give

    U(x) = G(w(x)),   u(x) = (g(w), p'(x1) * g(w)),   G' = g.

``w`` is conserved along trajectories, so every function of ``w`` is a
first integral.  A plateau of ``g`` at value 0 makes the corresponding
band stationary (an open invariant set); a plateau at value C != 0 makes
the band a channel translating at uniform speed C, which supports
H^1-regular eigenfunctions of the advection operator with eigenvalue
2*pi*i*C.  Either structure defeats dissipation enhancement, and the
classifier reads them straight off the symbolic plateau inventory.

Velocities are evaluated analytically (plateaus give exactly constant
u1), both on grids and at arbitrary points for characteristic tracing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .profiles import FourierProfile, PiecewiseProfile, Plateau, profile_from_dict, profile_to_dict
from .spectral import Grid2, ScalarField, VelocityField, gradient

__all__ = [
    "Shear",
    "Percolating",
    "Cellular",
    "Constant",
    "CustomStream",
    "TimePeriodic",
    "FlowSpec",
    "FlowClass",
    "stream_function",
    "velocity",
    "point_velocity",
    "speed_bound",
    "check_first_integral",
    "classify_flow",
    "flow_to_dict",
    "flow_from_dict",
]

Profile = Union[FourierProfile, PiecewiseProfile]

_MEAN_TOL = 1e-10


def _require_mean_zero(profile: Profile, who: str) -> None:
    scale = max(1.0, float(np.max(np.abs(profile.value(np.linspace(0, 1, 513))))))
    if abs(profile.integral) > _MEAN_TOL * scale:
        raise ValueError(
            f"{who} profile must have zero mean over one period (got {profile.integral:g}); "
            "a mean component is a Constant flow, compose it separately"
        )


@dataclass(frozen=True)
class Shear:
    """Horizontal shear ``u = (g({-x2}), 0)`` with velocity profile ``g``."""

    profile: Profile

    def __post_init__(self) -> None:
        _require_mean_zero(self.profile, "shear")


@dataclass(frozen=True)
class Percolating:
    """Sheared channels along the graph ``x2 = p(x1) - w``.

    ``profile`` is the channel-speed profile ``g`` (must have zero mean so
    the stream function is single-valued); ``p`` is the 1-periodic wall
    shape, which automatically satisfies ``int p' = 0``.
    """

    profile: Profile
    p: Profile

    def __post_init__(self) -> None:
        _require_mean_zero(self.profile, "percolating")


@dataclass(frozen=True)
class Cellular:
    """``U = amplitude * sin(2 pi x1) sin(2 pi x2) / (2 pi)``: closed cells."""

    amplitude: float = 1.0


@dataclass(frozen=True)
class Constant:
    """Uniform drift ``u = (alpha, beta)``; its stream function winds."""

    alpha: float
    beta: float


@dataclass(frozen=True, eq=False)
class CustomStream:
    """Flow given by a gridded stream function (necessarily single-valued)."""

    stream: ScalarField
    source: str | None = None


@dataclass(frozen=True, eq=False)
class TimePeriodic:
    """``u(x, t) = modulation(t) * u_base(x)`` with 1-periodic modulation."""

    base: "FlowSpec"
    modulation: Profile

    def __post_init__(self) -> None:
        if isinstance(self.base, TimePeriodic):
            raise ValueError("nested TimePeriodic flows are not supported")


FlowSpec = Union[Shear, Percolating, Cellular, Constant, CustomStream, TimePeriodic]


class FlowClass(enum.Enum):
    """Verdict on the two enhancement obstructions."""

    ENHANCING = "enhancing"
    INVARIANT_SET = "invariant-set"
    NONZERO_EIGENFUNCTION = "nonzero-eigenfunction"
    BOTH = "both"
    UNKNOWN = "unknown"


# -- evaluation ----------------------------------------------------------


def _level_coordinate(spec: Shear | Percolating, x1, x2):
    if isinstance(spec, Shear):
        w = -np.asarray(x2, dtype=np.float64)
    else:
        w = spec.p.value(x1) - np.asarray(x2, dtype=np.float64)
    return w  # profiles wrap their argument themselves


def stream_function(spec: FlowSpec, grid: Grid2, t: float = 0.0) -> ScalarField:
    """Sample the stream function on ``grid``.

    Raises for Constant flows, whose stream function winds around the
    torus and has no single-valued sample; they are represented by their
    velocity only.
    """
    if isinstance(spec, (Shear, Percolating)):
        X, Y = grid.meshgrid()
        w = _level_coordinate(spec, X, Y)
        return ScalarField(grid, np.asarray(spec.profile.antiderivative(w)))
    if isinstance(spec, Cellular):
        X, Y = grid.meshgrid()
        return ScalarField(grid, spec.amplitude * np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y) / (2 * np.pi))
    if isinstance(spec, Constant):
        raise ValueError("constant flow has a winding stream function; use velocity()")
    if isinstance(spec, CustomStream):
        return _tile_to_grid(spec.stream, grid)
    if isinstance(spec, TimePeriodic):
        base = stream_function(spec.base, grid)
        return float(spec.modulation.value(t)) * base
    raise TypeError(f"not a flow spec: {spec!r}")


def velocity(spec: FlowSpec, grid: Grid2, t: float = 0.0) -> VelocityField:
    """Sample ``u`` on ``grid`` (analytically where the family allows)."""
    if isinstance(spec, (Shear, Percolating)):
        X, Y = grid.meshgrid()
        u1 = spec.profile.value(_level_coordinate(spec, X, Y))
        if isinstance(spec, Shear):
            u2 = np.zeros_like(u1)
        else:
            u2 = spec.p.derivative(X) * u1
        return VelocityField(grid, u1, u2)
    if isinstance(spec, Cellular):
        X, Y = grid.meshgrid()
        a = spec.amplitude
        return VelocityField(
            grid,
            -a * np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y),
            a * np.cos(2 * np.pi * X) * np.sin(2 * np.pi * Y),
        )
    if isinstance(spec, Constant):
        shape = grid.shape
        return VelocityField(grid, np.full(shape, float(spec.alpha)), np.full(shape, float(spec.beta)))
    if isinstance(spec, CustomStream):
        return VelocityField.from_stream(_tile_to_grid(spec.stream, grid))
    if isinstance(spec, TimePeriodic):
        base = velocity(spec.base, grid)
        m = float(spec.modulation.value(t))
        return VelocityField(grid, m * base.u, m * base.v)
    raise TypeError(f"not a flow spec: {spec!r}")


def point_velocity(spec: FlowSpec) -> Callable[[np.ndarray, float], np.ndarray]:
    """Return ``f(points, t) -> (P, 2)`` evaluating u at arbitrary points.

    Used by characteristic backtracking and streamline tracing.  For
    CustomStream the components are spectrally interpolated.
    """
    if isinstance(spec, (Shear, Percolating)):

        def f(pts: np.ndarray, t: float = 0.0) -> np.ndarray:
            pts = np.atleast_2d(pts)
            u1 = spec.profile.value(_level_coordinate(spec, pts[:, 0], pts[:, 1]))
            if isinstance(spec, Shear):
                u2 = np.zeros_like(u1)
            else:
                u2 = spec.p.derivative(pts[:, 0]) * u1
            return np.stack([u1, u2], axis=-1)

        return f
    if isinstance(spec, Cellular):

        def f(pts: np.ndarray, t: float = 0.0) -> np.ndarray:
            pts = np.atleast_2d(pts)
            a = spec.amplitude
            sx, cx = np.sin(2 * np.pi * pts[:, 0]), np.cos(2 * np.pi * pts[:, 0])
            sy, cy = np.sin(2 * np.pi * pts[:, 1]), np.cos(2 * np.pi * pts[:, 1])
            return np.stack([-a * sx * cy, a * cx * sy], axis=-1)

        return f
    if isinstance(spec, Constant):
        ab = np.array([spec.alpha, spec.beta], dtype=np.float64)

        def f(pts: np.ndarray, t: float = 0.0) -> np.ndarray:
            pts = np.atleast_2d(pts)
            return np.broadcast_to(ab, (pts.shape[0], 2)).copy()

        return f
    if isinstance(spec, CustomStream):
        from .spectral import sample_fourier

        w = VelocityField.from_stream(spec.stream)
        ufield = ScalarField(spec.stream.grid, w.u)
        vfield = ScalarField(spec.stream.grid, w.v)

        def f(pts: np.ndarray, t: float = 0.0) -> np.ndarray:
            pts = np.atleast_2d(pts)
            return np.stack([sample_fourier(ufield, pts), sample_fourier(vfield, pts)], axis=-1)

        return f
    if isinstance(spec, TimePeriodic):
        base = point_velocity(spec.base)
        mod = spec.modulation

        def f(pts: np.ndarray, t: float = 0.0) -> np.ndarray:
            return float(mod.value(t)) * base(pts, t)

        return f
    raise TypeError(f"not a flow spec: {spec!r}")


def speed_bound(spec: FlowSpec) -> float:
    """Upper bound for ``sup |u|``, used by CFL budgeting."""
    ys = np.linspace(0.0, 1.0, 4097)
    if isinstance(spec, Shear):
        return float(np.max(np.abs(spec.profile.value(ys))))
    if isinstance(spec, Percolating):
        gmax = float(np.max(np.abs(spec.profile.value(ys))))
        pmax = float(np.max(np.abs(spec.p.derivative(ys))))
        return gmax * float(np.hypot(1.0, pmax))
    if isinstance(spec, Cellular):
        return abs(float(spec.amplitude))
    if isinstance(spec, Constant):
        return float(np.hypot(spec.alpha, spec.beta))
    if isinstance(spec, CustomStream):
        return VelocityField.from_stream(spec.stream).max_speed
    if isinstance(spec, TimePeriodic):
        return float(np.max(np.abs(spec.modulation.value(ys)))) * speed_bound(spec.base)
    raise TypeError(f"not a flow spec: {spec!r}")


def _tile_to_grid(f: ScalarField, grid: Grid2) -> ScalarField:
    """Tile a per-cell field onto a possibly larger periodic grid."""
    g = f.grid
    if grid == g:
        return f
    rx = grid.lx / g.lx
    ry = grid.ly / g.ly
    kx, ky = int(round(rx)), int(round(ry))
    if (
        abs(rx - kx) > 1e-12
        or abs(ry - ky) > 1e-12
        or kx < 1
        or ky < 1
        or grid.nx != kx * g.nx
        or grid.ny != ky * g.ny
    ):
        raise ValueError(
            f"grid {grid.nx}x{grid.ny} ({grid.lx}x{grid.ly}) is not an integer tiling of "
            f"the stream's cell {g.nx}x{g.ny} ({g.lx}x{g.ly})"
        )
    return ScalarField(grid, np.tile(f.values, (kx, ky)))


# -- diagnostics and classification --------------------------------------


def check_first_integral(spec: FlowSpec, grid: Grid2, method: str = "auto") -> float:
    """Scaled sup-norm of ``u . grad U`` on the grid.

    ``method="analytic"`` uses the closed-form stream gradient of the
    family (available for shear/percolating/cellular/constant),
    ``"spectral"`` differentiates the sampled stream function.  ``"auto"``
    picks analytic when the sampled stream is not band-limited (plateau
    profiles, percolating compositions), spectral otherwise.
    """
    if isinstance(spec, TimePeriodic):
        return check_first_integral(spec.base, grid, method)
    if isinstance(spec, Constant):
        return 0.0  # grad U = (beta, -alpha) constant, u . grad U = 0 identically
    w = velocity(spec, grid)
    if method not in ("auto", "analytic", "spectral"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        band_limited = isinstance(spec, (Cellular, CustomStream)) or (
            isinstance(spec, Shear) and isinstance(spec.profile, FourierProfile)
        )
        method = "spectral" if band_limited else "analytic"
    if method == "spectral":
        U = stream_function(spec, grid)
        ux, uy = gradient(U)
        dot = w.u * ux.values + w.v * uy.values
        scale = max(1.0, w.max_speed * float(np.hypot(ux.values, uy.values).max()))
    else:
        if isinstance(spec, (Shear, Percolating)):
            # grad U = (g(w) p'(x1), -g(w)) by the chain rule
            X, _ = grid.meshgrid()
            px = spec.p.derivative(X) if isinstance(spec, Percolating) else np.zeros(grid.shape)
            gx = w.u * px
            gy = -w.u
        elif isinstance(spec, Cellular):
            X, Y = grid.meshgrid()
            a = spec.amplitude
            gx = a * np.cos(2 * np.pi * X) * np.sin(2 * np.pi * Y)
            gy = a * np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y)
        else:
            raise ValueError("analytic stream gradient unavailable for this spec; use spectral")
        dot = w.u * gx + w.v * gy
        scale = max(1.0, w.max_speed * float(np.hypot(gx, gy).max()))
    return float(np.abs(dot).max()) / scale


def classify_flow(spec: FlowSpec) -> FlowClass:
    """Read the enhancement verdict off the family's symbolic structure.

    Shear/percolating flows are decided by the plateau inventory of the
    velocity profile: a zero plateau is a stationary band (open invariant
    set), a nonzero plateau is a uniformly translating channel (nonzero
    eigenvalue eigenfunctions with bounded H^1 norm).  No plateau at all
    means neither obstruction exists and the flow enhances.  Cellular
    flows have closed cells; constant flows have plane-wave
    eigenfunctions.  Gridded streams and time-periodic flows are not
    classified here.
    """
    if isinstance(spec, (Shear, Percolating)):
        values = [p.value for p in spec.profile.plateaus]
        has_zero = any(v == 0.0 for v in values)
        has_nonzero = any(v != 0.0 for v in values)
        if has_zero and has_nonzero:
            return FlowClass.BOTH
        if has_zero:
            return FlowClass.INVARIANT_SET
        if has_nonzero:
            return FlowClass.NONZERO_EIGENFUNCTION
        return FlowClass.ENHANCING
    if isinstance(spec, Cellular):
        return FlowClass.INVARIANT_SET if spec.amplitude != 0.0 else FlowClass.UNKNOWN
    if isinstance(spec, Constant):
        if spec.alpha == 0.0 and spec.beta == 0.0:
            return FlowClass.INVARIANT_SET  # the zero flow fixes every set
        return FlowClass.NONZERO_EIGENFUNCTION
    return FlowClass.UNKNOWN


# -- serialization --------------------------------------------------------


def flow_to_dict(spec: FlowSpec) -> dict:
    if isinstance(spec, Shear):
        return {"kind": "shear", "profile": profile_to_dict(spec.profile)}
    if isinstance(spec, Percolating):
        return {"kind": "percolating", "profile": profile_to_dict(spec.profile), "p": profile_to_dict(spec.p)}
    if isinstance(spec, Cellular):
        return {"kind": "cellular", "amplitude": float(spec.amplitude)}
    if isinstance(spec, Constant):
        return {"kind": "constant", "alpha": float(spec.alpha), "beta": float(spec.beta)}
    if isinstance(spec, CustomStream):
        if not spec.source:
            raise ValueError("CustomStream needs a source path to serialize")
        return {"kind": "custom", "stream": spec.source}
    if isinstance(spec, TimePeriodic):
        return {
            "kind": "time-periodic",
            "base": flow_to_dict(spec.base),
            "modulation": profile_to_dict(spec.modulation),
        }
    raise TypeError(f"not a flow spec: {spec!r}")


def flow_from_dict(d: dict, base_dir=None) -> FlowSpec:
    kind = d.get("kind")
    if kind == "shear":
        return Shear(profile_from_dict(d["profile"]))
    if kind == "percolating":
        return Percolating(profile_from_dict(d["profile"]), profile_from_dict(d["p"]))
    if kind == "cellular":
        return Cellular(float(d.get("amplitude", 1.0)))
    if kind == "constant":
        return Constant(float(d.get("alpha", 0.0)), float(d.get("beta", 0.0)))
    if kind == "custom":
        from pathlib import Path

        from .spectral import load_field

        path = Path(d["stream"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return CustomStream(load_field(path), source=str(d["stream"]))
    if kind == "time-periodic":
        return TimePeriodic(flow_from_dict(d["base"], base_dir), profile_from_dict(d["modulation"]))
    raise ValueError(f"unknown flow kind: {kind!r}")
