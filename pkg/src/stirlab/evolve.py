"""Time integration of the advected-diffused scalar on periodic rectangles.

The evolution is

    phi_t + A u . grad phi = kappa Lap phi,

advanced in coefficient space.  The default scheme applies the diffusion
semigroup exactly through an integrating factor and treats the advection
term with classical four-stage Runge-Kutta (pseudospectral products,
2/3-rule dealiasing).  A Strang-split scheme with semi-Lagrangian
advection is available as an independent cross-check.

The advection term cannot change the spatial mean: its zero mode is
dropped analytically on every right-hand-side evaluation, so mass is
conserved bit for bit rather than to integration accuracy.  An optional
pointwise source hook (used by the reaction front end) contributes its
zero mode normally.

Amplitudes enter in two frames.  Fixed kappa with growing ``amplitude``
is the laboratory frame; ``amplitude = 1`` with small ``kappa`` is the
rescaled frame in which comparison against free transport is uniform.
Both are the same code path.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .flows import (
    FlowSpec,
    Percolating,
    Shear,
    TimePeriodic,
    _level_coordinate,
    point_velocity,
    speed_bound,
    velocity,
)
from .profiles import Plateau
from .spectral import (
    Grid2,
    ScalarField,
    grad_coeffs,
    h1_seminorm,
    lp_norm,
    sample_fourier,
)

__all__ = [
    "SimConfig",
    "Trajectory",
    "NumericsError",
    "CFLError",
    "ChannelDatum",
    "step",
    "solve",
    "integrate",
    "free_transport",
    "channel_datum",
    "enhancement_curve",
    "operator_norm_probe",
    "trajectory_to_csv",
    "resolve_dt",
]


class NumericsError(RuntimeError):
    """The integration produced values the scheme cannot vouch for."""


class CFLError(ValueError):
    """Requested time step violates the advective stability bound."""


_SCHEMES = {
    "integratingfactorrk4": "IntegratingFactorRK4",
    "ifrk4": "IntegratingFactorRK4",
    "strangsplit": "StrangSplit",
    "strang": "StrangSplit",
}

NORM_KEYS = ("L1", "L2", "Linf", "H1", "mean")


@dataclass(frozen=True)
class SimConfig:
    """Integration parameters.

    dt may be a positive float or "auto"; auto picks the largest step
    satisfying dt <= cfl * h / max(1, amplitude * sup|u|) that divides
    t_end evenly.  An explicit dt above that bound raises CFLError.
    """

    t_end: float
    amplitude: float = 0.0
    kappa: float = 1.0
    dt: float | str = "auto"
    scheme: str = "IntegratingFactorRK4"
    cfl: float = 0.5
    dealias: bool = True
    record_every: int = 1
    store_snapshots: bool = False
    stop_below_linf: float | None = None

    def __post_init__(self) -> None:
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.amplitude < 0.0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if isinstance(self.dt, str):
            if self.dt != "auto":
                raise ValueError(f'dt must be a positive number or "auto", got {self.dt!r}')
        elif not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        key = self.scheme.replace("-", "").replace("_", "").lower()
        if key not in _SCHEMES:
            raise ValueError(
                f"unknown scheme {self.scheme!r}; expected IntegratingFactorRK4 or StrangSplit"
            )
        object.__setattr__(self, "scheme", _SCHEMES[key])
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if self.stop_below_linf is not None and self.stop_below_linf < 0.0:
            raise ValueError("stop_below_linf must be nonnegative")


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: strictly increasing times and norm histories.

    norms carries L1, L2, Linf, H1 (seminorm) and mean, one value per
    recorded time.  snapshots, when requested, holds the field at the
    same cadence.
    """

    times: np.ndarray
    norms: dict[str, np.ndarray]
    final: ScalarField
    snapshots: list[tuple[float, ScalarField]] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("times must be a nonempty 1-d array")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        for key in NORM_KEYS:
            if key not in self.norms:
                raise ValueError(f"norms missing key {key!r}")
            a = np.asarray(self.norms[key], dtype=np.float64)
            if a.shape != t.shape:
                raise ValueError(f"norms[{key!r}] has shape {a.shape}, expected {t.shape}")
            self.norms[key] = a

    def norm_at(self, key: str, t: float) -> float:
        """Recorded norm at the time closest to t (must match within 1e-9)."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no record near t={t}; closest is {self.times[i]}")
        return float(self.norms[key][i])


def trajectory_to_csv(traj: Trajectory) -> str:
    """CSV text with header t,L1,L2,Linf,H1,mean (repr-exact floats)."""
    buf = io.StringIO()
    buf.write("t,L1,L2,Linf,H1,mean\n")
    cols = [traj.norms[k] for k in NORM_KEYS]
    for i, t in enumerate(traj.times):
        row = [repr(float(t))] + [repr(float(c[i])) for c in cols]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def resolve_dt(cfg: SimConfig, grid: Grid2, flow: FlowSpec | None) -> tuple[float, int]:
    """Time step and step count honoring the advective CFL bound.

    The bound uses max(1, A sup|u|) so diffusion-only runs are still
    resolved in time rather than taken in one jump.
    """
    h = grid.h
    speed = 0.0 if flow is None else speed_bound(flow)
    limit = cfg.cfl * h / max(1.0, cfg.amplitude * speed)
    if cfg.dt == "auto":
        n = max(1, math.ceil(cfg.t_end / limit - 1e-9))
        return cfg.t_end / n, n
    dt = float(cfg.dt)
    if dt > limit * (1.0 + 1e-12):
        raise CFLError(
            f"dt={dt:g} exceeds the stability bound {limit:g} "
            f"(cfl={cfg.cfl}, h={h:g}, amplitude={cfg.amplitude:g}, sup|u|={speed:g})"
        )
    n = max(1, math.ceil(cfg.t_end / dt - 1e-9))
    return dt, n


class _Stepper:
    """Shared stepping core for the passive and reactive front ends."""

    def __init__(
        self,
        grid: Grid2,
        cfg: SimConfig,
        flow: FlowSpec | None,
        reaction: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> None:
        self.grid = grid
        self.cfg = cfg
        self.reaction = reaction
        self.npts = grid.nx * grid.ny
        self.modulation: Callable[[float], float] | None = None
        if flow is None or cfg.amplitude == 0.0:
            self.au = self.av = None
        else:
            base = flow
            if isinstance(flow, TimePeriodic):
                base = flow.base
                self.modulation = flow.modulation.value
            vel = velocity(base, grid)
            self.au = cfg.amplitude * vel.u
            self.av = cfg.amplitude * vel.v
        self.pure_diffusion = self.au is None and reaction is None
        if cfg.scheme == "StrangSplit":
            if reaction is not None:
                raise ValueError("StrangSplit does not support a source term; use IntegratingFactorRK4")
            if self.modulation is not None:
                raise ValueError("StrangSplit supports steady flows only")
            self._flow = flow
        self._mask = grid.dealias_mask

    def prepare(self, dt: float) -> None:
        k2 = self.grid.k2
        self.dt = dt
        self.e_half = np.exp(-0.5 * self.cfg.kappa * k2 * dt)
        self.e_full = np.exp(-self.cfg.kappa * k2 * dt)

    # -- integrating factor RK4 -------------------------------------------

    def _nonlinear(self, c: np.ndarray, t: float) -> np.ndarray:
        """hat of (-A u . grad phi + f(phi)), advective zero mode dropped."""
        g = self.grid
        out = None
        values = None
        if self.au is not None:
            cx, cy = grad_coeffs(g, c)
            gx = np.fft.irfft2(cx, s=(g.nx, g.ny)) * self.npts
            gy = np.fft.irfft2(cy, s=(g.nx, g.ny)) * self.npts
            scale = 1.0 if self.modulation is None else float(self.modulation(t))
            adv = self.au * gx + self.av * gy
            if scale != 1.0:
                adv *= scale
            out = np.fft.rfft2(-adv) / self.npts
            out[0, 0] = 0.0
        if self.reaction is not None:
            values = np.fft.irfft2(c, s=(g.nx, g.ny)) * self.npts
            r = np.fft.rfft2(self.reaction(values)) / self.npts
            out = r if out is None else out + r
        if out is None:
            return np.zeros_like(c)
        if self.cfg.dealias:
            out = np.where(self._mask, out, 0.0)
        return out

    def step_ifrk4(self, c: np.ndarray, t: float) -> np.ndarray:
        """One step of integrating-factor RK4; diffusion handled exactly."""
        dt, eh, ef = self.dt, self.e_half, self.e_full
        # fast time for the modulation: stages sit at t, t + dt/2, t + dt
        a = self.cfg.amplitude
        g1 = self._nonlinear(c, a * t)
        g2 = self._nonlinear(eh * (c + 0.5 * dt * g1), a * (t + 0.5 * dt))
        g3 = self._nonlinear(eh * c + 0.5 * dt * g2, a * (t + 0.5 * dt))
        g4 = self._nonlinear(ef * c + dt * eh * g3, a * (t + dt))
        return ef * c + (dt / 6.0) * (ef * g1 + 2.0 * eh * (g2 + g3) + g4)

    # -- Strang split cross-check ------------------------------------------

    def step_strang(self, c: np.ndarray, t: float) -> np.ndarray:
        c = self.e_half * c
        if self.au is not None:
            g = self.grid
            mass = c[0, 0]
            values = np.fft.irfft2(c, s=(g.nx, g.ny)) * self.npts
            fld = ScalarField(g, values)
            pts = np.stack([m.ravel() for m in g.meshgrid()], axis=1)
            dep = _backtrack(pts, self._flow, self.cfg.amplitude, t + self.dt, self.dt, substeps=1)
            sampled = sample_fourier(fld, dep).reshape(g.nx, g.ny)
            c = np.fft.rfft2(sampled) / self.npts
            c[0, 0] = mass  # transport moves no mass
            if self.cfg.dealias:
                c = np.where(self._mask, c, 0.0)
        return self.e_half * c

    def advance(self, c: np.ndarray, t: float) -> np.ndarray:
        if self.pure_diffusion:
            return self.e_full * c
        if self.cfg.scheme == "StrangSplit":
            return self.step_strang(c, t)
        return self.step_ifrk4(c, t)


def _record_norms(grid: Grid2, c: np.ndarray) -> tuple[float, ...]:
    values = np.fft.irfft2(c, s=(grid.nx, grid.ny)) * (grid.nx * grid.ny)
    av = np.abs(values)
    w = grid.parseval_weights()
    h1sq = float((grid.k2 * (c.real**2 + c.imag**2) * w).sum()) * grid.lx * grid.ly
    return (
        float(av.sum() * grid.cell_area),
        float(np.sqrt((av * av).sum() * grid.cell_area)),
        float(av.max()),
        math.sqrt(max(h1sq, 0.0)),
        float(c[0, 0].real),
    )


def integrate(
    phi0: ScalarField,
    flow: FlowSpec | None,
    cfg: SimConfig,
    *,
    reaction: Callable[[np.ndarray], np.ndarray] | None = None,
    require_l2_decay: bool | None = None,
    clip_unit_tol: float | None = None,
) -> Trajectory:
    """Advance phi0 to cfg.t_end recording norms every record_every steps.

    require_l2_decay defaults to on for source-free runs: an L2 increase
    beyond 1e-8 relative marks an unstable or under-resolved run and
    raises NumericsError rather than returning bad data.

    clip_unit_tol, when set, confines the state to [-tol, 1 + tol] after
    every step.  Steps that actually need the clip count as bound
    violations; 25 in a row, or any excursion past 1e-2, abort the run
    as under-resolved.  Runs that never violate are untouched bit for
    bit (the monitor only reads).
    """
    grid = phi0.grid
    npts = grid.nx * grid.ny
    dt, n_steps = resolve_dt(cfg, grid, flow)
    stepper = _Stepper(grid, cfg, flow, reaction)
    stepper.prepare(dt)
    if require_l2_decay is None:
        require_l2_decay = reaction is None

    c = phi0.coeffs
    times = [0.0]
    records = [_record_norms(grid, c)]
    snaps: list[tuple[float, ScalarField]] | None = [] if cfg.store_snapshots else None
    if snaps is not None:
        snaps.append((0.0, phi0))

    stopped_early = False
    violations = 0
    consecutive = 0
    worst = 0.0
    t = 0.0
    for i in range(1, n_steps + 1):
        step_dt = dt if i < n_steps else cfg.t_end - dt * (n_steps - 1)
        if abs(step_dt - dt) > 1e-12 * dt:
            stepper.prepare(step_dt)
        # blowup shows up as inf/nan in the arithmetic; the explicit check
        # below turns it into a diagnosable error instead of a warning
        with np.errstate(over="ignore", invalid="ignore"):
            c = stepper.advance(c, t)
        t = cfg.t_end if i == n_steps else i * dt
        if not np.all(np.isfinite(c)):
            raise NumericsError(f"non-finite coefficients after step {i} (t={t:.6g})")
        values = None
        if clip_unit_tol is not None:
            values = np.fft.irfft2(c, s=(grid.nx, grid.ny)) * npts
            lo, hi = -clip_unit_tol, 1.0 + clip_unit_tol
            vmin, vmax = float(values.min()), float(values.max())
            if vmin < lo or vmax > hi:
                violations += 1
                consecutive += 1
                worst = max(worst, lo - vmin, vmax - hi)
                if consecutive >= 25 or worst > 1e-2:
                    raise NumericsError(
                        f"state left [{lo:g}, {hi:g}] by {worst:.3g} for "
                        f"{consecutive} consecutive steps near t={t:.6g}; "
                        "resolution insufficient"
                    )
                values = np.clip(values, lo, hi)
                c = np.fft.rfft2(values) / npts
            else:
                consecutive = 0
        should_record = (i % cfg.record_every == 0) or i == n_steps
        stop_now = False
        if cfg.stop_below_linf is not None:
            if values is None:
                values = np.fft.irfft2(c, s=(grid.nx, grid.ny)) * npts
            stop_now = float(np.abs(values).max()) <= cfg.stop_below_linf
        if should_record or stop_now:
            times.append(t)
            records.append(_record_norms(grid, c))
            if snaps is not None:
                if values is None:
                    values = np.fft.irfft2(c, s=(grid.nx, grid.ny)) * npts
                snaps.append((t, ScalarField(grid, values)))
        if stop_now:
            stopped_early = True
            break

    arr = np.array(records)
    norms = {k: arr[:, j] for j, k in enumerate(NORM_KEYS)}
    if require_l2_decay:
        l2 = norms["L2"]
        rise = float(np.max(np.diff(l2), initial=0.0))
        if rise > 1e-8 * max(l2[0], 1e-300):
            raise NumericsError(
                f"L2 norm increased by {rise:g} (rel {rise / l2[0]:g}); "
                "the run is unstable or under-resolved"
            )
    values = np.fft.irfft2(c, s=(grid.nx, grid.ny)) * (grid.nx * grid.ny)
    final = ScalarField(grid, values)
    meta = {
        "dt": dt,
        "n_steps": n_steps,
        "scheme": cfg.scheme,
        "amplitude": cfg.amplitude,
        "kappa": cfg.kappa,
        "stopped_early": stopped_early,
        "t_reached": float(times[-1]),
    }
    if clip_unit_tol is not None:
        meta["bound_violations"] = violations
        meta["worst_overshoot"] = worst
    return Trajectory(np.array(times), norms, final, snaps, meta)


def solve(phi0: ScalarField, flow: FlowSpec | None, cfg: SimConfig) -> Trajectory:
    """Source-free evolution; see integrate for the recording contract."""
    return integrate(phi0, flow, cfg)


def step(
    phi: ScalarField,
    flow: FlowSpec | None,
    cfg: SimConfig,
    t: float = 0.0,
    dt: float | None = None,
) -> ScalarField:
    """Single step from time t; dt defaults to the resolved auto step."""
    grid = phi.grid
    if dt is None:
        dt, _ = resolve_dt(cfg, grid, flow)
    else:
        limit_cfg = SimConfig(
            t_end=cfg.t_end,
            amplitude=cfg.amplitude,
            kappa=cfg.kappa,
            dt=dt,
            scheme=cfg.scheme,
            cfl=cfg.cfl,
            dealias=cfg.dealias,
        )
        dt, _ = resolve_dt(limit_cfg, grid, flow)
    stepper = _Stepper(grid, cfg, flow)
    stepper.prepare(dt)
    with np.errstate(over="ignore", invalid="ignore"):
        c = stepper.advance(phi.coeffs, t)
    if not np.all(np.isfinite(c)):
        raise NumericsError(f"non-finite coefficients after step at t={t:.6g}")
    return ScalarField.from_coeffs(grid, c)


# -- free transport --------------------------------------------------------


def _backtrack(
    pts: np.ndarray,
    flow: FlowSpec,
    amplitude: float,
    t_arrive: float,
    duration: float,
    substeps: int | str = "auto",
) -> np.ndarray:
    """Departure points of the characteristics arriving at pts.

    Runge-Kutta on dY/ds = -A u(Y, A (t_arrive - s)); the step count
    scales with the traversal A sup|u| duration, assuming unit-cell flow
    variation.
    """
    vel = point_velocity(flow)
    a = float(amplitude)
    if substeps == "auto":
        # 48 steps per unit of A sup|u| t keeps the RK4 characteristic
        # error near 1e-3 of the cell for order-one flow variation
        n = max(4, math.ceil(48.0 * max(1e-12, a * speed_bound(flow)) * abs(duration)))
    else:
        n = int(substeps)
    ds = duration / n
    y = pts.astype(np.float64).copy()

    def rhs(s: float, q: np.ndarray) -> np.ndarray:
        return -a * vel(q, a * (t_arrive - s))

    s = 0.0
    for _ in range(n):
        k1 = rhs(s, y)
        k2 = rhs(s + 0.5 * ds, y + 0.5 * ds * k1)
        k3 = rhs(s + 0.5 * ds, y + 0.5 * ds * k2)
        k4 = rhs(s + ds, y + ds * k3)
        y = y + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s += ds
    return y


def free_transport(
    phi0: ScalarField,
    flow: FlowSpec,
    t: float,
    *,
    amplitude: float = 1.0,
    substeps: int | str = "auto",
) -> ScalarField:
    """Solution of phi_t + A u . grad phi = 0 at time t.

    Characteristics are backtracked from the grid nodes with RK4 and the
    initial field is sampled there through its trigonometric interpolant,
    so the only discretization error is in the characteristic ODE.
    """
    if t == 0.0:
        return phi0
    g = phi0.grid
    pts = np.stack([m.ravel() for m in g.meshgrid()], axis=1)
    dep = _backtrack(pts, flow, amplitude, t, t, substeps=substeps)
    vals = sample_fourier(phi0, dep).reshape(g.nx, g.ny)
    return ScalarField(g, vals)


# -- channel data -----------------------------------------------------------


@dataclass(frozen=True)
class ChannelDatum:
    """Initial datum constant along streamlines of a plateau channel."""

    field: ScalarField
    plateau: Plateau
    h1: float
    advective_residual: float


def _poly_bump(s: np.ndarray, order: int = 10) -> np.ndarray:
    """C^(order-1) bump (1 - s^2)^order on |s| < 1, peak value 1."""
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = (1.0 - s[inside] ** 2) ** order
    return out


def channel_datum(
    flow: Shear | Percolating,
    grid: Grid2,
    *,
    plateau_index: int = 0,
    width: float = 0.75,
    x1_profile: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ChannelDatum:
    """Bump in the level coordinate, supported inside a profile plateau.

    The datum theta(y(x)) is constant along streamlines.  The reported
    residual evaluates u . grad theta(y(x)) with the chain rule (grad of
    the level coordinate is (p', -1)), so it certifies that the sampled
    velocity satisfies the channel identity on this grid.  A spectral
    gradient would instead measure the truncation tail of the compactly
    supported bump, which no practical resolution pushes to rounding
    level.  width is the support as a fraction of the plateau.
    x1_profile multiplies a periodic factor in x1 (product datum for
    translating channels); such a datum is no longer constant along
    streamlines and the residual is reported as nan.
    """
    plats = flow.profile.plateaus
    if not plats:
        raise ValueError("flow profile has no plateau; no invariant channel to seed")
    if not 0 <= plateau_index < len(plats):
        raise ValueError(f"plateau_index {plateau_index} out of range for {len(plats)} plateaus")
    if not 0.0 < width <= 1.0:
        raise ValueError(f"width must lie in (0, 1], got {width}")
    pl = plats[plateau_index]
    c = 0.5 * (pl.lo + pl.hi)
    half = 0.5 * width * (pl.hi - pl.lo)

    xm, ym = grid.meshgrid()
    # signed offset from the plateau center on the circle
    s = (np.mod(_level_coordinate(flow, xm, ym) - c + 0.5, 1.0) - 0.5) / half
    order = 10
    vals = _poly_bump(s, order)
    if x1_profile is not None:
        vals = vals * np.asarray(x1_profile(xm), dtype=np.float64)
    fld = ScalarField(grid, vals)
    h1 = h1_seminorm(fld)

    if x1_profile is not None:
        return ChannelDatum(fld, pl, h1, math.nan)
    vel = velocity(flow, grid)
    inside = np.abs(s) < 1.0
    dtheta = np.zeros_like(s)
    dtheta[inside] = -2.0 * order * s[inside] * (1.0 - s[inside] ** 2) ** (order - 1) / half
    px = flow.p.derivative(xm) if isinstance(flow, Percolating) else np.zeros_like(xm)
    resid = ScalarField(grid, dtheta * (vel.u * px - vel.v))
    scale = max(1.0, vel.max_speed) * max(h1, 1e-300)
    return ChannelDatum(fld, pl, h1, lp_norm(resid, 2) / scale)


# -- experiment drivers ------------------------------------------------------


def _norm_after(
    phi0: ScalarField,
    flow: FlowSpec | None,
    amplitude: float,
    tau: float,
    q: float,
    cfg_base: SimConfig | None,
) -> float:
    cfg = SimConfig(
        t_end=tau,
        amplitude=amplitude,
        kappa=1.0 if cfg_base is None else cfg_base.kappa,
        scheme="IntegratingFactorRK4" if cfg_base is None else cfg_base.scheme,
        cfl=0.5 if cfg_base is None else cfg_base.cfl,
        dealias=True if cfg_base is None else cfg_base.dealias,
        record_every=10**9,
    )
    traj = solve(phi0, flow, cfg)
    return float(traj.norms["Linf" if q == np.inf else f"L{q:g}"][-1])


def enhancement_curve(
    phi0: ScalarField,
    flow: FlowSpec | None,
    tau: float,
    amplitudes: Sequence[float],
    *,
    q: float = 2,
    workers: int = 1,
    cfg_base: SimConfig | None = None,
) -> list[float]:
    """|phi^A(tau)|_q for each amplitude, dt refined per amplitude.

    Results are ordered like the input amplitudes regardless of worker
    scheduling.
    """
    if q not in (1, 2, np.inf):
        raise ValueError(f"q must be 1, 2 or inf, got {q}")
    amps = [float(a) for a in amplitudes]
    if workers <= 1 or len(amps) <= 1:
        return [_norm_after(phi0, flow, a, tau, q, cfg_base) for a in amps]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(_norm_after, phi0, flow, a, tau, q, cfg_base) for a in amps]
        return [f.result() for f in futs]


def _gaussian_l1(grid: Grid2, center: tuple[float, float], sigma: float) -> ScalarField:
    """Periodized Gaussian with unit L1 mass (rectangle rule exact here)."""
    xm, ym = grid.meshgrid()
    dx = np.mod(xm - center[0] + 0.5 * grid.lx, grid.lx) - 0.5 * grid.lx
    dy = np.mod(ym - center[1] + 0.5 * grid.ly, grid.ly) - 0.5 * grid.ly
    vals = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    mass = vals.sum() * grid.cell_area
    return ScalarField(grid, vals / mass)


def operator_norm_probe(
    flow: FlowSpec | None,
    amplitude: float,
    tau: float,
    grid: Grid2,
    *,
    n_seeds: int = 5,
    seed: int = 0,
    workers: int = 1,
    sigma: float | None = None,
    cfg_base: SimConfig | None = None,
) -> float:
    """Estimate of the L1 -> Linf norm of the evolution over [0, tau].

    Narrow L1-normalized Gaussians are released from n_seeds positions
    drawn once from the given seed; the probe reports the largest
    resulting sup norm.  A pre-check requires the diffusive spread
    sqrt(sigma^2 + 2 kappa tau) to stay below a third of the shorter
    domain side (wrap-around images then bias the peak by about 1% per
    side at most); beyond that the call fails with advice to enlarge
    the domain.
    """
    kappa = 1.0 if cfg_base is None else cfg_base.kappa
    if sigma is None:
        sigma = 4.0 * grid.h
    spread = math.sqrt(sigma * sigma + 2.0 * kappa * tau)
    if spread > min(grid.lx, grid.ly) / 3.0:
        raise ValueError(
            f"diffusive spread {spread:.3g} exceeds an eighth of the domain "
            f"(lx={grid.lx:g}, ly={grid.ly:g}); enlarge the domain or shorten tau"
        )
    rng = np.random.default_rng(seed)
    centers = [(float(grid.lx * u), float(grid.ly * v)) for u, v in rng.random((n_seeds, 2))]
    centers.sort()

    def peak(center: tuple[float, float]) -> float:
        phi0 = _gaussian_l1(grid, center, sigma)
        return _norm_after(phi0, flow, amplitude, tau, np.inf, cfg_base)

    if workers <= 1 or n_seeds <= 1:
        return max(peak(c) for c in centers)
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(peak, c) for c in centers]
        return max(f.result() for f in futs)
