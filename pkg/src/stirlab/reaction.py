"""Reacting fronts in a stirred medium: quenching and the integral criterion.

The temperature field obeys the linear advection-diffusion dynamics plus
a pointwise source f(T) that vanishes at 0 and 1.  Everything here rides
on the evolve integrator; the source enters the RK stages pointwise, so
a vanishing source reduces the reactive solver to the passive one bit
for bit.

Quenching means the sup norm falls below the ignition threshold; beyond
that point an ignition source is identically off and the leftover heat
decays linearly.  The amplitude search brackets the smallest stirring
strength that quenches by a given horizon, and the integral criterion
estimates whether the reaction can outrun dissipation at all.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .evolve import (
    SimConfig,
    Trajectory,
    _gaussian_l1,
    integrate,
    trajectory_to_csv,  # noqa: F401  (re-exported interface)
)
from .flows import FlowClass, FlowSpec, classify_flow, flow_to_dict
from .spectral import Grid2, ScalarField, grad_coeffs, make_grid

__all__ = [
    "Ignition",
    "Arrhenius",
    "PowerLaw",
    "QuenchSearch",
    "solve_radt",
    "quench_detect",
    "critical_amplitude",
    "quench_report_json",
    "ia_criterion",
    "nash_check",
    "nash_corpus",
]

CLIP_TOL = 1e-6


@dataclass(frozen=True)
class Ignition:
    """Source gain*(T - eta0)*(1 - T) above the threshold, zero below.

    Exactly zero on [0, eta0]: cold regions do not react at all, which
    is what makes quenching by stirring possible.
    """

    eta0: float
    gain: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.eta0 < 1.0:
            raise ValueError(f"eta0 must lie in (0, 1), got {self.eta0}")
        if not self.gain > 0.0:
            raise ValueError(f"gain must be positive, got {self.gain}")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        v = np.clip(values, 0.0, 1.0)
        return np.where(v > self.eta0, self.gain * (v - self.eta0) * (1.0 - v), 0.0)

    @property
    def lipschitz(self) -> float:
        # |f'| = gain*|1 + eta0 - 2T| peaks at T = 1 on [eta0, 1]
        return self.gain * (1.0 - self.eta0)

    def to_dict(self) -> dict:
        return {"type": "Ignition", "eta0": self.eta0, "gain": self.gain}


@dataclass(frozen=True)
class Arrhenius:
    """Source e^{-c/T}(1 - T), extended by continuity with f(0) = 0."""

    c: float

    def __post_init__(self) -> None:
        if not self.c > 0.0:
            raise ValueError(f"c must be positive, got {self.c}")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        v = np.clip(values, 0.0, 1.0)
        out = np.zeros_like(v)
        pos = v > 0.0
        out[pos] = np.exp(-self.c / v[pos]) * (1.0 - v[pos])
        return out

    @property
    def lipschitz(self) -> float:
        # transcendental extremum; sampled sup of |f'| with 1% headroom
        t = np.linspace(1e-6, 1.0, 100_001)
        fp = np.exp(-self.c / t) * (self.c * (1.0 - t) / (t * t) - 1.0)
        return 1.01 * float(np.abs(fp).max())

    def to_dict(self) -> dict:
        return {"type": "Arrhenius", "c": self.c}


@dataclass(frozen=True)
class PowerLaw:
    """Source c*T^alpha*(1 - T) with alpha > 1."""

    c: float
    alpha: float

    def __post_init__(self) -> None:
        if not self.c > 0.0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        v = np.clip(values, 0.0, 1.0)
        return self.c * v**self.alpha * (1.0 - v)

    @property
    def lipschitz(self) -> float:
        # |f'| on [0,1] peaks at T = 1 where f' = -c
        return self.c

    def to_dict(self) -> dict:
        return {"type": "PowerLaw", "c": self.c, "alpha": self.alpha}


ReactionSpec = Ignition | Arrhenius | PowerLaw


def _reaction_dict(reaction: ReactionSpec | None) -> dict:
    return {"type": "None"} if reaction is None else reaction.to_dict()


def solve_radt(
    T0: ScalarField,
    flow: FlowSpec | None,
    A: float,
    reaction: ReactionSpec | None,
    cfg: SimConfig,
    clip_tol: float = CLIP_TOL,
) -> Trajectory:
    """Reactive evolution of T0; reaction None runs the passive equation.

    The state is confined to [-clip_tol, 1 + clip_tol] each step;
    excursions beyond that are scheme errors, counted in the trajectory
    meta and fatal when persistent.
    """
    vmin, vmax = float(T0.values.min()), float(T0.values.max())
    if vmin < 0.0 or vmax > 1.0:
        raise ValueError(f"T0 must lie in [0, 1]; found range [{vmin:g}, {vmax:g}]")
    cfg = replace(cfg, amplitude=float(A))
    traj = integrate(T0, flow, cfg, reaction=reaction, clip_unit_tol=clip_tol)
    traj.meta["reaction"] = _reaction_dict(reaction)
    return traj


def quench_detect(traj: Trajectory, eta0: float) -> float | None:
    """First recorded time with sup|T| <= eta0, or None."""
    below = np.flatnonzero(traj.norms["Linf"] <= eta0)
    return float(traj.times[below[0]]) if below.size else None


def front_datum(
    grid: Grid2,
    lo: float,
    hi: float,
    edge: float = 0.4,
    mollify: float = 4.0,
    y_window: tuple[float, float] | None = None,
    y_edge: float = 0.15,
) -> ScalarField:
    """Unit-height ignition block: plateau on [lo, hi] in x1.

    y_window restricts the block in x2 the same way (otherwise it spans
    the whole cross-section).  A quintic smoothstep closes the edges,
    then a spectral Gaussian of scale mollify*h band-limits the result;
    without that, the advected edges ring past the 1e-6 bound tolerance
    at high amplitude and the solver rejects the run.  Values are
    rescaled and clipped so sup = 1 exactly and the range stays [0, 1].
    """
    X, Y = grid.meshgrid()

    def smooth(s: np.ndarray) -> np.ndarray:
        s = np.clip(s, 0.0, 1.0)
        return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)

    vals = np.minimum(smooth((X - (lo - edge)) / edge), smooth(((hi + edge) - X) / edge))
    if y_window is not None:
        ylo, yhi = y_window
        wy = np.minimum(smooth((Y - (ylo - y_edge)) / y_edge), smooth(((yhi + y_edge) - Y) / y_edge))
        vals = vals * wy
    c = np.fft.rfft2(vals) / (grid.nx * grid.ny)
    sig = mollify * grid.h
    c *= np.exp(-0.5 * (sig * sig) * grid.k2)
    vals = np.fft.irfft2(c, s=(grid.nx, grid.ny)) * (grid.nx * grid.ny)
    return ScalarField(grid, np.clip(vals / vals.max(), 0.0, 1.0))


@dataclass(frozen=True)
class QuenchSearch:
    """Bisection outcome: bracket, every probe, and honesty flags.

    observations holds (A, quench time or None) for every run made.
    degenerate marks a sourceless search where even A_lo quenches.
    non_monotone lists (A_quenching, A_larger_not_quenching) pairs seen
    in the observations; bisection itself cannot produce them, but the
    report keeps the slot because monotonicity in A is unproven.
    """

    lo: float
    hi: float
    observations: tuple[tuple[float, float | None], ...]
    t_horizon: float
    quench_level: float
    degenerate: bool = False
    non_monotone: tuple[tuple[float, float], ...] = ()


def _probe_cfg(base: SimConfig | None, t_horizon: float, quench_level: float) -> SimConfig:
    if base is None:
        return SimConfig(
            t_end=t_horizon,
            kappa=1.0,
            record_every=8,
            stop_below_linf=quench_level,
        )
    return replace(base, t_end=t_horizon, stop_below_linf=quench_level)


def critical_amplitude(
    T0: ScalarField,
    flow: FlowSpec,
    reaction: ReactionSpec | None,
    A_lo: float,
    A_hi: float,
    t_horizon: float,
    bisection_steps: int = 6,
    quench_level: float | None = None,
    cfg: SimConfig | None = None,
) -> QuenchSearch:
    """Bracket the smallest amplitude that quenches by t_horizon.

    Requires a valid bracket: no quench at A_lo, quench at A_hi.  The
    midpoint is geometric once the bracket is positive, so the returned
    ratio hi/lo shrinks as 2^(log2(A_hi/A_lo)/2^steps).  A sourceless
    run that quenches at A_lo short-circuits to a degenerate bracket.
    """
    if not 0.0 <= A_lo < A_hi:
        raise ValueError(f"need 0 <= A_lo < A_hi, got [{A_lo}, {A_hi}]")
    if quench_level is None:
        if isinstance(reaction, Ignition):
            quench_level = reaction.eta0
        else:
            raise ValueError("quench_level is required unless the reaction is Ignition")
    cls = classify_flow(flow)
    if cls is not FlowClass.ENHANCING:
        warnings.warn(
            f"flow classifies as {cls.name}, not ENHANCING; "
            "a quenching amplitude may not exist",
            stacklevel=2,
        )
    probe_cfg = _probe_cfg(cfg, t_horizon, quench_level)
    observations: list[tuple[float, float | None]] = []

    def quenches(A: float) -> bool:
        traj = solve_radt(T0, flow, A, reaction, probe_cfg)
        t_q = quench_detect(traj, quench_level)
        observations.append((float(A), t_q))
        return t_q is not None

    if quenches(A_lo):
        if reaction is None:
            return QuenchSearch(
                lo=A_lo, hi=A_lo, observations=tuple(observations),
                t_horizon=t_horizon, quench_level=quench_level, degenerate=True,
            )
        raise ValueError(f"bracket invalid: quench already at A_lo={A_lo:g}")
    if not quenches(A_hi):
        raise ValueError(f"bracket invalid: no quench at A_hi={A_hi:g} by t={t_horizon:g}")

    lo, hi = float(A_lo), float(A_hi)
    for _ in range(bisection_steps):
        mid = math.sqrt(lo * hi) if lo > 0.0 else 0.5 * (lo + hi)
        if quenches(mid):
            hi = mid
        else:
            lo = mid

    seen = sorted(observations)
    bad = []
    for i, (a_i, t_i) in enumerate(seen):
        if t_i is None:
            continue
        for a_j, t_j in seen[i + 1 :]:
            if t_j is None:
                bad.append((a_i, a_j))
    return QuenchSearch(
        lo=lo, hi=hi, observations=tuple(observations),
        t_horizon=t_horizon, quench_level=quench_level,
        non_monotone=tuple(bad),
    )


def quench_report_json(search: QuenchSearch, flow: FlowSpec, reaction: ReactionSpec | None) -> str:
    doc = {
        "schema": "quench-report-v1",
        "flow": flow_to_dict(flow),
        "reaction": _reaction_dict(reaction),
        "tested": [{"A": a, "quench_time": t} for a, t in search.observations],
        "bracket": [search.lo, search.hi],
        "t_horizon": search.t_horizon,
        "quench_level": search.quench_level,
        "degenerate": search.degenerate,
        "non_monotone": [list(p) for p in search.non_monotone],
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def ia_criterion(
    flow: FlowSpec | None,
    A: float,
    T0_l1_budget: float,
    alpha: float,
    c: float,
    t_max: float,
    strip_cells: int = 48,
    resolution: int = 24,
    sigma: float = 0.2,
    kappa: float = 1.0,
    min_records: int = 256,
) -> dict:
    """Estimate I_A = integral of sup|phi|^(alpha-1) and test c(alpha-1)I_A < 1.

    The probe is an L1-normalized bump scaled to the given budget,
    released mid-strip; the linear equation is integrated to t_max and
    the remainder is bounded by the fitted t^(-1/2) sup-norm decay.  A
    tail whose log-log slope is not -1/2 within 0.15 fails the fit and
    the criterion reports unsatisfied with a diagnostic.
    """
    if not alpha > 3.0:
        raise ValueError(f"alpha must exceed 3 on the strip, got {alpha}")
    if not (T0_l1_budget > 0.0 and t_max > 0.0 and c > 0.0):
        raise ValueError("T0_l1_budget, c and t_max must be positive")
    grid = make_grid(strip_cells * resolution, resolution, float(strip_cells), 1.0)
    bump = T0_l1_budget * _gaussian_l1(grid, (0.5 * strip_cells, 0.5), sigma)
    # the finite strip conserves a mean floor the infinite strip lacks;
    # the mean rides through the linear equation unchanged, so evolving
    # the mean-removed probe records exactly sup|phi - mean|.  The strip
    # must still dwarf the floor or the fitted slope comes out too steep.
    datum = ScalarField(grid, bump.values - bump.values.mean())
    cfg = SimConfig(t_end=t_max, amplitude=float(A), kappa=kappa)
    from .evolve import resolve_dt

    _, n_steps = resolve_dt(cfg, grid, flow)
    cfg = replace(cfg, record_every=max(1, n_steps // min_records))
    traj = integrate(datum, flow, cfg)

    linf = traj.norms["Linf"]
    times = traj.times
    power = linf ** (alpha - 1.0)
    main = float(np.trapezoid(power, times))

    window = times >= 0.25 * t_max
    lt = np.log(times[window])
    ln = np.log(np.maximum(linf[window], 1e-300))
    slope, intercept = np.polyfit(lt, ln, 1)
    slope = float(slope)
    result = {
        "I_A": main,
        "main": main,
        "tail": 0.0,
        "tail_slope": slope,
        "satisfied": False,
        "diagnostic": None,
    }
    if abs(slope + 0.5) > 0.15:
        result["diagnostic"] = (
            f"tail fit slope {slope:.3f} is not -1/2 within 0.15; "
            "the decay bound does not apply, criterion unsatisfied"
        )
        return result
    # sup|phi(t)| <= C t^(-1/2) for t >= t_max with C from the fit
    C = math.exp(float(intercept)) * t_max ** (slope + 0.5)
    p = 0.5 * (alpha - 1.0)  # tail integrand exponent, > 1 since alpha > 3
    tail = C ** (alpha - 1.0) * t_max ** (1.0 - p) / (p - 1.0)
    ia = main + tail
    result.update(I_A=ia, tail=float(tail), satisfied=bool(c * (alpha - 1.0) * ia < 1.0))
    return result


# -- Nash ratio sanity ------------------------------------------------------


def nash_check(fields) -> float:
    """Largest ratio |psi|_2^2 / (|grad psi|_2 |psi|_1) over the corpus.

    The inequality is planar; a gradient-free (constant) field on the
    torus sends the ratio to infinity and is rejected rather than
    reported.
    """
    best = 0.0
    for f in fields:
        g = f.grid
        av = np.abs(f.values)
        l1 = float(av.sum() * g.cell_area)
        l2sq = float((av * av).sum() * g.cell_area)
        cx, cy = grad_coeffs(g, f.coeffs)
        w = g.parseval_weights()
        gradsq = float(
            ((cx.real**2 + cx.imag**2 + cy.real**2 + cy.imag**2) * w).sum()
        ) * g.lx * g.ly
        grad = math.sqrt(max(gradsq, 0.0))
        if l1 == 0.0:
            continue
        if grad <= 1e-10 * l2sq / max(l1, 1e-300) or grad == 0.0:
            raise ValueError(
                "near-constant field: the inequality is planar and torus "
                "constants violate it; restrict the corpus to localized fields"
            )
        best = max(best, l2sq / (grad * l1))
    return best


def nash_corpus(seed: int = 0) -> list[ScalarField]:
    """Bumps, multi-bumps, single modes and band-limited noise on growing tori."""
    rng = np.random.default_rng(seed)
    fields: list[ScalarField] = []
    for L, n in ((4.0, 128), (16.0, 256)):
        grid = make_grid(n, n, L, L)
        X, Y = grid.meshgrid()
        for s in (0.05 * L, 0.1 * L, 0.02 * L):
            fields.append(L * L * _gaussian_l1(grid, (0.5 * L, 0.5 * L), s))
        multi = np.zeros(grid.shape)
        for cx_, cy_ in rng.random((3, 2)) * L:
            s = 0.05 * L
            multi += _gaussian_l1(grid, (float(cx_), float(cy_)), s).values
        fields.append(ScalarField(grid, multi))
        for k in (1, 5):
            fields.append(ScalarField(grid, np.sin(2 * np.pi * k * X / L)))
        coef = rng.standard_normal((5, 5)) / 25.0
        noise = np.zeros(grid.shape)
        for i in range(1, 5):
            for j in range(5):
                noise += coef[i, j] * np.sin(2 * np.pi * (i * X + j * Y) / L)
        fields.append(ScalarField(grid, noise))
    return fields
