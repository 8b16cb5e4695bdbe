"""Smooth 1-periodic scalar profiles with exact plateau bookkeeping.

A profile is a C^1 (piecewise C^2) real function on the unit circle.  Two
representations are provided:

* :class:`FourierProfile` -- a band-limited trigonometric polynomial;
* :class:`PiecewiseProfile` -- constant plateaus joined by polynomial
  blends, built through :func:`plateau_profile`.

Plateaus are stored symbolically: inside a plateau ``value`` returns the
stored constant exactly and ``derivative`` returns exactly zero.  That
inventory is what the flow classifier consumes, so it is never rederived
from samples.

All evaluations accept scalars or arrays and wrap their argument into
``[0, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import PPoly

__all__ = ["Plateau", "FourierProfile", "PiecewiseProfile", "plateau_profile", "profile_to_dict", "profile_from_dict"]

_C1_TOL = 1e-8


@dataclass(frozen=True)
class Plateau:
    """Interval ``[lo, hi]`` on which the profile equals ``value`` exactly."""

    lo: float
    hi: float
    value: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise ValueError(f"plateau must satisfy 0 <= lo < hi <= 1, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _wrap(y):
    y = np.asarray(y, dtype=np.float64)
    return y - np.floor(y)


@dataclass(frozen=True)
class FourierProfile:
    """``const + sum_k cos[k-1]*cos(2 pi k y) + sin[k-1]*sin(2 pi k y)``."""

    const: float = 0.0
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(s) for s in self.sin))
        object.__setattr__(self, "const", float(self.const))

    @property
    def plateaus(self) -> tuple[Plateau, ...]:
        return ()

    @property
    def integral(self) -> float:
        """Integral over one period."""
        return self.const

    def value(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.full(y.shape, self.const)
        for k, c in enumerate(self.cos, start=1):
            if c:
                out += c * np.cos(2 * np.pi * k * y)
        for k, s in enumerate(self.sin, start=1):
            if s:
                out += s * np.sin(2 * np.pi * k * y)
        return out

    def derivative(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros(y.shape)
        for k, c in enumerate(self.cos, start=1):
            if c:
                out -= c * 2 * np.pi * k * np.sin(2 * np.pi * k * y)
        for k, s in enumerate(self.sin, start=1):
            if s:
                out += s * 2 * np.pi * k * np.cos(2 * np.pi * k * y)
        return out

    def antiderivative(self, y):
        """``F(y) = int_0^y value``, with ``F(0) = 0``; linear part kept exact."""
        y = np.asarray(y, dtype=np.float64)
        out = self.const * y
        for k, c in enumerate(self.cos, start=1):
            if c:
                out += c * np.sin(2 * np.pi * k * y) / (2 * np.pi * k)
        for k, s in enumerate(self.sin, start=1):
            if s:
                out += s * (1.0 - np.cos(2 * np.pi * k * y)) / (2 * np.pi * k)
        return out

    @property
    def bandwidth(self) -> int:
        return max(len(self.cos), len(self.sin), 0)


class PiecewiseProfile:
    """Plateaus joined by C^2 polynomial blends; see :func:`plateau_profile`."""

    def __init__(self, ppoly: PPoly, plateaus: Sequence[Plateau], meta: dict | None = None):
        self._ppoly = ppoly
        self._deriv = ppoly.derivative()
        self._anti = ppoly.antiderivative()
        self.plateaus = tuple(plateaus)
        self.meta = dict(meta or {})
        self._check_regularity()

    @property
    def integral(self) -> float:
        return float(self._anti(1.0))

    def value(self, y):
        return self._ppoly(_wrap(y))

    def derivative(self, y):
        return self._deriv(_wrap(y))

    def antiderivative(self, y):
        y = np.asarray(y, dtype=np.float64)
        w = _wrap(y)
        return self._anti(w) + (y - w) * self.integral

    def _check_regularity(self) -> None:
        xs = self._ppoly.x
        eps = 1e-12
        # interior breakpoints: approach from both sides
        for b in xs[1:-1]:
            for fn in (self._ppoly, self._deriv):
                jump = abs(float(fn(b + eps)) - float(fn(b - eps)))
                if jump > _C1_TOL:
                    raise ValueError(f"profile not C^1 at breakpoint {b}: jump {jump:g}")
        # periodic closure
        for fn in (self._ppoly, self._deriv):
            jump = abs(float(fn(1.0 - eps)) - float(fn(eps)))
            if jump > _C1_TOL:
                raise ValueError(f"profile not 1-periodic to C^1: jump {jump:g}")


# blend shapes on [0, 1]; all have vanishing value, slope and curvature
# at both ends unless noted
_SMOOTHSTEP = Polynomial([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])  # 0 -> 1, int = 1/2
_BUMP = Polynomial([0.0, 0.0, 0.0, 1.0, -3.0, 3.0, -1.0])  # (t(1-t))^3, int = 1/140
_WIGGLE_RAW = _BUMP * Polynomial([1.0, -2.0])  # antisymmetric, int = 0

_tt = np.linspace(0.0, 1.0, 20001)
_WIGGLE = _WIGGLE_RAW / float(np.max(np.abs(_WIGGLE_RAW(_tt))))  # max amplitude 1
_BUMP_INT = 1.0 / 140.0
del _tt


def plateau_profile(
    plateaus: Iterable[Plateau | tuple[float, float, float]],
    *,
    integral: float = 0.0,
    wiggle: float = 0.0,
) -> PiecewiseProfile:
    """Build a C^2 1-periodic profile with the given exact plateaus.

    Gaps between consecutive plateaus (cyclically) are filled with quintic
    smoothsteps between the plateau values, plus a single-signed bump
    scaled so the profile integrates to ``integral`` over one period, plus
    an optional zero-mean oscillation of amplitude ``wiggle`` (needed when
    the plateaus alone would force the profile to vanish identically).
    """
    plats = []
    for p in plateaus:
        plats.append(p if isinstance(p, Plateau) else Plateau(*p))
    if not plats:
        raise ValueError("plateau_profile needs at least one plateau; use FourierProfile otherwise")
    plats.sort(key=lambda p: p.lo)
    for a, b in zip(plats, plats[1:]):
        if b.lo < a.hi:
            raise ValueError(f"plateaus overlap: [{a.lo}, {a.hi}] and [{b.lo}, {b.hi}]")
    gap_total = 1.0 - sum(p.width for p in plats)
    if gap_total <= 0.0:
        raise ValueError("plateaus cover the whole period; no room for blends")

    # solve for the shared bump coefficient: plateau mass + smoothstep mass
    # + c * (gap length)/140 must equal the requested integral
    base_mass = sum(p.value * p.width for p in plats)
    gaps = []  # (start, length, v0, v1); start + length may exceed 1 (wrap gap)
    for i, p in enumerate(plats):
        if i < len(plats) - 1:
            end, v1 = plats[i + 1].lo, plats[i + 1].value
        else:
            end, v1 = plats[0].lo + 1.0, plats[0].value
        length = end - p.hi
        if length <= 1e-12:
            if p.value != v1:
                raise ValueError("adjacent plateaus with different values need a positive gap")
            continue
        base_mass += length * (p.value + v1) / 2.0
        gaps.append((p.hi, length, p.value, v1))
    if not gaps:
        raise ValueError("profile has no gaps to absorb the integral constraint")
    c = (integral - base_mass) / (_BUMP_INT * sum(g[1] for g in gaps))

    # each piece lives on [lo, hi] in local coordinate s = x - lo; gap
    # polynomials are composed once from their unit-interval shape
    pieces: list[tuple[float, float, Polynomial]] = []
    for p in plats:
        pieces.append((p.lo, p.hi, Polynomial([p.value])))
    for start, length, v0, v1 in gaps:
        poly_t = Polynomial([v0]) + (v1 - v0) * _SMOOTHSTEP + c * _BUMP + wiggle * _WIGGLE
        if start + length <= 1.0 + 1e-15:
            pieces.append((start, min(start + length, 1.0), _compose_affine(poly_t, 1.0 / length, 0.0)))
        else:
            # gap wraps through 1: split into [start, 1] and [0, start+length-1]
            pieces.append((start, 1.0, _compose_affine(poly_t, 1.0 / length, 0.0)))
            off = 1.0 - start
            pieces.append((0.0, start + length - 1.0, _compose_affine(poly_t, 1.0 / length, off / length)))
    pieces.sort(key=lambda q: q[0])

    xs = [q[0] for q in pieces] + [1.0]
    if abs(xs[0]) > 1e-15:
        raise ValueError("internal: pieces do not start at 0")
    coeffs = np.zeros((8, len(pieces)))
    for j, (lo, hi, poly) in enumerate(pieces):
        cs = poly.coef  # ascending in s = x - lo
        coeffs[-len(cs):, j] = cs[::-1]
    pp = PPoly(coeffs, np.array(xs))
    meta = {
        "plateaus": [(p.lo, p.hi, p.value) for p in plats],
        "integral": float(integral),
        "wiggle": float(wiggle),
    }
    return PiecewiseProfile(pp, plats, meta)


def _compose_affine(poly: Polynomial, a: float, b: float) -> Polynomial:
    """Return ``poly(a*x + b)`` as a Polynomial in x."""
    return poly(Polynomial([b, a]))


def profile_to_dict(profile) -> dict:
    if isinstance(profile, FourierProfile):
        return {"kind": "fourier", "const": profile.const, "cos": list(profile.cos), "sin": list(profile.sin)}
    if isinstance(profile, PiecewiseProfile):
        if not profile.meta:
            raise ValueError("piecewise profile lacks construction metadata; cannot serialize")
        m = profile.meta
        return {
            "kind": "plateaus",
            "plateaus": [list(p) for p in m["plateaus"]],
            "integral": m["integral"],
            "wiggle": m["wiggle"],
        }
    raise TypeError(f"not a profile: {profile!r}")


def profile_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "fourier":
        return FourierProfile(const=d.get("const", 0.0), cos=tuple(d.get("cos", ())), sin=tuple(d.get("sin", ())))
    if kind == "plateaus":
        return plateau_profile(
            [tuple(p) for p in d["plateaus"]],
            integral=d.get("integral", 0.0),
            wiggle=d.get("wiggle", 0.0),
        )
    raise ValueError(f"unknown profile kind: {kind!r}")
