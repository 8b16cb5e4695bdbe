"""Periodic grids, fields, and Fourier spectral operators.

Everything downstream works on uniform grids over the rectangle
``[0, lx) x [0, ly)`` with periodic boundary conditions.  Real fields are
stored as point values; spectral coefficients use the real-to-complex
layout of ``numpy.fft.rfft2`` (full transform along x, half-plane along y)
normalized so that ``c[m, n]`` is the coefficient of
``exp(2j*pi*(m*x/lx + n*y/ly))``.  With that normalization the forward and
inverse transforms round-trip to machine precision and Parseval's identity
reads ``lp_norm(f, 2)**2 == lx*ly * sum_k |c_k|**2`` (half-plane entries
counted twice).

Fields are immutable value objects; every operator returns a new field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "Grid2",
    "ScalarField",
    "VelocityField",
    "make_grid",
    "gradient",
    "laplacian",
    "lp_norm",
    "h1_seminorm",
    "dealias",
    "mean",
    "divergence",
    "sample_fourier",
    "save_field",
    "load_field",
    "field_to_csv",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid2:
    """Uniform periodic grid on ``[0, lx) x [0, ly)``.

    Parameters
    ----------
    nx, ny : int
        Number of points along x and y.  Both must be even and >= 8 so the
        2/3-rule mask and the Nyquist bookkeeping are well defined.
    lx, ly : float
        Period lengths, strictly positive.

    Attributes
    ----------
    x, y : ndarray
        1D point coordinates (cell left edges).
    kx, ky : ndarray
        Angular wavenumbers matching the rfft2 coefficient layout:
        ``kx`` has shape ``(nx,)`` in fftfreq order, ``ky`` has shape
        ``(ny//2 + 1,)``.
    k2 : ndarray
        ``kx**2 + ky**2`` broadcast to the coefficient shape.
    dealias_mask : ndarray of bool
        True on modes kept by the 2/3 rule: ``|m| <= nx/3 and |n| <= ny/3``
        in integer mode numbers.
    """

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    x: np.ndarray = field(init=False, repr=False, compare=False)
    y: np.ndarray = field(init=False, repr=False, compare=False)
    kx: np.ndarray = field(init=False, repr=False, compare=False)
    ky: np.ndarray = field(init=False, repr=False, compare=False)
    k2: np.ndarray = field(init=False, repr=False, compare=False)
    dealias_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if int(n) != n or n < 8 or n % 2 != 0:
                raise ValueError(f"{name} must be an even integer >= 8, got {n!r}")
        for name, l in (("lx", self.lx), ("ly", self.ly)):
            if not (l > 0.0) or not np.isfinite(l):
                raise ValueError(f"{name} must be a positive finite float, got {l!r}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))

        nx, ny, lx, ly = self.nx, self.ny, self.lx, self.ly
        object.__setattr__(self, "x", _readonly(np.arange(nx) * (lx / nx)))
        object.__setattr__(self, "y", _readonly(np.arange(ny) * (ly / ny)))
        kx = 2.0 * np.pi * np.fft.fftfreq(nx, d=lx / nx)
        ky = 2.0 * np.pi * np.fft.rfftfreq(ny, d=ly / ny)
        object.__setattr__(self, "kx", _readonly(kx))
        object.__setattr__(self, "ky", _readonly(ky))
        object.__setattr__(self, "k2", _readonly(kx[:, None] ** 2 + ky[None, :] ** 2))
        mx = np.rint(np.fft.fftfreq(nx) * nx).astype(int)
        my = np.arange(ny // 2 + 1)
        mask = (np.abs(mx)[:, None] <= nx / 3.0) & (my[None, :] <= ny / 3.0)
        mask = np.ascontiguousarray(mask)
        mask.flags.writeable = False
        object.__setattr__(self, "dealias_mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cshape(self) -> tuple[int, int]:
        """Shape of the rfft2 coefficient array."""
        return (self.nx, self.ny // 2 + 1)

    @property
    def cell_area(self) -> float:
        return (self.lx / self.nx) * (self.ly / self.ny)

    @property
    def h(self) -> float:
        """Smallest grid spacing, used by CFL bounds."""
        return min(self.lx / self.nx, self.ly / self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each rfft2 coefficient in the full spectrum.

        Columns 0 and ny/2 (Nyquist) appear once, interior columns twice.
        """
        w = np.full(self.cshape, 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0  # ny is even, so the last column is the Nyquist line
        w.flags.writeable = False
        return w


def make_grid(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> Grid2:
    return Grid2(nx, ny, lx, ly)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real scalar field sampled on a :class:`Grid2`.

    ``values[i, j] = f(x[i], y[j])``.  The coefficient view is computed
    lazily and cached; both arrays are read-only.
    """

    grid: Grid2
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "_coeffs", None)

    @classmethod
    def from_function(cls, grid: Grid2, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        X, Y = grid.meshgrid()
        return cls(grid, np.asarray(fn(X, Y), dtype=np.float64))

    @classmethod
    def from_coeffs(cls, grid: Grid2, coeffs: np.ndarray) -> "ScalarField":
        c = np.asarray(coeffs, dtype=np.complex128)
        if c.shape != grid.cshape:
            raise ValueError(f"coeffs shape {c.shape} != expected {grid.cshape}")
        vals = np.fft.irfft2(c * (grid.nx * grid.ny), s=grid.shape)
        return cls(grid, vals)

    @property
    def coeffs(self) -> np.ndarray:
        """Normalized rfft2 coefficients (read-only, cached)."""
        c = object.__getattribute__(self, "_coeffs")
        if c is None:
            c = np.fft.rfft2(self.values) / (self.grid.nx * self.grid.ny)
            c.flags.writeable = False
            object.__setattr__(self, "_coeffs", c)
        return c

    # -- arithmetic returning new fields --------------------------------
    def _check(self, other: "ScalarField") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, a: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(a))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Incompressible velocity field ``(u, v)`` on a :class:`Grid2`."""

    grid: Grid2
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        for name, comp in (("u", self.u), ("v", self.v)):
            a = np.asarray(comp, dtype=np.float64)
            if a.shape != self.grid.shape:
                raise ValueError(f"{name} shape {a.shape} != grid shape {self.grid.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"velocity component {name} must be finite")
            object.__setattr__(self, name, _readonly(a))

    @classmethod
    def from_stream(cls, stream: ScalarField) -> "VelocityField":
        """Perpendicular gradient of a stream function: ``(-dU/dy, dU/dx)``.

        Divergence of the result vanishes identically in coefficient space.
        """
        dx, dy = gradient(stream)
        return cls(stream.grid, -dy.values, dx.values)

    @property
    def max_speed(self) -> float:
        return float(np.hypot(self.u, self.v).max())


# -- operators -----------------------------------------------------------


def grad_coeffs(g: Grid2, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradient in coefficient space.

    Nyquist lines have no well-defined odd derivative; drop them.
    """
    cx = (1j * g.kx)[:, None] * c
    cy = (1j * g.ky)[None, :] * c
    cx[g.nx // 2, :] = 0.0
    cy[:, -1] = 0.0
    return cx, cy


def gradient(f: ScalarField) -> tuple[ScalarField, ScalarField]:
    """Spectral gradient ``(df/dx, df/dy)``."""
    g = f.grid
    cx, cy = grad_coeffs(g, f.coeffs)
    return ScalarField.from_coeffs(g, cx), ScalarField.from_coeffs(g, cy)


def laplacian(f: ScalarField) -> ScalarField:
    g = f.grid
    return ScalarField.from_coeffs(g, -g.k2 * f.coeffs)


def lp_norm(f: ScalarField, p: float) -> float:
    """L^p norm by the rectangle rule; ``p = inf`` gives the max norm.

    Rejects p < 1 (not a norm).
    """
    if p == np.inf:
        return float(np.abs(f.values).max())
    p = float(p)
    if p < 1.0:
        raise ValueError(f"lp_norm requires p >= 1 or p = inf, got {p}")
    return float((np.abs(f.values) ** p).sum() * f.grid.cell_area) ** (1.0 / p)


def h1_seminorm(f: ScalarField) -> float:
    """``(sum_k |k|^2 |c_k|^2 * lx*ly)**0.5``, equal to ``lp_norm(|grad f|, 2)``."""
    g = f.grid
    w = g.parseval_weights()
    s = float((g.k2 * np.abs(f.coeffs) ** 2 * w).sum())
    return float(np.sqrt(s * g.lx * g.ly))


def dealias(f: ScalarField) -> ScalarField:
    """Zero all modes with ``|m| > nx/3`` or ``|n| > ny/3`` (2/3 rule)."""
    g = f.grid
    return ScalarField.from_coeffs(g, np.where(g.dealias_mask, f.coeffs, 0.0))


def mean(f: ScalarField) -> float:
    """Zero-mode value, i.e. the average of the field."""
    return float(f.values.mean())


def divergence(w: VelocityField) -> ScalarField:
    g = w.grid
    cu = np.fft.rfft2(w.u) / (g.nx * g.ny)
    cv = np.fft.rfft2(w.v) / (g.nx * g.ny)
    cdx, _ = grad_coeffs(g, cu)
    _, cdy = grad_coeffs(g, cv)
    return ScalarField.from_coeffs(g, cdx + cdy)


def sample_fourier(f: ScalarField, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary points.

    Parameters
    ----------
    f : ScalarField
    points : ndarray, shape (P, 2)
        Coordinates; they are wrapped into the periodic cell automatically
        (plane waves are periodic, no explicit wrapping needed).

    Returns
    -------
    ndarray, shape (P,)

    Notes
    -----
    Cost is O(P * nx * ny) through two dense contractions; intended for
    departure-point sampling and orbit diagnostics, not as a transform.
    """
    g = f.grid
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    c = np.fft.fft2(f.values) / (g.nx * g.ny)  # full plane for asymmetric points
    kx_full = 2.0 * np.pi * np.fft.fftfreq(g.nx, d=g.lx / g.nx)
    ky_full = 2.0 * np.pi * np.fft.fftfreq(g.ny, d=g.ly / g.ny)
    # the Nyquist lines carry cos-only content; splitting them symmetrically
    # keeps the interpolant real and matches grid values exactly
    c = c.copy()
    c[g.nx // 2, :] *= 0.5
    c[:, g.ny // 2] *= 0.5
    kx_ext = np.concatenate([kx_full, [-kx_full[g.nx // 2]]])
    ky_ext = np.concatenate([ky_full, [-ky_full[g.ny // 2]]])
    c_ext = np.zeros((g.nx + 1, g.ny + 1), dtype=np.complex128)
    c_ext[: g.nx, : g.ny] = c
    c_ext[g.nx, : g.ny] = c[g.nx // 2, :]
    c_ext[: g.nx, g.ny] = c[:, g.ny // 2]
    c_ext[g.nx, g.ny] = c[g.nx // 2, g.ny // 2]

    # chunk the points so the (nx+1, P) temporary stays below ~64 MB
    blk = max(1024, (1 << 22) // (g.nx + 1))
    out = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], blk):
        sl = slice(lo, min(lo + blk, pts.shape[0]))
        ey = np.exp(1j * np.outer(ky_ext, pts[sl, 1]))  # (ny+1, P_blk)
        gmat = c_ext @ ey  # (nx+1, P_blk)
        ex = np.exp(1j * np.outer(kx_ext, pts[sl, 0]))
        out[sl] = np.real(np.einsum("kp,kp->p", ex, gmat))
    return out


# -- serialization -------------------------------------------------------

_HEADER_DTYPE = np.dtype([("nx", "<i8"), ("ny", "<i8"), ("lx", "<f8"), ("ly", "<f8")])


def save_field(f: ScalarField, path: str | Path) -> None:
    """Write the flat binary layout: int64 nx, ny; float64 lx, ly; row-major values."""
    g = f.grid
    header = np.array([(g.nx, g.ny, g.lx, g.ly)], dtype=_HEADER_DTYPE)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path: str | Path) -> ScalarField:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER_DTYPE.itemsize)
        if len(raw) != _HEADER_DTYPE.itemsize:
            raise ValueError(f"{path}: truncated header")
        hdr = np.frombuffer(raw, dtype=_HEADER_DTYPE)[0]
        nx, ny = int(hdr["nx"]), int(hdr["ny"])
        grid = Grid2(nx, ny, float(hdr["lx"]), float(hdr["ly"]))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values, found {data.size}")
    return ScalarField(grid, data.reshape(nx, ny))


def field_to_csv(f: ScalarField, path: str | Path) -> None:
    """Write ``x,y,value`` rows in row-major order (repr-exact floats)."""
    g = f.grid
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for i in range(g.nx):
            xi = repr(float(g.x[i]))
            for j in range(g.ny):
                fh.write(f"{xi},{float(g.y[j])!r},{float(f.values[i, j])!r}\n")
