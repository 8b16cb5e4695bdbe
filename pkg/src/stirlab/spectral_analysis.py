"""Truncated advection operator, eigenfunction classification, folding,
and finite-dimensional dissipative model systems.

The advection operator u . grad acts on Fourier modes of a periodic cell
as a convolution in mode space; truncating to |m|, |n| <= N gives a
skew-Hermitian matrix whose spectrum carries the enhancement criterion:
eigenvectors that remain bounded in H1 as N grows witness obstructions
(channels, eigenfunctions with nonzero eigenvalue), while eigenvectors
whose H1 norm diverges are truncation artifacts of continuous spectrum.
No finite truncation can prove absence of H1 eigenfunctions; every
report carries an explicit evidence-only flag.

Shear-type flows (velocity independent of x1, transverse component
constant) decouple into blocks of fixed first index, which is what makes
sweeps up to N = 64 affordable; generic flows assemble dense matrices
and stop at a dimension ceiling.

The abstract systems here are the finite-dimensional model of the
dissipative dynamics d phi/dt = iAL phi - Gamma phi with Gamma diagonal
and L Hermitian: the same enhancement questions posed on explicit
matrices, where the subspace spanned by smooth eigenvectors of L (H1
norm below a cutoff) plays the role of the obstruction.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .flows import Cellular, Constant, CustomStream, FlowSpec, Percolating, Shear, velocity
from .spectral import Grid2, make_grid

__all__ = [
    "AdvectionMatrix",
    "SpectralReport",
    "AbstractSystem",
    "AbstractTrajectory",
    "advection_matrix",
    "classify_spectrum",
    "extremal_eigenpairs",
    "fold_eigenfunction",
    "power_normalize",
    "apply_advection",
    "abstract_solve",
    "time_periodic_abstract_solve",
    "rage_average",
    "measure_exceeding",
    "rotation_generator_system",
    "spectral_report_json",
]

DENSE_DIM_CEILING = 17_000  # (2*64+1)^2 is the absolute stop
DENSE_ASSEMBLY_LIMIT = 41  # larger N must use the block path or iterative solves


# -- advection matrix -------------------------------------------------------


@dataclass(frozen=True)
class AdvectionMatrix:
    """Truncation of u . grad to modes |m|, |n| <= N on a rectangular cell.

    entries[k, k'] = 2 pi i (u_hat(k - k') . (m'/lx, n'/ly)); the matrix
    is skew-Hermitian after the logged symmetrization.  modes holds the
    (m, n) pair for each row.
    """

    N: int
    cell: tuple[float, float]
    entries: np.ndarray
    modes: np.ndarray
    correction: float
    warnings_: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def mode_index(self, m: int, n: int) -> int:
        N = self.N
        if abs(m) > N or abs(n) > N:
            raise IndexError(f"mode ({m}, {n}) outside truncation N={N}")
        return (m + N) * (2 * N + 1) + (n + N)


def _mode_list(N: int) -> np.ndarray:
    r = np.arange(-N, N + 1)
    mm, nn = np.meshgrid(r, r, indexing="ij")
    return np.stack([mm.ravel(), nn.ravel()], axis=1)


def _velocity_mode_table(
    flow: FlowSpec, N: int, cell: tuple[float, float], t: float
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Full-plane Fourier coefficients of u on the cell, |modes| <= 2N.

    Sampled on a grid oversampled threefold past the needed range so the
    retained coefficients of smooth profiles are aliasing-clean; energy
    outside the range is reported as a bandwidth warning.
    """
    lx, ly = cell
    n_side = 6 * N + 8
    grid = make_grid(n_side, n_side, lx, ly)
    vel = velocity(flow, grid, t=t)
    notes: list[str] = []
    tables = []
    for comp in (vel.u, vel.v):
        c = np.fft.fft2(comp) / (n_side * n_side)
        total = float((np.abs(c) ** 2).sum())
        idx = np.fft.fftfreq(n_side, d=1.0 / n_side).astype(int)
        keep = np.abs(idx) <= 2 * N
        inside = float((np.abs(c[np.ix_(keep, keep)]) ** 2).sum())
        if total > 0 and (total - inside) > 1e-10 * total:
            notes.append(
                f"velocity bandwidth exceeds 2N={2 * N}: "
                f"{(total - inside) / total:.3e} of the energy discarded"
            )
        # table indexed by (dm + 2N, dn + 2N)
        r = np.arange(-2 * N, 2 * N + 1)
        tables.append(c[np.ix_(r % n_side, r % n_side)])
    return tables[0], tables[1], notes


def advection_matrix(
    flow: FlowSpec,
    N: int,
    cell: tuple[float, float] = (1.0, 1.0),
    t: float = 0.0,
) -> AdvectionMatrix:
    """Dense truncation of u . grad; see AdvectionMatrix for the layout.

    The assembly symmetrizes to exact skew-Hermiticity and logs the
    correction size.  For band-limited velocities the correction sits at
    rounding level; profiles with unresolved tails trigger a bandwidth
    warning instead of failing, since the truncated operator is still
    the object under study.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    d = (2 * N + 1) ** 2
    if d > DENSE_DIM_CEILING:
        raise ValueError(f"dense dimension {d} above ceiling {DENSE_DIM_CEILING}")
    if N > DENSE_ASSEMBLY_LIMIT:
        raise ValueError(
            f"dense assembly beyond N={DENSE_ASSEMBLY_LIMIT} is not supported; "
            "shear-type flows classify through the block path instead"
        )
    lx, ly = float(cell[0]), float(cell[1])
    u1, u2, notes = _velocity_mode_table(flow, N, cell, t)
    modes = _mode_list(N)
    mm = modes[:, 0]
    nn = modes[:, 1]
    entries = np.empty((d, d), dtype=np.complex128)
    # row blocks keep the (d x d) index temporaries modest
    blk = max(1, (1 << 22) // d)
    for lo in range(0, d, blk):
        sl = slice(lo, min(lo + blk, d))
        dm = mm[sl, None] - mm[None, :] + 2 * N
        dn = nn[sl, None] - nn[None, :] + 2 * N
        entries[sl] = (2j * np.pi) * (
            u1[dm, dn] * (mm[None, :] / lx) + u2[dm, dn] * (nn[None, :] / ly)
        )
    defect = entries + entries.conj().T
    correction = 0.5 * float(np.linalg.norm(defect))
    entries -= 0.5 * defect
    # incompressibility makes the mean row and column vanish analytically
    # (u_hat(p) . p = 0); enforced so constants are an exact kernel vector
    k0 = N * (2 * N + 1) + N
    entries[k0, :] = 0.0
    entries[:, k0] = 0.0
    scale = float(np.linalg.norm(entries))
    if scale > 0 and correction > 1e-10 * scale and not notes:
        notes.append(f"skew-Hermitian correction {correction / scale:.3e} above rounding")
    return AdvectionMatrix(N, (lx, ly), entries, modes, correction, tuple(notes))


# -- eigensolves ------------------------------------------------------------


def _is_shear_type(flow: FlowSpec) -> bool:
    """True when u is x1-independent with constant transverse component."""
    return isinstance(flow, (Shear, Constant))


def _shear_blocks(
    flow: FlowSpec, N: int, cell: tuple[float, float]
) -> dict[int, np.ndarray]:
    """Per-m blocks of the truncation for x1-independent flows.

    Block m couples transverse modes through the profile spectrum:
    B_m[n, n'] = 2 pi i (m/lx) g_hat(n - n') + 2 pi i beta n delta_{nn'}.
    """
    lx, ly = cell
    n_side = 6 * N + 8
    grid = make_grid(8, n_side, 1.0, ly)
    vel = velocity(flow, grid)
    profile_line = vel.u[0, :]
    beta = float(vel.v[0, 0])
    g_hat = np.fft.fft(profile_line) / n_side
    r = np.arange(-N, N + 1)
    dn = r[:, None] - r[None, :]
    g_block = g_hat[dn % n_side]
    blocks = {}
    for m in range(-N, N + 1):
        b = (2j * np.pi) * ((m / lx) * g_block + beta * np.diag(r / ly))
        blocks[m] = 0.5 * (b - b.conj().T)
    return blocks


@dataclass
class _EigData:
    """Eigenpairs at one truncation; dense or per-block layout."""

    N: int
    kind: str  # "dense" or "blocks"
    lams: dict[int, np.ndarray]  # block m -> eigenvalue imag parts (dense: key 0)
    vecs: dict[int, np.ndarray]  # block m -> columns are eigenvectors
    warnings_: tuple[str, ...] = ()


def _eigh_checked(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return scipy.linalg.eigh(h)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare
        cond = float(np.linalg.cond(h)) if h.size < 10**7 else math.inf
        raise RuntimeError(f"eigendecomposition failed (condition ~{cond:.3e}): {exc}")


def _eig_at(flow: FlowSpec, N: int, cell: tuple[float, float]) -> _EigData:
    if _is_shear_type(flow):
        blocks = _shear_blocks(flow, N, cell)
        lams: dict[int, np.ndarray] = {}
        vecs: dict[int, np.ndarray] = {}
        for m, b in blocks.items():
            mu, v = _eigh_checked(-1j * b)  # Hermitian form; eigenvalues iλ = i mu
            lams[m] = mu
            vecs[m] = v
        return _EigData(N, "blocks", lams, vecs)
    mat = advection_matrix(flow, N, cell)
    mu, v = _eigh_checked(-1j * mat.entries)
    return _EigData(N, "dense", {0: mu}, {0: v}, mat.warnings_)


def _h1_weights(N: int, cell: tuple[float, float], m_fixed: int | None = None) -> np.ndarray:
    lx, ly = cell
    if m_fixed is None:
        modes = _mode_list(N)
        ksq = (2 * np.pi * modes[:, 0] / lx) ** 2 + (2 * np.pi * modes[:, 1] / ly) ** 2
    else:
        n = np.arange(-N, N + 1)
        ksq = (2 * np.pi * m_fixed / lx) ** 2 + (2 * np.pi * n / ly) ** 2
    return 1.0 + ksq


def _pad_dense(vec: np.ndarray, n_from: int, n_to: int) -> np.ndarray:
    """Zero-pad a dense-layout vector from truncation n_from to n_to."""
    w = np.zeros((2 * n_to + 1) ** 2, dtype=np.complex128)
    src = vec.reshape(2 * n_from + 1, 2 * n_from + 1)
    lo = n_to - n_from
    w.reshape(2 * n_to + 1, 2 * n_to + 1)[
        lo : lo + 2 * n_from + 1, lo : lo + 2 * n_from + 1
    ] = src
    return w


def _pad_line(vec: np.ndarray, n_from: int, n_to: int) -> np.ndarray:
    w = np.zeros(2 * n_to + 1, dtype=np.complex128)
    w[n_to - n_from : n_to + n_from + 1] = vec
    return w


# -- classification ---------------------------------------------------------

CLASS_FIRST_INTEGRAL = "FirstIntegral"
CLASS_H1 = "H1Eigenfunction"
CLASS_ROUGH = "RoughEigenfunction"
CLASS_UNDECIDED = "Undecided"


@dataclass(frozen=True)
class SpectralReport:
    """One eigenpair chain across the truncation sweep.

    lam is the imaginary part of the eigenvalue at the largest matched
    truncation (eigenvalues are purely imaginary by construction).
    h1_norms[i] is the eigenvector H1 norm at N_list[i], nan where the
    chain broke; block is the fixed first mode index for shear-type
    flows and None for dense sweeps.
    """

    lam: float
    vector: np.ndarray
    N_list: tuple[int, ...]
    h1_norms: tuple[float, ...]
    lam_sweep: tuple[float, ...]
    classification: str
    block: int | None = None

    @property
    def eigenvalue(self) -> complex:
        return 1j * self.lam


def _classify_chain(
    h1: list[float], lam: float, lambda_tol: float, growth_ratio: float
) -> str:
    if abs(lam) <= lambda_tol:
        return CLASS_FIRST_INTEGRAL
    vals = [v for v in h1 if not math.isnan(v)]
    if len(vals) < 3 or math.isnan(h1[-1]) or math.isnan(h1[-2]):
        return CLASS_UNDECIDED
    tail = h1[-2], h1[-1]
    if max(tail) / min(tail) <= growth_ratio:
        return CLASS_H1
    ratios = [vals[i + 1] / vals[i] for i in range(len(vals) - 1)]
    if all(r >= growth_ratio for r in ratios):
        return CLASS_ROUGH
    return CLASS_UNDECIDED


def classify_spectrum(
    flow: FlowSpec,
    N_list: Sequence[int],
    lambda_tol: float | None = None,
    growth_ratio: float = 1.5,
    cell: tuple[float, float] = (1.0, 1.0),
    overlap_floor: float = 0.5,
    workers: int = 1,
) -> list[SpectralReport]:
    """Track eigenpairs across truncations and classify each chain.

    Chains start from every eigenpair at the smallest truncation and are
    continued by maximal overlap (after zero-padding) at each larger N;
    an overlap below overlap_floor breaks the chain and the tail norms
    become nan.  FirstIntegral means |lambda| <= lambda_tol (default
    1e-6 times the measured spectral radius); H1Eigenfunction means the
    H1 norms stabilized over the last two truncations within
    growth_ratio; RoughEigenfunction means they grew by at least
    growth_ratio at every step.  Everything else is Undecided.  These
    are finite-truncation verdicts, never proofs of absence.
    """
    ns = [int(n) for n in N_list]
    if len(ns) < 3:
        raise ValueError("N_list needs at least 3 truncations for a growth verdict")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("N_list must be strictly increasing")
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            data = list(pool.map(lambda n: _eig_at(flow, n, cell), ns))
    else:
        data = [_eig_at(flow, n, cell) for n in ns]
    kinds = {d.kind for d in data}
    if len(kinds) != 1:  # pragma: no cover - dispatch is per-flow
        raise RuntimeError("inconsistent eigensolve layouts across the sweep")
    kind = kinds.pop()

    spectral_radius = max(float(np.abs(mu).max()) for mu in data[-1].lams.values())
    if lambda_tol is None:
        lambda_tol = 1e-6 * spectral_radius

    reports: list[SpectralReport] = []
    blocks = sorted(data[0].lams.keys())
    for m in blocks:
        n_prev = ns[0]
        vec_prev = data[0].vecs[m]
        lam_prev = data[0].lams[m]
        n_chain = vec_prev.shape[1]
        # per-chain state
        chain_h1 = [[_chain_h1(vec_prev[:, i], ns[0], cell, kind, m)] for i in range(n_chain)]
        chain_lam = [[float(lam_prev[i])] for i in range(n_chain)]
        chain_vec = [vec_prev[:, i] for i in range(n_chain)]
        chain_n = [ns[0]] * n_chain
        alive = list(range(n_chain))
        for level in range(1, len(ns)):
            n_cur = ns[level]
            cur = data[level]
            v_cur = cur.vecs[m]
            lam_cur = cur.lams[m]
            if kind == "dense":
                padded = np.stack(
                    [_pad_dense(chain_vec[i], chain_n[i], n_cur) for i in alive], axis=1
                )
            else:
                padded = np.stack(
                    [_pad_line(chain_vec[i], chain_n[i], n_cur) for i in alive], axis=1
                )
            # degenerate eigenvalues make individual eigenvectors an
            # arbitrary basis choice, so matching works against
            # eigenvalue clusters: the overlap is the norm of the
            # projection onto the cluster subspace
            clusters = _cluster_indices(lam_cur)
            coeffs = v_cur.conj().T @ padded  # (d_cur, n_alive)
            overlap = np.stack(
                [np.sqrt((np.abs(coeffs[c]) ** 2).sum(axis=0)) for c in clusters], axis=0
            )
            order = np.dstack(
                np.unravel_index(np.argsort(-overlap, axis=None), overlap.shape)
            )[0]
            assigned: dict[int, int] = {}
            load: dict[int, int] = {}
            for row, col in order:
                i = alive[col]
                c = int(row)
                if i in assigned:
                    continue
                if load.get(c, 0) >= clusters[c].size:
                    continue
                if overlap[row, col] < overlap_floor:
                    continue
                assigned[i] = c
                load[c] = load.get(c, 0) + 1
                if len(assigned) == len(alive):
                    break
            # representatives: project each chain onto its cluster
            # subspace, Gram-Schmidt among chains sharing one
            reps: dict[int, np.ndarray] = {}
            by_cluster: dict[int, list[int]] = {}
            for i, c in assigned.items():
                by_cluster.setdefault(c, []).append(i)
            for c, members in by_cluster.items():
                members.sort(key=lambda i: -overlap[c, alive.index(i)])
                basis: list[np.ndarray] = []
                for i in members:
                    q = coeffs[clusters[c], alive.index(i)].copy()
                    for b in basis:
                        q -= (b.conj() @ q) * b
                    nq = float(np.linalg.norm(q))
                    if nq < 1e-8:
                        del assigned[i]
                        continue
                    q /= nq
                    basis.append(q)
                    reps[i] = v_cur[:, clusters[c]] @ q
            next_alive = []
            for i in alive:
                if i in assigned:
                    c = assigned[i]
                    chain_vec[i] = reps[i]
                    chain_n[i] = n_cur
                    chain_h1[i].append(_chain_h1(reps[i], n_cur, cell, kind, m))
                    chain_lam[i].append(float(lam_cur[clusters[c]].mean()))
                    next_alive.append(i)
                else:
                    chain_h1[i].append(math.nan)
                    chain_lam[i].append(math.nan)
            alive = next_alive
        for i in range(n_chain):
            lam_final = next(
                (v for v in reversed(chain_lam[i]) if not math.isnan(v)), chain_lam[i][0]
            )
            cls = _classify_chain(chain_h1[i], lam_final, lambda_tol, growth_ratio)
            reports.append(
                SpectralReport(
                    lam=lam_final,
                    vector=chain_vec[i],
                    N_list=tuple(ns),
                    h1_norms=tuple(chain_h1[i]),
                    lam_sweep=tuple(chain_lam[i]),
                    classification=cls,
                    block=None if kind == "dense" else m,
                )
            )
    return reports


def _chain_h1(
    vec: np.ndarray, N: int, cell: tuple[float, float], kind: str, m: int
) -> float:
    w = _h1_weights(N, cell, None if kind == "dense" else m)
    return float(np.sqrt((w * np.abs(vec) ** 2).sum()))


def _cluster_indices(mu: np.ndarray, rel_gap: float = 1e-8) -> list[np.ndarray]:
    """Group ascending eigenvalues separated by gaps below tolerance."""
    tol = rel_gap * max(1.0, float(np.abs(mu).max()))
    breaks = np.flatnonzero(np.diff(mu) > tol) + 1
    return np.split(np.arange(mu.size), breaks)


def spectral_report_json(
    reports: Sequence[SpectralReport],
    lambda_tol: float,
    growth_ratio: float,
    max_entries: int | None = None,
) -> str:
    """Serialize a classification sweep; vectors are deliberately omitted."""
    rows = []
    for r in reports:
        rows.append(
            {
                "lambda": r.lam,
                "block": r.block,
                "N_list": list(r.N_list),
                "h1_norms": [None if math.isnan(v) else v for v in r.h1_norms],
                "lambda_sweep": [None if math.isnan(v) else v for v in r.lam_sweep],
                "classification": r.classification,
            }
        )
    rows.sort(key=lambda d: (d["classification"], abs(d["lambda"])))
    if max_entries is not None:
        rows = rows[:max_entries]
    doc = {
        "schema": "advection-spectrum-report-v1",
        "finite_truncation_evidence_only": True,
        "lambda_tol": lambda_tol,
        "growth_ratio": growth_ratio,
        "eigenpairs": rows,
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def extremal_eigenpairs(
    flow: FlowSpec,
    N: int,
    k: int = 6,
    which: str = "LM",
    cell: tuple[float, float] = (1.0, 1.0),
) -> tuple[np.ndarray, np.ndarray]:
    """Extremal eigenpairs of -i u . grad beyond the dense ceiling.

    Matrix-free pseudospectral application on a padded grid; returns
    (mu, vectors) with eigenvalues of the truncation being i mu.  Only
    extremal parts of the spectrum are reachable this way, which is why
    the full classification stays within the dense ceiling.
    """
    import scipy.sparse.linalg

    lx, ly = cell
    d = (2 * N + 1) ** 2
    n_side = 4 * N + 4
    grid = make_grid(n_side, n_side, lx, ly)
    vel = velocity(flow, grid)
    kx = 2.0 * np.pi * np.fft.fftfreq(n_side, d=lx / n_side)
    ky = 2.0 * np.pi * np.fft.fftfreq(n_side, d=ly / n_side)
    r = np.arange(-N, N + 1)

    def matvec(c: np.ndarray) -> np.ndarray:
        full = np.zeros((n_side, n_side), dtype=np.complex128)
        full[np.ix_(r % n_side, r % n_side)] = c.reshape(2 * N + 1, 2 * N + 1)
        gx = np.fft.ifft2(1j * kx[:, None] * full) * (n_side * n_side)
        gy = np.fft.ifft2(1j * ky[None, :] * full) * (n_side * n_side)
        adv = vel.u * gx + vel.v * gy
        out = np.fft.fft2(adv) / (n_side * n_side)
        return (-1j) * out[np.ix_(r % n_side, r % n_side)].ravel()

    op = scipy.sparse.linalg.LinearOperator((d, d), matvec=matvec, dtype=np.complex128)
    mu, v = scipy.sparse.linalg.eigsh(op, k=k, which=which)
    return mu, v


# -- folding -----------------------------------------------------------------


def _as_complex_values(psi) -> np.ndarray:
    if hasattr(psi, "values"):
        return np.asarray(psi.values, dtype=np.complex128)
    return np.asarray(psi, dtype=np.complex128)


def fold_eigenfunction(psi, grid: Grid2, j: int) -> np.ndarray:
    """Average of integer translates with k-th root-of-unity phases.

    psi_j(x1, x') = (1/k) sum_m e^{2 pi i j m / k} psi(x1 + m, x'),
    where k = lx.  In mode space this keeps exactly the first-index
    classes m == -j (mod k); translate-and-sum is used directly so the
    operation matches its definition rather than a filter identity.
    """
    k = int(round(grid.lx))
    if abs(grid.lx - k) > 1e-12 or k < 2:
        raise ValueError(f"folding needs an integer cell width >= 2, got lx={grid.lx}")
    if not 0 <= j < k:
        raise ValueError(f"phase index j must lie in [0, {k}), got {j}")
    if grid.nx % k != 0:
        raise ValueError(f"nx={grid.nx} not divisible by the cell width {k}")
    vals = _as_complex_values(psi)
    if vals.shape != (grid.nx, grid.ny):
        raise ValueError(f"field shape {vals.shape} does not match the grid")
    shift = grid.nx // k
    out = np.zeros_like(vals)
    for m in range(k):
        out += np.exp(2j * np.pi * j * m / k) * np.roll(vals, -m * shift, axis=0)
    return out / k


def power_normalize(psi_j, k: int) -> np.ndarray:
    """phi = psi_j^k / |psi_j|^{k-1}, zero where psi_j vanishes.

    Raises the eigenvalue by the factor k while keeping |phi| = |psi_j|,
    which is what makes the folded function square back into the unit
    cell.
    """
    if k < 1:
        raise ValueError(f"power must be >= 1, got {k}")
    vals = _as_complex_values(psi_j)
    out = np.zeros_like(vals)
    nz = np.abs(vals) > 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        out[nz] = vals[nz] ** k / np.abs(vals[nz]) ** (k - 1)
    return out


def apply_advection(flow: FlowSpec, psi, grid: Grid2, t: float = 0.0) -> np.ndarray:
    """u . grad psi for complex fields, spectral derivatives on the cell."""
    vals = _as_complex_values(psi)
    c = np.fft.fft2(vals)
    kx = 2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.lx / grid.nx)
    ky = 2.0 * np.pi * np.fft.fftfreq(grid.ny, d=grid.ly / grid.ny)
    cx = 1j * kx[:, None] * c
    cy = 1j * ky[None, :] * c
    cx[grid.nx // 2, :] = 0.0  # odd derivative undefined on Nyquist lines
    cy[:, grid.ny // 2] = 0.0
    gx = np.fft.ifft2(cx)
    gy = np.fft.ifft2(cy)
    vel = velocity(flow, grid, t=t)
    return vel.u * gx + vel.v * gy


# -- abstract dissipative systems -------------------------------------------


@dataclass
class AbstractSystem:
    """Finite model d phi/dt = iAL phi - Gamma phi.

    Gamma is diagonal in the standard basis with non-negative,
    non-decreasing eigenvalues lam; L is Hermitian.  P_h projects onto
    the span of eigenvectors of L whose H1(Gamma) norm (sqrt of
    sum (1 + lam_j)|c_j|^2) is at most h1_cutoff.  B records the
    H1-to-H1 growth bound of e^{iLt} once measured.
    """

    lam: np.ndarray
    L: np.ndarray
    h1_cutoff: float
    B: float | None = None
    _eig: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    _p_h: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        lam = np.asarray(self.lam, dtype=np.float64)
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("lam must be a nonempty 1-d array")
        if lam[0] < 0.0 or np.any(np.diff(lam) < 0.0):
            raise ValueError("lam must be non-negative and non-decreasing")
        L = np.asarray(self.L, dtype=np.complex128)
        if L.shape != (lam.size, lam.size):
            raise ValueError(f"L has shape {L.shape}, expected {(lam.size, lam.size)}")
        herm_defect = float(np.abs(L - L.conj().T).max())
        scale = max(float(np.abs(L).max()), 1e-300)
        if herm_defect > 1e-12 * scale:
            raise ValueError(f"L is not Hermitian (relative defect {herm_defect / scale:.3e})")
        self.lam = lam
        self.L = 0.5 * (L + L.conj().T)

    @property
    def dim(self) -> int:
        return self.lam.size

    def l_eig(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            self._eig = _eigh_checked(self.L)
        return self._eig

    def h1_norm(self, phi: np.ndarray) -> float:
        return float(np.sqrt(((1.0 + self.lam) * np.abs(phi) ** 2).sum()))

    def h1_seminorm(self, phi: np.ndarray) -> float:
        return float(np.sqrt((self.lam * np.abs(phi) ** 2).sum()))

    def p_h(self) -> np.ndarray:
        """Orthogonal projection onto the smooth eigenvector span of L."""
        if self._p_h is None:
            _, v = self.l_eig()
            norms = np.sqrt(((1.0 + self.lam)[:, None] * np.abs(v) ** 2).sum(axis=0))
            sel = v[:, norms <= self.h1_cutoff]
            self._p_h = sel @ sel.conj().T
        return self._p_h

    def record_growth_bound(self, T: float, n_samples: int = 33) -> float:
        """sup over sampled t <= T of the H1(Gamma) operator norm of e^{iLt}."""
        mu, v = self.l_eig()
        d = np.sqrt(1.0 + self.lam)
        best = 0.0
        for t in np.linspace(0.0, T, n_samples):
            u = (v * np.exp(1j * mu * t)) @ v.conj().T
            best = max(best, float(np.linalg.norm((d[:, None] * u) / d[None, :], 2)))
        self.B = best
        return best


@dataclass(frozen=True)
class AbstractTrajectory:
    """Recorded norms of a model run; rough is ||(I - P_h) phi||."""

    times: np.ndarray
    norm: np.ndarray
    rough: np.ndarray
    h1: np.ndarray
    meta: dict = field(default_factory=dict)
    states: np.ndarray | None = None


def abstract_solve(
    sys: AbstractSystem,
    A: float,
    phi0: np.ndarray,
    t_end: float,
    dt: float,
    store_states: bool = False,
) -> AbstractTrajectory:
    """March phi' = (iAL - Gamma) phi with one precomputed exponential.

    The step is exact for the autonomous system, so dt only sets the
    recording cadence.
    """
    phi = np.asarray(phi0, dtype=np.complex128).copy()
    if phi.shape != (sys.dim,):
        raise ValueError(f"phi0 has shape {phi.shape}, expected {(sys.dim,)}")
    if dt <= 0 or t_end <= 0:
        raise ValueError("t_end and dt must be positive")
    gen = 1j * A * sys.L - np.diag(sys.lam).astype(np.complex128)
    prop = scipy.linalg.expm(gen * dt)
    p_h = sys.p_h()
    n = max(1, math.ceil(t_end / dt - 1e-9))
    times = np.empty(n + 1)
    norm = np.empty(n + 1)
    rough = np.empty(n + 1)
    h1 = np.empty(n + 1)
    states = np.empty((n + 1, sys.dim), dtype=np.complex128) if store_states else None
    for k in range(n + 1):
        times[k] = min(k * dt, t_end)
        norm[k] = float(np.linalg.norm(phi))
        rough[k] = float(np.linalg.norm(phi - p_h @ phi))
        h1[k] = sys.h1_norm(phi)
        if states is not None:
            states[k] = phi
        if k < n:
            phi = prop @ phi
    return AbstractTrajectory(times, norm, rough, h1, {"A": A, "dt": dt}, states)


def measure_exceeding(traj: AbstractTrajectory, delta: float) -> float:
    """Lebesgue measure of {t : rough(t)^2 >= delta}, rectangle rule."""
    if traj.times.size < 2:
        return 0.0
    dt = float(traj.times[1] - traj.times[0])
    return dt * int(np.count_nonzero(traj.rough[:-1] ** 2 >= delta))


def time_periodic_abstract_solve(
    sys: AbstractSystem,
    L_family: Callable[[float], np.ndarray],
    A: float,
    phi0: np.ndarray,
    t_end: float,
    substeps: int = 32,
    record_every: int = 1,
) -> AbstractTrajectory:
    """Model run with a 1-periodic generator evaluated at the fast time.

    phi' = iA L(At) phi - Gamma phi, with L frozen on substep windows of
    the fast period.  The rough record is ||(I - P_h) U*_{At} phi(t)||
    where U_t is the free unitary evolution of the same frozen family
    and P_h comes from the H1 eigenvectors of the Floquet operator U_1.
    meta carries the U_1 unitarity defect.
    """
    phi = np.asarray(phi0, dtype=np.complex128).copy()
    if phi.shape != (sys.dim,):
        raise ValueError(f"phi0 has shape {phi.shape}, expected {(sys.dim,)}")
    if A <= 0:
        raise ValueError("A must be positive for the fast-time rescaling")
    window = 1.0 / (A * substeps)  # slow-time width of one frozen piece
    mids = (np.arange(substeps) + 0.5) / substeps
    Ls = []
    for s in mids:
        Lx = np.asarray(L_family(float(s)), dtype=np.complex128)
        defect = float(np.abs(Lx - Lx.conj().T).max())
        if defect > 1e-12 * max(float(np.abs(Lx).max()), 1e-300):
            raise ValueError(f"L({s}) is not Hermitian")
        Ls.append(0.5 * (Lx + Lx.conj().T))
    gamma = np.diag(sys.lam).astype(np.complex128)
    props = [scipy.linalg.expm((1j * A * Lx - gamma) * window) for Lx in Ls]
    frees = [scipy.linalg.expm(1j * Lx / substeps) for Lx in Ls]

    u1 = np.eye(sys.dim, dtype=np.complex128)
    for v in frees:
        u1 = v @ u1
    unitary_defect = float(np.abs(u1.conj().T @ u1 - np.eye(sys.dim)).max())
    # H1 eigenvectors of the Floquet operator; Schur of a normal matrix
    # gives an orthonormal eigenbasis even on degenerate clusters
    t_schur, q = scipy.linalg.schur(u1, output="complex")
    norms = np.sqrt(((1.0 + sys.lam)[:, None] * np.abs(q) ** 2).sum(axis=0))
    sel = q[:, norms <= sys.h1_cutoff]
    p_h = sel @ sel.conj().T

    # binary powers of U_1* for O(log p) rewinding of the fast frame
    max_periods = max(1, math.ceil(A * t_end))
    u1h_pows = [u1.conj().T]
    while (1 << len(u1h_pows)) <= max_periods:
        u1h_pows.append(u1h_pows[-1] @ u1h_pows[-1])

    def rewind(vec: np.ndarray, total_windows: int) -> np.ndarray:
        p, w = divmod(total_windows, substeps)
        out = vec
        for i in range(w - 1, -1, -1):
            out = frees[i].conj().T @ out
        j = 0
        while p:
            if p & 1:
                out = u1h_pows[j] @ out
            p >>= 1
            j += 1
        return out

    n = max(1, math.ceil(t_end / window - 1e-9))
    rec_idx = list(range(0, n + 1, record_every))
    if rec_idx[-1] != n:
        rec_idx.append(n)
    times, norm, rough, h1 = [], [], [], []
    k = 0
    for k_target in rec_idx:
        while k < k_target:
            phi = props[k % substeps] @ phi
            k += 1
        times.append(min(k * window, t_end))
        norm.append(float(np.linalg.norm(phi)))
        y = rewind(phi, k)
        rough.append(float(np.linalg.norm(y - p_h @ y)))
        h1.append(sys.h1_norm(phi))
    return AbstractTrajectory(
        np.array(times),
        np.array(norm),
        np.array(rough),
        np.array(h1),
        {"A": A, "window": window, "substeps": substeps, "u1_unitary_defect": unitary_defect},
    )


def rage_average(
    sys: AbstractSystem,
    phi: np.ndarray,
    N: int,
    T: float,
    projector: np.ndarray | None = None,
    dt: float | None = None,
) -> float:
    """Time average (1/T) int_0^T ||Q_N e^{iLt} P phi||^2 dt.

    Q_N projects onto the first N Gamma eigenvectors (standard basis
    coordinates).  The continuous spectral projection has no meaning at
    matrix scale, so the designated projector P must be supplied
    explicitly (identity when omitted).  Plain trapezoid quadrature; dt
    defaults to a small fraction of the fastest L phase.
    """
    phi = np.asarray(phi, dtype=np.complex128)
    if not 0 <= N <= sys.dim:
        raise ValueError(f"N must lie in [0, {sys.dim}], got {N}")
    start = phi if projector is None else np.asarray(projector) @ phi
    mu, v = sys.l_eig()
    coeffs = v.conj().T @ start
    if dt is None:
        rate = max(float(np.abs(mu).max()), 1e-12)
        dt = min(T / 64.0, 0.05 / rate)
    n = max(2, math.ceil(T / dt))
    ts = np.linspace(0.0, T, n + 1)
    vals = np.empty(n + 1)
    v_head = v[:N, :]
    for i, t in enumerate(ts):
        head = v_head @ (np.exp(1j * mu * t) * coeffs)
        vals[i] = float((np.abs(head) ** 2).sum())
    return float(np.trapezoid(vals, ts) / T)


def rotation_generator_system(
    lam_rough: np.ndarray,
    lam_smooth: np.ndarray | None = None,
    h1_cutoff: float | None = None,
) -> AbstractSystem:
    """Shift generator misaligned with Gamma, plus an optional smooth block.

    On the rough block of size M the generator is L = F* diag(2 pi k/M) F
    with F the unitary DFT; e^{iLt} translates coordinates by t sites, so
    every eigenvector spreads uniformly over the Gamma basis and its
    H1(Gamma) norm is sqrt(1 + mean(lam_rough)) -- rough whenever the
    damping profile is large somewhere.  The smooth block has L diagonal
    in the Gamma basis (its eigenvectors are the basis vectors
    themselves), giving a nontrivial P_h.  Gamma eigenvalues must come
    out sorted, so the two blocks are interleaved by a joint sort with L
    permuted accordingly.
    """
    lam_rough = np.asarray(lam_rough, dtype=np.float64)
    m = lam_rough.size
    k = np.arange(m)
    f = np.exp(-2j * np.pi * np.outer(k, k) / m) / np.sqrt(m)
    l_rough = f.conj().T @ np.diag(2.0 * np.pi * k / m).astype(complex) @ f
    if lam_smooth is None or len(lam_smooth) == 0:
        lam_all = lam_rough
        L = l_rough
    else:
        lam_smooth = np.asarray(lam_smooth, dtype=np.float64)
        s = lam_smooth.size
        # distinct diagonal phases, deliberately off the 2 pi k / m lattice
        l_smooth = np.diag(2.0 * np.pi * (np.arange(s) + np.sqrt(0.5)))
        lam_all = np.concatenate([lam_rough, lam_smooth])
        L = scipy.linalg.block_diag(l_rough, l_smooth)
        order = np.argsort(lam_all, kind="stable")
        lam_all = lam_all[order]
        L = L[np.ix_(order, order)]
    if h1_cutoff is None:
        rough_norm = math.sqrt(1.0 + float(lam_rough.mean()))
        h1_cutoff = 0.5 * rough_norm
    return AbstractSystem(lam_all, L, h1_cutoff)
