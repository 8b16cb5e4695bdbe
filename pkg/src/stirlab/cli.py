"""Batch experiment front door: named experiments from TOML configs.

Five subcommands (simulate, sweep, flow-report, quench, abstract) share
one lifecycle: parse and validate the config, write an incomplete
manifest, compute, emit CSV/JSON artifacts, finalize the manifest.  A
run that dies mid-flight leaves the "incomplete" marker behind.  All
data artifacts are byte-deterministic for a fixed config and seed; the
manifest alone carries wall-clock stamps.

Exit codes: 0 success, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import (
    Config,
    ConfigError,
    _choice,
    _integer,
    _number,
    _table,
    _want,
    build_datum,
    build_flow,
    build_grid,
    build_reaction,
    build_sim,
    load_config,
)
from .evolve import (
    CFLError,
    NumericsError,
    SimConfig,
    enhancement_curve,
    solve,
    trajectory_to_csv,
)
from .flows import FlowClass, classify_flow, flow_to_dict
from .manifest import finalize_manifest, start_manifest
from .reaction import (
    _probe_cfg,
    critical_amplitude,
    ia_criterion,
    quench_detect,
    solve_radt,
)
from .spectral_analysis import (
    abstract_solve,
    classify_spectrum,
    measure_exceeding,
    rotation_generator_system,
    time_periodic_abstract_solve,
)
from .streamlines import invariant_report_json, invariant_set_detect


def _f(v) -> str:
    return repr(float(v))


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _amplitude_list(tbl: dict, path: str, key: str = "amplitudes") -> list[float]:
    amps = _want(tbl, path, key, list, "a list of numbers")
    if not amps:
        raise ConfigError(f"[{path}].{key}: must not be empty")
    out = []
    for a in amps:
        if isinstance(a, bool) or not isinstance(a, (int, float)) or a < 0:
            raise ConfigError(
                f"[{path}].{key}: expected non-negative numbers, got {a!r}"
            )
        out.append(float(a))
    return out


# -- simulate -----------------------------------------------------------------


def _cmd_simulate(cfg: Config, out: Path, seed: int, workers: int):
    grid = build_grid(cfg)
    flow = build_flow(cfg)
    sim = build_sim(cfg)
    reaction = build_reaction(cfg)
    datum = build_datum(cfg, grid, flow)
    if reaction is not None:
        traj = solve_radt(datum, flow, sim.amplitude, reaction, sim)
    else:
        traj = solve(datum, flow, sim)
    outputs = [out / "trajectory.csv"]
    outputs[0].write_text(trajectory_to_csv(traj))
    if sim.store_snapshots and traj.snapshots:
        lines = ["t,x1,x2,value"]
        xm, ym = grid.meshgrid()
        xs, ys = xm.ravel(), ym.ravel()
        for t, fld in traj.snapshots:
            lines.extend(
                f"{_f(t)},{_f(x)},{_f(y)},{_f(v)}"
                for x, y, v in zip(xs, ys, fld.values.ravel())
            )
        snap = out / "snapshots.csv"
        snap.write_text("\n".join(lines) + "\n")
        outputs.append(snap)
    notes = {"final_linf": float(traj.norms["Linf"][-1])}
    if "bound_violations" in traj.meta:
        notes["bound_violations"] = traj.meta["bound_violations"]
    return outputs, notes


# -- sweep --------------------------------------------------------------------


def _cmd_sweep(cfg: Config, out: Path, seed: int, workers: int):
    tbl = _table(cfg.doc, "sweep")
    tau = _number(tbl, "sweep", "tau", positive=True)
    amps = _amplitude_list(tbl, "sweep")
    qraw = tbl.get("q", 2)
    if qraw == "inf":
        q = np.inf
    elif qraw in (1, 2):
        q = float(qraw)
    else:
        raise ConfigError(f'[sweep].q: expected 1, 2 or "inf", got {qraw!r}')
    floor = _number(tbl, "sweep", "floor_fraction", default=0.8, positive=True)
    cases = _want(tbl, "sweep", "cases", list, "an array of case tables")
    if not cases:
        raise ConfigError("[sweep].cases: must not be empty")
    grid = build_grid(cfg)
    base = build_sim(cfg) if "sim" in cfg.doc else None

    outputs, rows = [], []
    for i, case in enumerate(cases):
        where = f"sweep.cases[{i}]"
        if not isinstance(case, dict):
            raise ConfigError(f"[{where}]: expected a table, got {case!r}")
        name = _want(case, where, "name", str, "a string", default=f"case-{i}")
        flow = build_flow(cfg, table=case.get("flow", cfg.doc.get("flow")))
        datum_tbl = case.get("datum", cfg.doc.get("datum"))
        if datum_tbl is None:
            raise ConfigError(f"[{where}]: no datum (neither per-case nor top-level)")
        datum = build_datum(cfg, grid, flow, table=datum_tbl, path=where)
        values = enhancement_curve(
            datum, flow, tau, amps, q=q, workers=workers, cfg_base=base
        )
        mono = all(values[j + 1] <= values[j] * (1.0 + 1e-12) for j in range(len(values) - 1))
        lower_bounded = min(values) >= floor * values[0]
        cls = classify_flow(flow).value if flow is not None else "none"
        path = out / f"case-{i:02d}-{name}.csv"
        path.write_text(
            "A,norm\n" + "\n".join(f"{_f(a)},{_f(v)}" for a, v in zip(amps, values)) + "\n"
        )
        outputs.append(path)
        rows.append(
            {
                "name": name,
                "flow": None if flow is None else flow_to_dict(flow),
                "classification": cls,
                "values": values,
                "ratio_last_over_first": values[-1] / values[0],
                "monotone_nonincreasing": mono,
                "non_enhancing_evidence": lower_bounded,
            }
        )
    summary = out / "summary.json"
    summary.write_text(
        _dump(
            {
                "schema": "sweep-summary-v1",
                "tau": tau,
                "q": "inf" if q == np.inf else q,
                "amplitudes": amps,
                "floor_fraction": floor,
                "cases": rows,
            }
        )
    )
    outputs.append(summary)
    return outputs, None


# -- flow report --------------------------------------------------------------

_CLAIMS = {
    # verdict -> (has bounded invariant set, has nonzero-lambda eigenfunction)
    "enhancing": (False, False),
    "invariant-set": (True, False),
    "nonzero-eigenfunction": (False, True),
    "both": (True, True),
    "no-invariant-set": (False, None),
    "none-found": (False, False),
}


def _agree(a: str, b: str):
    ca, cb = _CLAIMS.get(a), _CLAIMS.get(b)
    if ca is None or cb is None:
        return None
    overlap = [(x, y) for x, y in zip(ca, cb) if x is not None and y is not None]
    if not overlap:
        return None
    return all(x == y for x, y in overlap)


def _h1_stable(r, growth_ratio: float) -> bool:
    if len(r.h1_norms) < 2:
        return False
    a, b = r.h1_norms[-2], r.h1_norms[-1]
    if math.isnan(a) or math.isnan(b):
        return False
    return max(a, b) / max(min(a, b), 1e-300) <= growth_ratio


def _lambda_stable(r, rel: float = 0.02) -> bool:
    """Eigenvalue settled across the last two truncations.

    Chains tracked through a continuum approximant drift in lambda as
    the node set refines; genuine point eigenvalues hold still.  This
    separates the two where the H1 growth test alone is too shallow.
    """
    if len(r.lam_sweep) < 2:
        return False
    a, b = r.lam_sweep[-2], r.lam_sweep[-1]
    if math.isnan(a) or math.isnan(b):
        return False
    return abs(b - a) <= rel * max(abs(b), 1e-12)


def _dense_chain_profile(r, cell) -> np.ndarray:
    """Physical-space |values| of a dense-layout chain vector on a 64^2 grid."""
    N = r.N_list[-1]
    side = 2 * N + 1
    c = r.vector.reshape(side, side)
    lx, ly = cell
    x = np.linspace(0.0, lx, 64, endpoint=False)
    y = np.linspace(0.0, ly, 64, endpoint=False)
    m = np.arange(-N, N + 1)
    ex = np.exp(2j * np.pi * np.outer(m, x) / lx)  # (side, 64)
    ey = np.exp(2j * np.pi * np.outer(m, y) / ly)
    return np.abs(ex.T @ c @ ey)


def _first_integral_evidence(r, cell, growth_ratio: float) -> bool:
    """A lambda ~ 0 chain that witnesses bounded invariant structure.

    Shear-type blocks: the m = 0 block holds the cross-variable
    functions whose level sets are unbounded bands, so only m != 0
    chains count; they must also stay H1-bounded (a pinching chain at an
    isolated zero of the profile drifts out of H1 and proves nothing).
    Dense sweeps: the chain must be nonconstant and spatially localized
    (vanish on a definite fraction of the cell), which excludes global
    first integrals like functions of a percolating level coordinate.
    """
    if r.classification != "FirstIntegral" or not _h1_stable(r, growth_ratio):
        return False
    if r.block is not None:
        return r.block != 0
    prof = _dense_chain_profile(r, cell)
    top = prof.max()
    if top == 0.0:
        return False
    if prof.min() > 0.5 * top:  # essentially constant
        return False
    return float(np.mean(prof < 0.05 * top)) >= 0.15


def _cmd_flow_report(cfg: Config, out: Path, seed: int, workers: int):
    flow = build_flow(cfg)
    if flow is None:
        raise ConfigError("[flow]: flow-report needs a flow")
    grid = build_grid(cfg)
    tbl = _table(cfg.doc, "flow_report", required=False) or {}
    seeds = _integer(tbl, "flow_report", "seeds", default=128, minimum=100)
    # shear-type truncations cost (2N+1)-sized blocks, dense ones (2N+1)^2
    # matrices, so the affordable default depth differs
    from .spectral_analysis import _is_shear_type

    default_n = [8, 16, 32, 64] if _is_shear_type(flow) else [4, 8, 16]
    n_list = _want(tbl, "flow_report", "N_list", list, "a list of integers", default=default_n)
    if len(n_list) < 3 or any(not isinstance(n, int) or n < 2 for n in n_list):
        raise ConfigError("[flow_report].N_list: need at least three integers >= 2")
    lambda_tol = _number(tbl, "flow_report", "lambda_tol", default=None, positive=True)
    growth_ratio = _number(tbl, "flow_report", "growth_ratio", default=1.5, positive=True)
    cell_raw = _want(tbl, "flow_report", "cell", list, "a [lx, ly] pair", default=[1.0, 1.0])
    if len(cell_raw) != 2:
        raise ConfigError(f"[flow_report].cell: expected a [lx, ly] pair, got {cell_raw!r}")
    cell = (float(cell_raw[0]), float(cell_raw[1]))

    symbolic = classify_flow(flow)
    sym_verdict = symbolic.value if symbolic is not FlowClass.UNKNOWN else "inconclusive"

    stream_report = invariant_set_detect(flow, grid, seeds=seeds, rng_seed=seed)
    tri = stream_report.has_invariant_bounded_open_set
    stream_verdict = {"yes": "invariant-set", "no": "no-invariant-set"}.get(tri, "inconclusive")

    chains = classify_spectrum(
        flow, [int(n) for n in n_list], lambda_tol=lambda_tol, cell=cell, workers=workers
    )
    nonzero = sum(
        1
        for r in chains
        if r.classification == "H1Eigenfunction" and _lambda_stable(r)
    )
    fi_all = sum(1 for r in chains if r.classification == "FirstIntegral")
    fi_localized = sum(1 for r in chains if _first_integral_evidence(r, cell, growth_ratio))
    if nonzero and fi_localized:
        spec_verdict = "both"
    elif nonzero:
        spec_verdict = "nonzero-eigenfunction"
    elif fi_localized:
        spec_verdict = "invariant-set"
    else:
        spec_verdict = "none-found"

    pairs = {
        "symbolic~streamlines": _agree(sym_verdict, stream_verdict),
        "symbolic~spectral": _agree(sym_verdict, spec_verdict),
        "streamlines~spectral": _agree(stream_verdict, spec_verdict),
    }
    # the symbolic classifier is exact on the named families; fall back to
    # merging the sampled claims when it abstains
    if sym_verdict != "inconclusive":
        overall = sym_verdict
    else:
        inv, eig = None, None
        for v in (stream_verdict, spec_verdict):
            c = _CLAIMS.get(v)
            if c:
                inv = c[0] if inv is None else inv
                eig = c[1] if eig is None else eig
        table = {
            (True, True): "both",
            (True, False): "invariant-set",
            (True, None): "invariant-set",
            (False, True): "nonzero-eigenfunction",
            (False, False): "enhancing",
        }
        overall = table.get((inv, eig), "inconclusive")

    doc = {
        "schema": "flow-report-v1",
        "flow": flow_to_dict(flow),
        "methods": {
            "symbolic": {"verdict": sym_verdict, "class": symbolic.value},
            "streamlines": {
                "verdict": stream_verdict,
                "report": json.loads(invariant_report_json(stream_report)),
            },
            "spectral": {
                "verdict": spec_verdict,
                "chains": len(chains),
                "nonzero_lambda_chains": nonzero,
                "first_integral_chains": fi_all,
                "localized_first_integral_chains": fi_localized,
                "N_list": [int(n) for n in n_list],
                "lambda_tol": lambda_tol if lambda_tol is not None else "auto",
            },
        },
        "agreement": pairs,
        "overall": overall,
    }
    path = out / "flow-report.json"
    path.write_text(_dump(doc))
    return [path], {"overall": overall}


# -- quench -------------------------------------------------------------------


def _quench_level(tbl, reaction) -> float:
    level = _number(tbl, "quench", "quench_level", default=None, positive=True)
    if level is None:
        if hasattr(reaction, "eta0"):
            return float(reaction.eta0)
        raise ConfigError("[quench].quench_level: required unless the reaction is ignition")
    return level


def _cmd_quench(cfg: Config, out: Path, seed: int, workers: int):
    tbl = _table(cfg.doc, "quench")
    mode = _choice(tbl, "quench", "mode", ("bisect", "scan"), default="bisect")
    t_horizon = _number(tbl, "quench", "t_horizon", positive=True)
    flow = build_flow(cfg)
    if flow is None:
        raise ConfigError("[flow]: quench needs a flow")
    grid = build_grid(cfg)
    reaction = build_reaction(cfg)
    datum = build_datum(cfg, grid, flow)
    base = build_sim(cfg) if "sim" in cfg.doc else None
    level = _quench_level(tbl, reaction)

    if mode == "scan":
        amps = _amplitude_list(tbl, "quench")
        probe = _probe_cfg(base, t_horizon, level)

        def run(a: float):
            traj = solve_radt(datum, flow, a, reaction, probe)
            return quench_detect(traj, level)

        if workers > 1 and len(amps) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=workers) as pool:
                times = list(pool.map(run, amps))
        else:
            times = [run(a) for a in amps]
        doc = {
            "schema": "quench-report-v1",
            "mode": "scan",
            "flow": flow_to_dict(flow),
            "reaction": {"type": "None"} if reaction is None else reaction.to_dict(),
            "tested": [{"A": a, "quench_time": t} for a, t in zip(amps, times)],
            "quenched_at": [a for a, t in zip(amps, times) if t is not None],
            "no_quench_at": [a for a, t in zip(amps, times) if t is None],
            "bracket": None,
            "t_horizon": t_horizon,
            "quench_level": level,
        }
        notes = {"quenched": len(doc["quenched_at"]), "resisted": len(doc["no_quench_at"])}
    else:
        a_lo = _number(tbl, "quench", "A_lo", nonnegative=True)
        a_hi = _number(tbl, "quench", "A_hi", positive=True)
        steps = _integer(tbl, "quench", "bisection_steps", default=6, minimum=1)
        from .reaction import quench_report_json

        try:
            search = critical_amplitude(
                datum, flow, reaction, a_lo, a_hi, t_horizon,
                bisection_steps=steps, quench_level=level, cfg=base,
            )
        except ValueError as exc:
            if "bracket invalid" not in str(exc):
                raise
            # a refuted bracket is a scientific outcome, not a crash
            doc = {
                "schema": "quench-report-v1",
                "mode": "bisect",
                "flow": flow_to_dict(flow),
                "reaction": {"type": "None"} if reaction is None else reaction.to_dict(),
                "bracket": None,
                "bracket_invalid": str(exc),
                "t_horizon": t_horizon,
                "quench_level": level,
            }
            notes = {"bracket_invalid": str(exc)}
        else:
            doc = json.loads(quench_report_json(search, flow, reaction))
            doc["mode"] = "bisect"
            notes = {"bracket": [search.lo, search.hi]}
            ia_tbl = tbl.get("ia")
            if ia_tbl is not None:
                at = ia_tbl.get("at", "A_hi")
                if at == "A_hi":
                    a_eval = search.hi
                elif at == "A_lo":
                    a_eval = search.lo
                elif isinstance(at, (int, float)) and not isinstance(at, bool):
                    a_eval = float(at)
                else:
                    raise ConfigError(f'[quench.ia].at: expected "A_hi", "A_lo" or a number, got {at!r}')
                res = ia_criterion(
                    flow,
                    a_eval,
                    _number(ia_tbl, "quench.ia", "budget", positive=True),
                    _number(ia_tbl, "quench.ia", "alpha"),
                    _number(ia_tbl, "quench.ia", "c", positive=True),
                    _number(ia_tbl, "quench.ia", "t_max", positive=True),
                    strip_cells=_integer(ia_tbl, "quench.ia", "strip_cells", default=48, minimum=4),
                    resolution=_integer(ia_tbl, "quench.ia", "resolution", default=24, minimum=8),
                    sigma=_number(ia_tbl, "quench.ia", "sigma", default=0.2, positive=True),
                )
                doc["ia_criterion"] = {"A": a_eval, **res}
                notes["ia_satisfied"] = res["satisfied"]
    path = out / "quench-report.json"
    path.write_text(_dump(doc))
    return [path], notes


# -- abstract -----------------------------------------------------------------


def _abstract_system(tbl):
    gen = _choice(tbl, "abstract", "generator", ("rotation", "diagonal"))
    if gen == "rotation":
        m = _integer(tbl, "abstract", "rough_size", default=24, minimum=4)
        high = _number(tbl, "abstract", "rough_high", default=360.0, nonnegative=True)
        smooth = _want(tbl, "abstract", "smooth", list, "a list of numbers", default=[0.05])
        cutoff = _number(tbl, "abstract", "h1_cutoff", default=3.0, positive=True)
        j = np.arange(m)
        # half the shift block undamped, half strongly damped; the tiny
        # ramp keeps Gamma's eigenvalues strictly sorted
        lam_rough = np.where(j < m // 2, 0.0, high) + 1e-9 * j
        sys = rotation_generator_system(
            lam_rough, np.asarray(smooth, dtype=float), h1_cutoff=cutoff
        )
        rough_idx = np.flatnonzero(np.isin(sys.lam, lam_rough))
        center = _number(tbl, "abstract", "packet_center", default=m / 2.0)
        width = _number(tbl, "abstract", "packet_width", default=m / 4.0, positive=True)
        packet = np.exp(-0.5 * ((j - center) / width) ** 2)
        phi0 = np.zeros(sys.dim, dtype=complex)
        phi0[rough_idx] = packet / np.linalg.norm(packet)
        return sys, phi0
    lam = _want(tbl, "abstract", "lam", list, "a list of numbers")
    lam = np.asarray([float(v) for v in lam])
    if lam.size < 2 or np.any(lam < 0) or np.any(np.diff(lam) < 0):
        raise ConfigError("[abstract].lam: need >= 2 non-negative, non-decreasing numbers")
    phases = _want(tbl, "abstract", "phases", list, "a list of numbers", default=None)
    if phases is None:
        diag = 2.0 * np.pi * (np.arange(lam.size) + np.sqrt(0.5))
    else:
        if len(phases) != lam.size:
            raise ConfigError("[abstract].phases: length must match lam")
        diag = np.asarray([float(v) for v in phases])
    cutoff = _number(
        tbl, "abstract", "h1_cutoff", default=float(np.sqrt(1.0 + lam.mean())), positive=True
    )
    from .spectral_analysis import AbstractSystem

    sys_ = AbstractSystem(lam, np.diag(diag).astype(complex), cutoff)
    rough = np.sqrt(1.0 + lam) > cutoff
    if not rough.any():
        raise ConfigError("[abstract]: every basis mode is below h1_cutoff; nothing to observe")
    phi0 = np.zeros(lam.size, dtype=complex)
    phi0[rough] = 1.0 / np.sqrt(rough.sum())
    return sys_, phi0


def _cmd_abstract(cfg: Config, out: Path, seed: int, workers: int):
    tbl = _table(cfg.doc, "abstract")
    amps = _amplitude_list(tbl, "abstract")
    t_end = _number(tbl, "abstract", "t_end", default=1.0, positive=True)
    dt = _number(tbl, "abstract", "dt", default=1.0 / 512.0, positive=True)
    delta = _number(tbl, "abstract", "delta", default=0.01, positive=True)
    modulation = _number(tbl, "abstract", "modulation", default=0.0, nonnegative=True)
    substeps = _integer(tbl, "abstract", "substeps", default=16, minimum=2)
    sys_, phi0 = _abstract_system(tbl)

    outputs, measures = [], []
    for i, a in enumerate(amps):
        if modulation > 0.0:
            base = sys_.L.copy()
            family = lambda s: (1.0 + modulation * math.cos(2.0 * math.pi * s)) * base
            # recording every fast window at large A is pure waste
            traj = time_periodic_abstract_solve(
                sys_, family, a, phi0, t_end, substeps=substeps,
                record_every=max(1, int(a // 50)),
            )
        else:
            traj = abstract_solve(sys_, a, phi0, t_end, dt)
        measures.append(measure_exceeding(traj, delta))
        path = out / f"abstract-{i:02d}.csv"
        lines = ["t,norm,rough,h1"]
        lines.extend(
            f"{_f(t)},{_f(n)},{_f(r)},{_f(h)}"
            for t, n, r, h in zip(traj.times, traj.norm, traj.rough, traj.h1)
        )
        path.write_text("\n".join(lines) + "\n")
        outputs.append(path)
    non_increasing = all(
        measures[j + 1] <= measures[j] + 1e-15 for j in range(len(measures) - 1)
    )
    drop = measures[0] / measures[-1] if measures[-1] > 0.0 else None
    summary = out / "summary.json"
    summary.write_text(
        _dump(
            {
                "schema": "abstract-summary-v1",
                "generator": tbl["generator"],
                "modulation": modulation,
                "delta": delta,
                "t_end": t_end,
                "amplitudes": amps,
                "measures": measures,
                "non_increasing": non_increasing,
                "drop_first_over_last": drop,
            }
        )
    )
    outputs.append(summary)
    return outputs, {"measures": measures}


# -- driver -------------------------------------------------------------------

_HANDLERS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "flow-report": _cmd_flow_report,
    "quench": _cmd_quench,
    "abstract": _cmd_abstract,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stirlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="TOML config path")
        sp.add_argument("--out", default=None, help="output directory (default runs/<command>)")
        sp.add_argument("--workers", type=int, default=None, help="parallel worker bound")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.command:
            raise ConfigError(
                f"experiment: config says {cfg.experiment!r} but the "
                f"{args.command!r} subcommand was invoked"
            )
        seed = cfg.seed if args.seed is None else args.seed
        workers = cfg.workers if args.workers is None else args.workers
        if workers < 1:
            raise ConfigError(f"--workers: expected a positive integer, got {workers}")
        out = Path(args.out) if args.out else Path("runs") / args.command
        out.mkdir(parents=True, exist_ok=True)
        manifest = start_manifest(out, args.command, cfg.doc, seed)
        outputs, notes = _HANDLERS[args.command](cfg, out, seed, workers)
        finalize_manifest(manifest, outputs, notes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericsError, CFLError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
