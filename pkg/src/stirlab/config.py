"""Experiment configs: versioned TOML with every surrogate threshold visible.

The claims being probed are asymptotic, so any desk-scale run stands on
a pile of finite choices (grid, horizon, tolerances).  The config format
forces those choices into one human-editable file that is echoed
verbatim into the run manifest; nothing numeric hides in code defaults
that the artifact does not also report.

Syntax errors surface with tomllib's line/column positions; semantic
errors carry the full key path (e.g. "[sim].t_end: expected a positive
number").
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

try:  # 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

import numpy as np

from .evolve import SimConfig, channel_datum, _gaussian_l1
from .flows import FlowSpec, Percolating, Shear, flow_from_dict
from .reaction import Arrhenius, Ignition, PowerLaw, ReactionSpec, front_datum
from .spectral import Grid2, ScalarField, make_grid

SCHEMA = "stirlab-config-v1"

EXPERIMENTS = ("simulate", "sweep", "flow-report", "quench", "abstract")

_MISSING = object()


class ConfigError(ValueError):
    """A config that parsed but does not satisfy the schema."""


@dataclass(frozen=True)
class Config:
    """Parsed document plus its origin, for error messages and echoes."""

    path: str
    doc: dict

    @property
    def experiment(self) -> str:
        return self.doc["experiment"]

    @property
    def seed(self) -> int:
        return int(self.doc.get("seed", 0))

    @property
    def workers(self) -> int:
        return int(self.doc.get("workers", 1))


def _want(tbl: dict, path: str, key: str, kinds, what: str, default=_MISSING):
    full = f"[{path}].{key}" if path else key
    if key not in tbl:
        if default is _MISSING:
            raise ConfigError(f"{full}: required key is missing")
        return default
    v = tbl[key]
    if isinstance(v, bool) and bool not in (kinds if isinstance(kinds, tuple) else (kinds,)):
        raise ConfigError(f"{full}: expected {what}, got {v!r}")
    if not isinstance(v, kinds):
        raise ConfigError(f"{full}: expected {what}, got {v!r}")
    return v


def _number(tbl, path, key, default=_MISSING, positive=False, nonnegative=False):
    v = _want(tbl, path, key, (int, float), "a number", default)
    if v is default and default is not _MISSING:
        return v
    v = float(v)
    if positive and not v > 0.0:
        raise ConfigError(f"[{path}].{key}: expected a positive number, got {v:g}")
    if nonnegative and v < 0.0:
        raise ConfigError(f"[{path}].{key}: expected a non-negative number, got {v:g}")
    return v


def _integer(tbl, path, key, default=_MISSING, minimum=None):
    v = _want(tbl, path, key, int, "an integer", default)
    if v is default and default is not _MISSING:
        return v
    if minimum is not None and v < minimum:
        raise ConfigError(f"[{path}].{key}: expected an integer >= {minimum}, got {v}")
    return int(v)


def _choice(tbl, path, key, options, default=_MISSING):
    v = _want(tbl, path, key, str, "a string", default)
    if v is default and default is not _MISSING:
        return v
    if v not in options:
        raise ConfigError(f"[{path}].{key}: expected one of {sorted(options)}, got {v!r}")
    return v


def _table(doc, name, required=True) -> dict | None:
    if name not in doc:
        if required:
            raise ConfigError(f"[{name}]: required section is missing")
        return None
    if not isinstance(doc[name], dict):
        raise ConfigError(f"[{name}]: expected a table, got {doc[name]!r}")
    return doc[name]


def load_config(path) -> Config:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        # tomllib reports line and column in the message
        raise ConfigError(f"{path}: {exc}") from None
    schema = _want(doc, "", "schema", str, "a string")
    if schema != SCHEMA:
        raise ConfigError(f"schema: expected {SCHEMA!r}, got {schema!r}")
    exp = _choice(doc, "", "experiment", EXPERIMENTS)
    _integer(doc, "", "seed", default=0, minimum=0)
    _integer(doc, "", "workers", default=1, minimum=1)
    if exp != "abstract":
        _validate_grid(doc)
    return Config(path=str(path), doc=doc)


def _validate_grid(doc) -> None:
    g = _table(doc, "grid")
    _integer(g, "grid", "nx", minimum=4)
    _integer(g, "grid", "ny", minimum=4)
    _number(g, "grid", "lx", default=1.0, positive=True)
    _number(g, "grid", "ly", default=1.0, positive=True)


# -- section builders --------------------------------------------------------


def build_grid(cfg: Config) -> Grid2:
    g = _table(cfg.doc, "grid")
    return make_grid(
        int(g["nx"]), int(g["ny"]), float(g.get("lx", 1.0)), float(g.get("ly", 1.0))
    )


def build_flow(cfg: Config, table: dict | None = _MISSING) -> FlowSpec | None:
    """Flow from the [flow] table; absent means pure diffusion.

    The table layout is exactly the flow_to_dict serialization, so
    configs and report echoes round-trip through the same code.
    """
    tbl = _table(cfg.doc, "flow", required=False) if table is _MISSING else table
    if tbl is None:
        return None
    try:
        return flow_from_dict(tbl, base_dir=Path(cfg.path).parent)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"[flow]: {exc}") from None


def build_reaction(cfg: Config) -> ReactionSpec | None:
    tbl = _table(cfg.doc, "reaction", required=False)
    if tbl is None:
        return None
    kind = _choice(tbl, "reaction", "kind", ("ignition", "arrhenius", "powerlaw", "none"))
    try:
        if kind == "none":
            return None
        if kind == "ignition":
            return Ignition(
                eta0=_number(tbl, "reaction", "eta0", positive=True),
                gain=_number(tbl, "reaction", "gain", default=1.0, positive=True),
            )
        if kind == "arrhenius":
            return Arrhenius(c=_number(tbl, "reaction", "c", positive=True))
        return PowerLaw(
            c=_number(tbl, "reaction", "c", positive=True),
            alpha=_number(tbl, "reaction", "alpha", positive=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[reaction]: {exc}") from None


def build_datum(
    cfg: Config, grid: Grid2, flow: FlowSpec | None, table: dict | None = None, path: str = "datum"
) -> ScalarField:
    tbl = _table(cfg.doc, "datum") if table is None else table
    kind = _choice(
        tbl, path, "kind", ("sine", "bump", "mean-zero-bump", "front", "channel")
    )
    if kind == "sine":
        kx = _integer(tbl, path, "kx", default=0, minimum=0)
        ky = _integer(tbl, path, "ky", default=0, minimum=0)
        if kx == 0 and ky == 0:
            raise ConfigError(f"[{path}]: sine datum needs kx or ky nonzero")
        x, y = grid.meshgrid()
        vals = np.ones(grid.shape)
        if kx:
            vals = vals * np.sin(2.0 * np.pi * kx * x / grid.lx)
        if ky:
            vals = vals * np.sin(2.0 * np.pi * ky * y / grid.ly)
        return ScalarField(grid, vals)
    if kind in ("bump", "mean-zero-bump"):
        center = _want(tbl, path, "center", list, "a [x, y] pair", default=None)
        if center is None:
            center = (0.5 * grid.lx, 0.5 * grid.ly)
        elif len(center) != 2:
            raise ConfigError(f"[{path}].center: expected a [x, y] pair, got {center!r}")
        sigma = _number(tbl, path, "sigma", positive=True)
        fld = _gaussian_l1(grid, (float(center[0]), float(center[1])), sigma)
        vals = fld.values / fld.values.max()  # sup-normalized
        if kind == "mean-zero-bump":
            vals = vals - vals.mean()
        return ScalarField(grid, vals)
    if kind == "front":
        y_window = _want(tbl, path, "y_window", list, "a [lo, hi] pair", default=None)
        if y_window is not None and len(y_window) != 2:
            raise ConfigError(f"[{path}].y_window: expected a [lo, hi] pair, got {y_window!r}")
        return front_datum(
            grid,
            _number(tbl, path, "lo"),
            _number(tbl, path, "hi"),
            edge=_number(tbl, path, "edge", default=0.4, positive=True),
            mollify=_number(tbl, path, "mollify", default=4.0, nonnegative=True),
            y_window=None if y_window is None else (float(y_window[0]), float(y_window[1])),
            y_edge=_number(tbl, path, "y_edge", default=0.15, positive=True),
        )
    # channel datum rides on the flow's plateau inventory
    if not isinstance(flow, (Shear, Percolating)):
        raise ConfigError(f"[{path}]: channel datum needs a shear or percolating flow")
    try:
        return channel_datum(
            flow,
            grid,
            plateau_index=_integer(tbl, path, "plateau_index", default=0, minimum=0),
            width=_number(tbl, path, "width", default=0.75, positive=True),
        ).field
    except ValueError as exc:
        raise ConfigError(f"[{path}]: {exc}") from None


def build_sim(cfg: Config, table: dict | None = None) -> SimConfig:
    tbl = _table(cfg.doc, "sim") if table is None else table
    dt = tbl.get("dt", "auto")
    if not (dt == "auto" or isinstance(dt, (int, float)) and not isinstance(dt, bool)):
        raise ConfigError(f'[sim].dt: expected "auto" or a number, got {dt!r}')
    if dt != "auto" and not float(dt) > 0.0:
        raise ConfigError(f"[sim].dt: expected a positive number, got {dt!r}")
    stop = _number(tbl, "sim", "stop_below_linf", default=None, positive=True)
    try:
        return SimConfig(
            t_end=_number(tbl, "sim", "t_end", positive=True),
            amplitude=_number(tbl, "sim", "amplitude", default=0.0, nonnegative=True),
            kappa=_number(tbl, "sim", "kappa", default=1.0, positive=True),
            dt="auto" if dt == "auto" else float(dt),
            cfl=_number(tbl, "sim", "cfl", default=0.5, positive=True),
            record_every=_integer(tbl, "sim", "record_every", default=1, minimum=1),
            store_snapshots=_want(
                tbl, "sim", "store_snapshots", bool, "a boolean", default=False
            ),
            stop_below_linf=stop,
        )
    except ValueError as exc:
        raise ConfigError(f"[sim]: {exc}") from None
