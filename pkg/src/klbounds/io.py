"""Reading and writing correlators, models, bound tables, results and configs.

Tabular data is CSV; everything else is a JSON document. Floats are written
so that they read back to the identical double: ``.17g`` in CSV and Python's
shortest round-trip ``repr`` in JSON. Output bytes depend only on the
inputs, never on locale or time.

Config grammar
--------------
A config is a JSON object whose members are the sections below; each
section is an object of ``key: value`` pairs. Every section and every key
is optional, missing ones take the defaults shown, unknown ones are errors::

    {
      "input":       {"correlator": null, "model": null, "slack": 0.0},
      "grid":        {"s_min": 0.0, "s_max": 60.0, "N_v": 10000},
      "constraints": {"x_lo": 1e-05, "x_hi": 3.0, "N_c": 100, "spacing": "log"},
      "objective":   {"sigma2": 0.01, "mu2": "0:20:200", "t": "0:200:201",
                      "s_reg": null, "mass": null,
                      "window_factors": [1.5, 2.0, 2.5]},
      "bisection":   {"delta_hi": 0.01, "delta_rel_tol": 0.01, "m_lo": 0.1,
                      "m_hi": 1.5, "m_step": 0.01, "max_iter": 60,
                      "mass_resolution": 0.0001, "delta_floor": 1e-12,
                      "threshold_factor": 9, "split": "heaviest"},
      "solver":      {"feas_tol": 1e-09, "opt_tol": 1e-09, "workers": null},
      "output":      {"directory": "."}
    }

Ranges such as ``mu2`` use the ``lo:hi:count`` syntax of :func:`parse_range`.
``workers: null`` means one worker per available core.
"""
import csv
import dataclasses
import io as _io
import json
import math
import os
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import BisectionConfig, GapResult
from .errors import ConfigError, DomainError, ParseError
from .inversion import BoundsRow, BoundsTable
from .spectral import CorrelatorSet, SpectralGrid, SpectralModel, log_spaced

__all__ = [
    "parse_range",
    "read_correlator_csv",
    "write_correlator_csv",
    "write_bounds_csv",
    "read_bounds_csv",
    "sidecar_path",
    "write_result_doc",
    "read_result_doc",
    "write_model",
    "read_model",
    "RunConfig",
    "load_config",
    "config_from_dict",
]

BOUNDS_HEADER = ("parameter", "lower", "upper", "lower_status", "upper_status")


def _fmt(v):
    return format(float(v), ".17g")


def _write_text(path, text):
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}", str(path)) from exc


def _read_text(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read {path}: {exc.strerror}", str(path)) from exc


def _dump_json(obj):
    return json.dumps(obj, indent=2) + "\n"


def parse_range(text):
    """``"lo:hi:count"`` to ``count`` evenly spaced values, endpoints included.

    A bare number is a one-element range.
    """
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ParseError(f"bad range {text!r}; expected lo:hi:count") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise ParseError(f"bad range {text!r}; need finite ends and count >= 1")
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# Correlators
# ---------------------------------------------------------------------------


def read_correlator_csv(path):
    """Read a ``x,C`` CSV into a :class:`CorrelatorSet` with zero slack.

    Raises
    ------
    ParseError
        Bad header, malformed or non-finite number, or ``x`` not positive and
        strictly increasing. The message names the file line.
    """
    text = _read_text(path)
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["x", "C"]:
        raise ParseError(f"{path}:1: header must be 'x,C'")
    xs, cs = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            x, c = float(row[0]), float(row[1])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: not a number: {','.join(row)!r}") from None
        if not (math.isfinite(x) and math.isfinite(c)):
            raise ParseError(f"{path}:{lineno}: non-finite value")
        if x <= 0:
            raise ParseError(f"{path}:{lineno}: x must be positive, got {row[0]}")
        if xs and x <= xs[-1]:
            raise ParseError(f"{path}:{lineno}: x not strictly increasing ({row[0]} after {xs[-1]!r})")
        xs.append(x)
        cs.append(c)
    if not xs:
        raise ParseError(f"{path}: no data records")
    return CorrelatorSet(np.array(xs), np.array(cs), 0.0)


def write_correlator_csv(corr, path):
    lines = ["x,C"] + [f"{_fmt(x)},{_fmt(c)}" for x, c in zip(corr.x, corr.values)]
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Bound tables
# ---------------------------------------------------------------------------


def sidecar_path(path):
    """Metadata document accompanying a bounds CSV: ``foo.csv`` -> ``foo.meta.json``."""
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_bounds_csv(table, path, sidecar=True):
    """Write ``table`` as CSV plus (by default) its metadata sidecar."""
    lines = [",".join(BOUNDS_HEADER)]
    for r in table.rows:
        lines.append(",".join([_fmt(r.parameter), _fmt(r.lower), _fmt(r.upper),
                               r.lower_status, r.upper_status]))
    _write_text(path, "\n".join(lines) + "\n")
    if sidecar:
        meta = dict(table.metadata)
        meta["tool_version"] = __version__
        _write_text(sidecar_path(path), _dump_json(meta))


def read_bounds_csv(path):
    """Inverse of :func:`write_bounds_csv`; the sidecar is read when present."""
    rows = list(csv.reader(_io.StringIO(_read_text(path))))
    if not rows or tuple(rows[0]) != BOUNDS_HEADER:
        raise ParseError(f"{path}:1: header must be {','.join(BOUNDS_HEADER)!r}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ParseError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
        try:
            out.append(BoundsRow(float(row[0]), float(row[1]), float(row[2]), row[3], row[4]))
        except ValueError:
            raise ParseError(f"{path}:{lineno}: not a number") from None
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(_read_text(side))
    return BoundsTable(out, meta)


# ---------------------------------------------------------------------------
# Results and models
# ---------------------------------------------------------------------------


def _plain(obj):
    """Make numpy scalars, tuples and arrays JSON-serialisable."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def write_result_doc(result, path):
    """Write a :class:`GapResult`, or any JSON-able mapping, as a document."""
    if isinstance(result, GapResult):
        doc = {
            "M_opt": result.m_opt,
            "Z_opt": result.z_opt,
            "delta_C_min": result.delta_c_min,
            "interval": list(result.interval),
            "diagnostics": result.diagnostics,
        }
    else:
        doc = dict(result)
    doc = {"tool_version": __version__, **doc}
    _write_text(path, _dump_json(_plain(doc)))


def read_result_doc(path):
    """Read a result document; gap results come back as :class:`GapResult`."""
    doc = json.loads(_read_text(path))
    if {"M_opt", "Z_opt", "delta_C_min", "interval"} <= doc.keys():
        return GapResult(doc["M_opt"], doc["Z_opt"], doc["delta_C_min"],
                         tuple(doc["interval"]), doc.get("diagnostics", {}))
    return doc


def write_model(model, path):
    doc = {
        "pole_weight": model.pole_weight,
        "pole_mass2": model.pole_mass2,
        "threshold": model.threshold,
        "continuum": model.continuum.tolist(),
    }
    _write_text(path, _dump_json(_plain(doc)))


def read_model(path):
    """Read a model document (keys ``pole_weight, pole_mass2, threshold, continuum``)."""
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    keys = {"pole_weight", "pole_mass2", "threshold", "continuum"}
    if not isinstance(doc, dict) or set(doc) != keys:
        raise ParseError(f"{path}: model needs exactly the keys {sorted(keys)}")
    cont = np.asarray(doc["continuum"], dtype=float).reshape(-1, 2)
    return SpectralModel(doc["pole_weight"], doc["pole_mass2"], doc["threshold"], cont)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

_bis = {f.name: f.default for f in dataclasses.fields(BisectionConfig)}


@dataclasses.dataclass(frozen=True)
class InputSection:
    correlator: str = None
    model: str = None
    slack: float = 0.0


@dataclasses.dataclass(frozen=True)
class GridSection:
    s_min: float = 0.0
    s_max: float = 60.0
    N_v: int = 10_000


@dataclasses.dataclass(frozen=True)
class ConstraintSection:
    x_lo: float = 1e-5
    x_hi: float = 3.0
    N_c: int = 100
    spacing: str = "log"


@dataclasses.dataclass(frozen=True)
class ObjectiveSection:
    sigma2: float = 0.01
    mu2: str = "0:20:200"
    t: str = "0:200:201"
    s_reg: float = None
    mass: float = None
    window_factors: tuple = (1.5, 2.0, 2.5)


@dataclasses.dataclass(frozen=True)
class BisectionSection:
    delta_hi: float = _bis["delta_hi"]
    delta_rel_tol: float = _bis["delta_rel_tol"]
    m_lo: float = _bis["m_lo"]
    m_hi: float = _bis["m_hi"]
    m_step: float = _bis["m_step"]
    max_iter: int = _bis["max_iter"]
    mass_resolution: float = _bis["mass_resolution"]
    delta_floor: float = _bis["delta_floor"]
    threshold_factor: int = 9
    split: str = "heaviest"


@dataclasses.dataclass(frozen=True)
class SolverSection:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    workers: int = None


@dataclasses.dataclass(frozen=True)
class OutputSection:
    directory: str = "."


_SECTIONS = {
    "input": InputSection,
    "grid": GridSection,
    "constraints": ConstraintSection,
    "objective": ObjectiveSection,
    "bisection": BisectionSection,
    "solver": SolverSection,
    "output": OutputSection,
}

_CHOICES = {
    ("constraints", "spacing"): ("log", "linear"),
    ("bisection", "threshold_factor"): (4, 9),
    ("bisection", "split"): ("error", "heaviest"),
}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration; see the module docstring for keys."""

    input: InputSection = InputSection()
    grid: GridSection = GridSection()
    constraints: ConstraintSection = ConstraintSection()
    objective: ObjectiveSection = ObjectiveSection()
    bisection: BisectionSection = BisectionSection()
    solver: SolverSection = SolverSection()
    output: OutputSection = OutputSection()

    @staticmethod
    def schema():
        """``[(section, key, type, default), ...]`` in document order."""
        return [
            (sec, f.name, f.type, f.default)
            for sec, cls in _SECTIONS.items()
            for f in dataclasses.fields(cls)
        ]

    def spectral_grid(self):
        g = self.grid
        return SpectralGrid.uniform(g.s_min, g.s_max, g.N_v)

    def constraint_points(self):
        c = self.constraints
        if c.spacing == "log":
            return log_spaced(c.x_lo, c.x_hi, c.N_c)
        return np.linspace(c.x_lo, c.x_hi, c.N_c)

    def bisection_config(self):
        b = self.bisection
        return BisectionConfig(
            delta_hi=b.delta_hi, delta_rel_tol=b.delta_rel_tol, m_lo=b.m_lo, m_hi=b.m_hi,
            m_step=b.m_step, max_iter=b.max_iter, mass_resolution=b.mass_resolution,
            delta_floor=b.delta_floor, feas_tol=self.solver.feas_tol,
        )

    @property
    def workers(self):
        return self.solver.workers or os.cpu_count() or 1

    def to_dict(self):
        return {sec: _plain(dataclasses.asdict(getattr(self, sec))) for sec in _SECTIONS}

    def replace(self, **overrides):
        """Copy with ``section__key=value`` overrides, validated like a document."""
        doc = self.to_dict()
        for name, value in overrides.items():
            sec, _, key = name.partition("__")
            doc.setdefault(sec, {})[key] = value
        return config_from_dict(doc)


def _coerce(sec, key, typ, value, problems):
    where = f"{sec}.{key}"
    if value is None:
        if getattr(_SECTIONS[sec](), key) is None:
            return None
        problems.append(f"{where}: may not be null")
        return None
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{where}: expected a number, got {value!r}")
            return None
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            problems.append(f"{where}: expected an integer, got {value!r}")
            return None
        return int(value)
    if typ is str:
        if not isinstance(value, str):
            problems.append(f"{where}: expected a string, got {value!r}")
            return None
        return value
    if typ is tuple:
        if not isinstance(value, (list, tuple)) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            problems.append(f"{where}: expected a list of numbers, got {value!r}")
            return None
        return tuple(float(v) for v in value)
    return value


def _check_values(cfg, problems):
    g, c, o, b, s = cfg.grid, cfg.constraints, cfg.objective, cfg.bisection, cfg.solver
    if not (0 <= g.s_min < g.s_max):
        problems.append("grid: need 0 <= s_min < s_max")
    if g.N_v < 1:
        problems.append("grid.N_v: must be >= 1")
    if not 0 < c.x_lo < c.x_hi:
        problems.append("constraints: need 0 < x_lo < x_hi")
    if c.N_c < 1:
        problems.append("constraints.N_c: must be >= 1")
    if not o.sigma2 > 0:
        problems.append("objective.sigma2: must be > 0")
    for key in ("mu2", "t"):
        try:
            parse_range(getattr(o, key))
        except ParseError as exc:
            problems.append(f"objective.{key}: {exc}")
    if o.s_reg is not None and o.s_reg < 0:
        problems.append("objective.s_reg: must be >= 0")
    if o.mass is not None and not o.mass > 0:
        problems.append("objective.mass: must be > 0")
    if cfg.input.slack < 0:
        problems.append("input.slack: must be >= 0")
    if cfg.input.correlator is not None and cfg.input.model is not None:
        problems.append("input: give either correlator or model, not both")
    for (sec, key), allowed in _CHOICES.items():
        v = getattr(getattr(cfg, sec), key)
        if v is not None and v not in allowed:
            problems.append(f"{sec}.{key}: must be one of {list(allowed)}, got {v!r}")
    if not (s.feas_tol > 0 and s.opt_tol > 0):
        problems.append("solver: tolerances must be > 0")
    if s.workers is not None and s.workers < 1:
        problems.append("solver.workers: must be >= 1")
    try:
        cfg.bisection_config()
    except DomainError as exc:
        problems.append(f"bisection: {exc}")


def config_from_dict(doc):
    """Resolve a parsed document into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Listing every unknown key, type mismatch and invalid value at once.
    """
    problems = []
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])
    sections = {}
    for sec, body in doc.items():
        if sec not in _SECTIONS:
            problems.append(f"unknown section {sec!r}")
            continue
        if not isinstance(body, dict):
            problems.append(f"{sec}: expected an object")
            continue
        cls = _SECTIONS[sec]
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in body.items():
            if key not in fields:
                problems.append(f"unknown key {key!r} in section {sec!r}")
                continue
            kwargs[key] = _coerce(sec, key, fields[key], value, problems)
        sections[sec] = kwargs
    if problems:
        raise ConfigError(problems)
    cfg = RunConfig(**{sec: _SECTIONS[sec](**kw) for sec, kw in sections.items()})
    _check_values(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path):
    """Read a JSON config document; an empty file or ``{}`` gives all defaults."""
    text = _read_text(path)
    if not text.strip():
        return RunConfig()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}: {exc.msg}"]) from None
    return config_from_dict(doc)
