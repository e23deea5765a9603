"""Parameter-region sweeps over (mL, k, tau) with CSV persistence.

Config format: one ``key = value`` per line, ``#`` starts a comment::

    sweep.axis1   = mL:0.05:0.45:9      # name:lo:hi:n
    sweep.axis2   = k:0:0.9:10
    sweep.tau     = 0                   # fixed value for every non-axis variable
    sweep.len     = 1                   # optional, default 1
    sweep.methods = hyp, affine         # subset of exp, hyp, affine, delay, sim
    sweep.output  = region.csv
    sweep.sim.tfinal = 20               # optional simulation settings
    sweep.sim.cells  = 200
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .delay_analysis import scan_unstable_sigma
from .errors import ConfigErrors, ParseError, ValidationError
from .linear_sim import FeedbackSpec, fit_growth_rate, simulate
from .lyapunov import (
    LinearSystemParams,
    certify_exponential,
    certify_hyperbolic,
    certify_instability_affine,
)

__all__ = [
    "Axis",
    "SweepSpec",
    "SweepCell",
    "HEADER",
    "parse_config",
    "run_sweep",
    "evaluate_cell",
    "emit_csv",
    "read_csv",
    "format_float",
]

AXIS_NAMES = ("mL", "k", "tau")
METHODS = ("exp", "hyp", "affine", "delay", "sim")
HEADER = "axis1,axis2,verdict_exp,verdict_hyp,verdict_affine,verdict_delay,sim_rate"

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")
_KNOWN = {
    "sweep.axis1",
    "sweep.axis2",
    "sweep.mL",
    "sweep.k",
    "sweep.tau",
    "sweep.len",
    "sweep.methods",
    "sweep.output",
    "sweep.sim.tfinal",
    "sweep.sim.cells",
    "sweep.sim.cfl",
}


def format_float(v: float) -> str:
    return f"{v:.9g}"


def _round9(v: float) -> float:
    return float(format_float(v))


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def values(self) -> list:
        return [_round9(v) for v in np.linspace(self.lo, self.hi, self.n)]


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple
    fixed: dict
    methods: tuple
    output: str | None = None
    length: float = 1.0
    sim_tfinal: float = 20.0
    sim_cells: int = 200
    sim_cfl: float = 0.9

    def coordinates(self) -> list:
        """Axis coordinate tuples in row-major order (last axis fastest)."""
        grids = [a.values() for a in self.axes]
        if len(grids) == 1:
            return [(v,) for v in grids[0]]
        return [(u, v) for u in grids[0] for v in grids[1]]

    def point(self, coords) -> dict:
        p = dict(self.fixed)
        for a, v in zip(self.axes, coords):
            p[a.name] = v
        return p


@dataclass
class SweepCell:
    coords: tuple
    verdicts: dict = field(default_factory=dict)  # method -> S/U/I/E
    sim_rate: float | None = None
    errors: dict = field(default_factory=dict, compare=False)  # method -> message

    def row(self) -> str:
        a1 = format_float(self.coords[0])
        a2 = format_float(self.coords[1]) if len(self.coords) > 1 else ""
        tags = [self.verdicts.get(m, "") for m in ("exp", "hyp", "affine", "delay")]
        rate = "" if self.sim_rate is None else format_float(self.sim_rate)
        if self.sim_rate is None and self.verdicts.get("sim") == "E":
            rate = "E"
        return ",".join([a1, a2, *tags, rate])


# --- parsing --------------------------------------------------------------------


def _number(text):
    try:
        v = float(text)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _parse_axis(key, text, errors):
    parts = [p.strip() for p in text.split(":")]
    if len(parts) != 4:
        errors.append(ValidationError(key, "expected name:lo:hi:n"))
        return None
    name, lo, hi, n = parts
    if name not in AXIS_NAMES:
        errors.append(ValidationError(key, f"axis name must be one of {', '.join(AXIS_NAMES)}"))
        return None
    lo_v, hi_v = _number(lo), _number(hi)
    if lo_v is None or hi_v is None:
        errors.append(ValidationError(key, "lo and hi must be finite numbers"))
        return None
    try:
        n_v = int(n)
    except ValueError:
        errors.append(ValidationError(key, "n must be an integer"))
        return None
    ok = True
    if not lo_v < hi_v:
        errors.append(ValidationError(key, f"lo < hi required, got {lo_v:g} >= {hi_v:g}"))
        ok = False
    if n_v < 2:
        errors.append(ValidationError(key, f"n >= 2 required, got {n_v}"))
        ok = False
    return Axis(name, lo_v, hi_v, n_v) if ok else None


def parse_config(text: str) -> SweepSpec:
    """Parse and validate a sweep config; raises :class:`ConfigErrors` listing every problem."""
    errors = []
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            errors.append(ParseError(lineno, "expected 'key = value'"))
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        if not _KEY.match(key):
            errors.append(ParseError(lineno, f"malformed key {key!r}"))
            continue
        if key in raw:
            errors.append(ParseError(lineno, f"duplicate key {key!r}"))
            continue
        if key not in _KNOWN:
            errors.append(ParseError(lineno, f"unknown key {key!r}"))
            continue
        raw[key] = value

    axes = []
    for key in ("sweep.axis1", "sweep.axis2"):
        if key in raw:
            ax = _parse_axis(key, raw[key], errors)
            if ax is not None:
                axes.append(ax)
    if "sweep.axis1" not in raw:
        errors.append(ValidationError("sweep.axis1", "required"))
    if len(axes) == 2 and axes[0].name == axes[1].name:
        errors.append(ValidationError("sweep.axis2", "must differ from sweep.axis1"))

    axis_names = {a.name for a in axes}
    fixed = {}
    for name in AXIS_NAMES:
        key = f"sweep.{name}"
        if name in axis_names:
            if key in raw:
                errors.append(ValidationError(key, "given both as axis and fixed value"))
            continue
        if key not in raw:
            # an unparsable axis of this name was already reported
            declared = any(raw.get(k, "").split(":")[0].strip() == name for k in ("sweep.axis1", "sweep.axis2"))
            if not declared:
                errors.append(ValidationError(key, "required when not a sweep axis"))
            continue
        v = _number(raw[key])
        if v is None:
            errors.append(ValidationError(key, "must be a finite number"))
            continue
        fixed[name] = v

    for a in axes:
        if a.name in ("mL", "tau") and a.lo < 0:
            errors.append(ValidationError(f"axis {a.name}", "must be nonnegative"))
    for name in ("mL", "tau"):
        if name in fixed and fixed[name] < 0:
            errors.append(ValidationError(f"sweep.{name}", "must be nonnegative"))

    methods = ()
    if "sweep.methods" not in raw:
        errors.append(ValidationError("sweep.methods", "required"))
    else:
        methods = tuple(m.strip() for m in raw["sweep.methods"].split(",") if m.strip())
        bad = [m for m in methods if m not in METHODS]
        if bad:
            errors.append(ValidationError("sweep.methods", f"unknown method(s) {', '.join(bad)}"))
        if not methods:
            errors.append(ValidationError("sweep.methods", "at least one method required"))
        if len(set(methods)) != len(methods):
            errors.append(ValidationError("sweep.methods", "duplicate method"))

    def positive(key, default, cast=float):
        if key not in raw:
            return default
        try:
            v = cast(raw[key])
        except ValueError:
            errors.append(ValidationError(key, f"must be a {cast.__name__}"))
            return default
        if not (math.isfinite(v) and v > 0):
            errors.append(ValidationError(key, "must be positive"))
        return v

    length = positive("sweep.len", 1.0)
    tfinal = positive("sweep.sim.tfinal", 20.0)
    cells = positive("sweep.sim.cells", 200, int)
    cfl = positive("sweep.sim.cfl", 0.9)
    if isinstance(cells, int) and cells < 4:
        errors.append(ValidationError("sweep.sim.cells", "must be at least 4"))
    if cfl > 1:
        errors.append(ValidationError("sweep.sim.cfl", "must not exceed 1"))

    if errors:
        raise ConfigErrors(errors)
    return SweepSpec(
        axes=tuple(axes),
        fixed=fixed,
        methods=methods,
        output=raw.get("sweep.output"),
        length=length,
        sim_tfinal=tfinal,
        sim_cells=cells,
        sim_cfl=cfl,
    )


# --- evaluation -----------------------------------------------------------------


def _delay_tag(m, length, k, tau):
    ml = m * length
    if not math.pi / 2 < ml < math.pi:
        return "I"
    return "U" if scan_unstable_sigma(k, tau, m, length) else "I"


def _sim_rate(spec, sys, tau):
    fb = FeedbackSpec.delayed(sys.k, tau) if tau > 0 else FeedbackSpec(sys.k)
    res = simulate(sys, fb, t_final=spec.sim_tfinal, n_cells=spec.sim_cells, cfl=spec.sim_cfl)
    t_end = res.records[-1].time
    return fit_growth_rate(res.records, (0.5 * t_end, t_end))


def evaluate_cell(spec: SweepSpec, coords: tuple) -> SweepCell:
    p = spec.point(coords)
    cell = SweepCell(coords=tuple(coords))
    length = spec.length
    m = p["mL"] / length
    k = p["k"]
    tau = p["tau"]
    for method in spec.methods:
        try:
            sys = LinearSystemParams(m, length, k)
            if method == "exp":
                tag = certify_exponential(sys).tag
            elif method == "hyp":
                tag = certify_hyperbolic(sys).tag
            elif method == "affine":
                tag = certify_instability_affine(sys).tag
            elif method == "delay":
                tag = _delay_tag(m, length, k, tau)
            else:
                cell.sim_rate = _round9(_sim_rate(spec, sys, tau))
                tag = "S" if cell.sim_rate < 0 else "U"
        except Exception as exc:  # recorded per cell, never aborts the sweep
            tag = "E"
            cell.errors[method] = f"{type(exc).__name__}: {exc}"
        cell.verdicts[method] = tag
    return cell


def _evaluate_packed(args):
    return evaluate_cell(*args)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list:
    """Evaluate every cell; the result order is row-major whatever ``jobs`` is."""
    coords = spec.coordinates()
    tasks = [(spec, c) for c in coords]
    if jobs <= 1 or len(tasks) <= 1:
        return [evaluate_cell(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(tasks) // (4 * jobs))
        return list(pool.map(_evaluate_packed, tasks, chunksize=chunk))


# --- persistence ----------------------------------------------------------------


def emit_csv(table, path) -> None:
    lines = [HEADER] + [cell.row() for cell in table]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> list:
    """Parse a file written by :func:`emit_csv` back into cells (error messages are not stored)."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != HEADER:
        raise ValueError("unexpected CSV header")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        f = line.split(",")
        if len(f) != 7:
            raise ValueError(f"bad row {line!r}")
        coords = (float(f[0]),) if f[1] == "" else (float(f[0]), float(f[1]))
        verdicts = {m: t for m, t in zip(("exp", "hyp", "affine", "delay"), f[2:6]) if t}
        rate = None
        if f[6] == "E":
            verdicts["sim"] = "E"
        elif f[6]:
            rate = float(f[6])
            verdicts["sim"] = "S" if rate < 0 else "U"
        out.append(SweepCell(coords, verdicts, rate))
    return out
