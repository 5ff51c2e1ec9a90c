"""Sweep jobs behind the figures, their config-file form, and CSV/JSON output.

A :class:`SweepJob` is a grid over amplitudes and normalized times for one
state family and one measure.  When more than one time is given each
amplitude becomes a curve over ``r``; otherwise the job is a single curve
over the amplitudes.

Config files are flat ``key = value`` text, one line per :class:`SweepJob`
field, ``#`` starting a comment.  Number lists are comma separated or
``start:stop:step`` ranges (stop inclusive).

CSV columns, in order::

    job, state, measure, quantity, sweep_param, alpha, r, bell_value,
    a_re, a_im, b_re, b_im, ap_re, ap_im, bp_re, bp_im,
    seed_box_halfwidth, iterations, starts_converged, evaluations

``quantity`` is ``bell`` except for the parity-probability job, whose rows
carry ``pe``/``pe_tilde`` in the ``bell_value`` column against ``eps``.
The resolved config of every job is written ahead of the header as ``#``
lines.  JSON output follows :data:`JSON_SCHEMA_VERSION`.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .coherent import EcsSpec
from .decoherence import DecoherenceClock
from .errors import OptimizationError, ValidationError
from .measures import MEASURES, objective_for, qubit_ideal
from .optimize import OptimizationReport, SearchConfig, SettingsLayout, maximize
from .qubit import displaced_parity_probs

log = logging.getLogger(__name__)

PARITY_PROBS = "parity-probabilities"
ALL_MEASURES = MEASURES + (PARITY_PROBS,)
FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")
FORMATS = ("csv", "json")
JSON_SCHEMA_VERSION = 1
CLASSICAL_BOUND = 2.0

CSV_COLUMNS = (
    "job", "state", "measure", "quantity", "sweep_param", "alpha", "r", "bell_value",
    "a_re", "a_im", "b_re", "b_im", "ap_re", "ap_im", "bp_re", "bp_im",
    "seed_box_halfwidth", "iterations", "starts_converged", "evaluations",
)


class ConfigError(ValidationError):
    """Malformed config text; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    """Inclusive arithmetic grid, rounded to 12 decimals so that it is exact in text."""
    if step <= 0 or stop < start:
        raise ValidationError(f"bad range {start}:{stop}:{step}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return tuple(round(start + i * step, 12) for i in range(n + 1))


def default_seed_box(alpha: float) -> float:
    """Seed-box half-width: optima sit at ``|settings| ~ 1/alpha`` for large amplitudes."""
    return min(1.0, 1.0 / alpha) if alpha > 0 else 1.0


@dataclass(frozen=True)
class SweepJob:
    state: str = "minus"
    measure: str = "cv-generalized"
    alpha: tuple = (2.0,)
    r: tuple = (0.0,)
    eps: tuple = ()
    axis_mode: str = "full"
    symmetry_constraint: bool = True
    starts: int = 64
    seed_box_halfwidth: float | None = None  # None: default_seed_box(alpha) per point
    gradient_step: float = 1e-5
    convergence_tol: float = 1e-12
    max_iterations: int = 2000
    rng_seed: int = 0
    n_max: int = 64
    warm_start: bool = True
    workers: int = 1
    tag: str = ""
    output: str = ""
    format: str = "csv"

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "r", tuple(float(v) for v in self.r))
        object.__setattr__(self, "eps", tuple(float(v) for v in self.eps))
        EcsSpec.from_label(self.state, 1.0)
        if self.measure not in ALL_MEASURES:
            raise ValidationError(f"measure must be one of {ALL_MEASURES}, got {self.measure!r}")
        if not self.alpha or not self.r:
            raise ValidationError("alpha and r need at least one value each")
        if any(not (a > 0 and math.isfinite(a)) for a in self.alpha):
            raise ValidationError("alpha values must be finite and > 0")
        if any(not (0.0 <= v < 1.0) for v in self.r):
            raise ValidationError("r values must lie in [0, 1)")
        if self.measure == PARITY_PROBS and not self.eps:
            raise ValidationError("parity-probabilities needs an eps list")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        self.search_config(self.alpha[0])  # validates the optimizer fields

    @property
    def sweep_axis(self) -> str:
        if self.measure == PARITY_PROBS:
            return "eps"
        return "r" if len(self.r) > 1 else "alpha"

    def search_config(self, alpha: float) -> SearchConfig:
        box = self.seed_box_halfwidth
        return SearchConfig(
            axis_mode=self.axis_mode,
            symmetry_constraint=self.symmetry_constraint,
            starts=self.starts,
            seed_box_halfwidth=default_seed_box(alpha) if box is None else box,
            gradient_step=self.gradient_step,
            convergence_tol=self.convergence_tol,
            max_iterations=self.max_iterations,
            rng_seed=self.rng_seed,
        )

    def layout(self) -> SettingsLayout:
        axis = "imag" if self.measure == "qubit-displaced" else self.axis_mode
        return SettingsLayout(axis, self.symmetry_constraint,
                              pin_origin=self.measure == "cv-bw-restricted")

    def curves(self) -> list[tuple[float | None, list[tuple[float, float]]]]:
        """``(alpha or None, [(alpha, r), ...])`` per curve, in output order."""
        if self.sweep_axis == "r":
            return [(a, [(a, r) for r in self.r]) for a in self.alpha]
        if self.sweep_axis == "alpha":
            return [(None, [(a, self.r[0]) for a in self.alpha])]
        return [(a, [(a, self.r[0])]) for a in self.alpha]

    # --- config text -------------------------------------------------------

    def to_config(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {_format_value(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config(cls, text: str) -> "SweepJob":
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"unknown key {key!r}", lineno)
            if key in values:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            try:
                values[key] = _parse_value(key, value)
            except (ValueError, ValidationError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)


_LIST_KEYS = {"alpha", "r", "eps"}
_BOOL_KEYS = {"symmetry_constraint", "warm_start"}
_INT_KEYS = {"starts", "max_iterations", "rng_seed", "n_max", "workers"}
_FLOAT_KEYS = {"gradient_step", "convergence_tol"}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if value is None:
        return "auto"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_number_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    out: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            bits = part.split(":")
            if len(bits) != 3:
                raise ValueError(f"range {part!r} must be start:stop:step")
            out.extend(grid(*(float(b) for b in bits)))
        else:
            out.append(float(part))
    return tuple(out)


def _parse_value(key: str, value: str):
    if key in _LIST_KEYS:
        return parse_number_list(value)
    if key in _BOOL_KEYS:
        low = value.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ValueError(f"expected a boolean, got {value!r}")
        return low in ("true", "yes", "1")
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key == "seed_box_halfwidth":
        return None if value.lower() == "auto" else float(value)
    return value


# --- figures -------------------------------------------------------------------

R_GRID = grid(0.0, 0.99, 0.01)


def figure_jobs(tag: str, **overrides) -> list[SweepJob]:
    """Jobs reproducing one figure; ``overrides`` replace SweepJob fields in every job."""
    if tag == "fig2":
        alphas = grid(0.05, 5.0, 0.05)
        jobs = [SweepJob(state=s, measure=m, alpha=alphas, r=(0.0,))
                for s in ("minus", "plus") for m in ("cv-generalized", "cv-bw-restricted")]
    elif tag == "fig3":
        jobs = [SweepJob(state="minus", measure="cv-generalized", alpha=(2.0, 3.0, 5.0), r=R_GRID)]
    elif tag == "fig4":
        jobs = [SweepJob(state="plus", measure="cv-generalized", alpha=(0.1,), r=R_GRID)]
    elif tag == "fig5":
        jobs = [SweepJob(state="minus", measure="qubit-ideal", alpha=(2.0, 3.0, 5.0), r=R_GRID)]
    elif tag == "fig6":
        jobs = [SweepJob(state="minus", measure=PARITY_PROBS, alpha=(2.0, 5.0), r=(0.0,),
                         eps=grid(0.0, 2.0, 0.01))]
    elif tag == "fig7":
        jobs = [SweepJob(state="minus", measure="qubit-displaced", alpha=(2.0, 3.0, 5.0),
                         r=R_GRID, axis_mode="imag")]
    else:
        raise ValidationError(f"unknown figure {tag!r}; choose from {FIGURES}")
    return [replace(j, tag=tag, **overrides) for j in jobs]


# --- running -------------------------------------------------------------------

@dataclass
class PointResult:
    alpha: float
    r: float
    value: float
    sweep_param: float
    quantity: str = "bell"
    report: OptimizationReport | None = None
    seed_box_halfwidth: float | None = None


@dataclass
class CurveResult:
    job: SweepJob
    alpha: float | None
    points: list[PointResult] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points if p.quantity == "bell"])

    @property
    def params(self) -> np.ndarray:
        return np.array([p.sweep_param for p in self.points if p.quantity == "bell"])

    def crossing(self) -> float | None:
        if self.job.sweep_axis != "r" or self.job.measure == PARITY_PROBS:
            return None
        return crossing(self.params, self.values)

    def label(self) -> str:
        alpha = f"alpha={self.alpha:g}" if self.alpha is not None else "alpha=sweep"
        return f"state={self.job.state} {alpha} measure={self.job.measure}"


def crossing(params: Sequence[float], values: Sequence[float],
             level: float = CLASSICAL_BOUND) -> float | None:
    """Parameter where the curve leaves ``values > level`` for the last time.

    Takes the largest grid point above ``level`` and interpolates linearly to
    its right neighbour.  Returns None when no point exceeds ``level`` or the
    curve is still above it at the end of the grid.
    """
    p = np.asarray(params, dtype=float)
    v = np.asarray(values, dtype=float)
    above = np.flatnonzero(v > level)
    if above.size == 0 or above[-1] == len(v) - 1:
        return None
    i = int(above[-1])
    return float(p[i] + (v[i] - level) * (p[i + 1] - p[i]) / (v[i] - v[i + 1]))


def _optimize_point(job: SweepJob, alpha: float, r: float, warm) -> PointResult:
    clock = DecoherenceClock.from_r(r)
    spec = EcsSpec.from_label(job.state, alpha)
    config = job.search_config(alpha)
    report = maximize(objective_for(job.measure, spec, clock), config, job.layout(),
                      warm_starts=warm)
    return PointResult(alpha, r, report.best_value, 0.0, report=report,
                       seed_box_halfwidth=config.seed_box_halfwidth)


def _run_optimized_curve(job: SweepJob, alpha, pts) -> CurveResult:
    curve = CurveResult(job, alpha)
    axis = job.sweep_axis

    def one(point, warm):
        a, r = point
        try:
            res = _optimize_point(job, a, r, warm)
        except OptimizationError as exc:
            raise OptimizationError(f"sweep point {axis}={a if axis == 'alpha' else r!r}: {exc}",
                                    settings=exc.settings,
                                    sweep_param=a if axis == "alpha" else r) from exc
        res.sweep_param = a if axis == "alpha" else r
        return res

    if job.warm_start:
        warm: tuple = ()
        for point in pts:
            res = one(point, warm)
            warm = (res.report.best_params,)
            curve.points.append(res)
    elif job.workers > 1:
        with ThreadPoolExecutor(max_workers=job.workers) as pool:
            curve.points.extend(pool.map(lambda pt: one(pt, ()), pts))
    else:
        curve.points.extend(one(pt, ()) for pt in pts)
    return curve


def run_job(job: SweepJob) -> list[CurveResult]:
    out = []
    for alpha, pts in job.curves():
        if job.measure == "qubit-ideal":
            curve = CurveResult(job, alpha)
            for a, r in pts:
                value = qubit_ideal(a, DecoherenceClock.from_r(r))
                curve.points.append(PointResult(a, r, value, r if job.sweep_axis == "r" else a))
        elif job.measure == PARITY_PROBS:
            curve = CurveResult(job, alpha)
            a, r = pts[0]
            probs = displaced_parity_probs(a, DecoherenceClock.from_r(r), np.array(job.eps))
            for e, pe, pt in zip(job.eps, probs.pe, probs.pe_tilde):
                curve.points.append(PointResult(a, r, float(pe), e, quantity="pe"))
                curve.points.append(PointResult(a, r, float(pt), e, quantity="pe_tilde"))
        else:
            curve = _run_optimized_curve(job, alpha, pts)
        log.info("finished curve %s", curve.label())
        out.append(curve)
    return out


def summary_lines(curves: Iterable[CurveResult]) -> list[str]:
    lines = []
    for c in curves:
        if c.job.measure == PARITY_PROBS:
            continue
        if c.job.sweep_axis == "r":
            rc = c.crossing()
            shown = "none" if rc is None else f"{rc:.4f}"
            lines.append(f"{c.label()} B(r=0)={c.values[0]:.6f} crossing_r={shown}")
        else:
            lines.append(f"{c.label()} B(alpha={c.params[-1]:g})={c.values[-1]:.6f} "
                         f"max={c.values.max():.6f}")
    return lines


# --- output --------------------------------------------------------------------

def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def rows(job_index: int, curve: CurveResult) -> list[list[str]]:
    job = curve.job
    out = []
    for p in curve.points:
        if p.report is not None:
            s = p.report.best_settings
            settings = [_fmt(v) for z in s for v in (z.real, z.imag)]
            meta = [_fmt(p.seed_box_halfwidth), str(p.report.iterations_used),
                    str(p.report.starts_converged), str(p.report.objective_evaluations)]
        else:
            settings = [""] * 8
            meta = ["", "", "", ""]
        out.append([str(job_index), job.state, job.measure, p.quantity,
                    _fmt(p.sweep_param), _fmt(p.alpha), _fmt(p.r), _fmt(p.value)]
                   + settings + meta)
    return out


def render_csv(jobs: Sequence[SweepJob], results: Sequence[list[CurveResult]]) -> str:
    buf = io.StringIO()
    for i, job in enumerate(jobs):
        buf.write(f"# job {i}\n")
        for line in job.to_config().splitlines():
            buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, curves in enumerate(results):
        for curve in curves:
            writer.writerows(rows(i, curve))
    return buf.getvalue()


def _json_value(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def render_json(jobs: Sequence[SweepJob], results: Sequence[list[CurveResult]]) -> str:
    doc = {"schema_version": JSON_SCHEMA_VERSION, "jobs": []}
    for job, curves in zip(jobs, results):
        entry = {"config": job.to_dict(), "curves": []}
        for c in curves:
            pts = [{k: _json_value(v) for k, v in zip(CSV_COLUMNS[3:], r[3:])}
                   for r in rows(0, c)]
            entry["curves"].append({"alpha": c.alpha, "crossing_r": c.crossing(), "points": pts})
        doc["jobs"].append(entry)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render(jobs, results, fmt: str) -> str:
    if fmt not in FORMATS:
        raise ValidationError(f"format must be one of {FORMATS}")
    return render_csv(jobs, results) if fmt == "csv" else render_json(jobs, results)


def run_jobs(jobs: Sequence[SweepJob], out: str | Path | None = None,
             fmt: str = "csv") -> tuple[str, list[list[CurveResult]]]:
    """Run ``jobs`` in order, write the rendered output to ``out`` (if given) and return it."""
    results = [run_job(job) for job in jobs]
    text = render(jobs, results, fmt)
    if out:
        Path(out).write_text(text)
    return text, results


def run_figure(tag: str, out: str | Path | None = None, fmt: str = "csv", **overrides):
    jobs = figure_jobs(tag, format=fmt, output=str(out or ""), **overrides)
    return run_jobs(jobs, out, fmt)
