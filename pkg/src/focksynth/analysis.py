"""State diagnostics and one-parameter sweeps of the synthesizer."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, FockSynthError, InvalidParameter
from .fockspace import (
    DensityMatrix,
    PureStateVector,
    coherent_density_matrix,
    default_truncation,
    fidelity_to_pure,
    purity,
)
from .synthesizer import SynthesizerParams, conditional_state, detection_probability

SWEEP_PARAMETERS = ("tau", "eta", "alpha", "psi", "chi_t", "beta")
CSV_COLUMNS = ("param", "value", "p_click", "fidelity", "purity", "trace_defect", "min_eig")


@dataclass(frozen=True, eq=False)
class StateMetrics:
    fidelity: float | None
    purity: float
    trace_defect: float
    hermiticity_defect: float
    min_eigenvalue: float
    number_distribution: np.ndarray

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "purity": self.purity,
            "trace_defect": self.trace_defect,
            "hermiticity_defect": self.hermiticity_defect,
            "min_eigenvalue": self.min_eigenvalue,
            "number_distribution": [float(x) for x in self.number_distribution],
        }


def metrics(rho: DensityMatrix, target: PureStateVector | None = None) -> StateMetrics:
    """Fidelity (if a target is given), purity and invariant defects of `rho`."""
    return StateMetrics(
        fidelity=None if target is None else fidelity_to_pure(rho, target),
        purity=purity(rho),
        trace_defect=rho.trace_defect,
        hermiticity_defect=rho.hermiticity_defect,
        min_eigenvalue=rho.min_eigenvalue,
        number_distribution=rho.number_distribution,
    )


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """A grid over one parameter with everything else held fixed.

    `nu_source` is either a coherent amplitude beta for the signal input or
    an explicit `DensityMatrix`. Sweeping ``beta`` needs the former.
    """

    param: str
    grid: tuple[float, ...]
    fixed: SynthesizerParams
    nu_source: complex | DensityMatrix
    target: PureStateVector | None = None

    def __post_init__(self):
        if self.param not in SWEEP_PARAMETERS:
            raise InvalidParameter(f"cannot sweep {self.param!r}; choose from {SWEEP_PARAMETERS}")
        grid = tuple(float(x) for x in self.grid)
        if not grid:
            raise InvalidParameter("sweep grid is empty")
        steps = np.diff(grid)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise InvalidParameter("sweep grid must be strictly monotone")
        if self.param == "beta" and isinstance(self.nu_source, DensityMatrix):
            raise InvalidParameter("a beta sweep needs a coherent signal input, not a density matrix")
        object.__setattr__(self, "grid", grid)
        if self.target is not None and self.target.truncation != self.truncation():
            raise DimensionMismatch(
                f"target has n_max={self.target.truncation.n_max}, sweep states have n_max={self.truncation().n_max}")

    def truncation(self):
        if self.fixed.trunc is not None:
            return self.fixed.trunc
        if isinstance(self.nu_source, DensityMatrix):
            return self.nu_source.truncation
        betas = self.grid if self.param == "beta" else (abs(self.nu_source),)
        return default_truncation(max(abs(b) for b in betas) ** 2)

    def input_state(self, value: float | None = None) -> DensityMatrix:
        if isinstance(self.nu_source, DensityMatrix):
            return self.nu_source
        beta = value if self.param == "beta" else self.nu_source
        return coherent_density_matrix(beta, self.truncation())

    def params_at(self, value: float) -> SynthesizerParams:
        if self.param in ("tau", "psi", "chi_t"):
            return self.fixed.with_cavity(**{self.param: value})
        if self.param in ("alpha", "eta"):
            return self.fixed.replace(**{self.param: value})
        return self.fixed


@dataclass(frozen=True, eq=False)
class SweepRow:
    value: float
    p_click: float
    metrics: StateMetrics | None = None
    error: str | None = None


def evaluate_point(spec: SweepSpec, value: float) -> SweepRow:
    """Simulate one grid point; failures are captured in the row."""
    try:
        params = spec.params_at(value)
        nu_in = spec.input_state(value)
    except FockSynthError as exc:
        return SweepRow(value, math.nan, error=f"{type(exc).__name__}: {exc}")
    try:
        rho, report = conditional_state(nu_in, params)
    except FockSynthError as exc:
        try:
            p = detection_probability(nu_in, params).p_click
        except FockSynthError:
            p = math.nan
        return SweepRow(value, p, error=f"{type(exc).__name__}: {exc}")
    return SweepRow(value, report.p_click, metrics(rho, spec.target))


def thread_count() -> int:
    env = os.environ.get("FOCKSYNTH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameter(f"FOCKSYNTH_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    """Evaluate every grid point; rows come back in grid order."""
    workers = thread_count() if workers is None else workers
    if workers <= 1 or len(spec.grid) == 1:
        return [evaluate_point(spec, v) for v in spec.grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda v: evaluate_point(spec, v), spec.grid))


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.12g}"


def sweep_csv(param: str, rows: list[SweepRow]) -> str:
    """CSV with a header and one row per point. Failed points leave metric cells empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        m = row.metrics
        writer.writerow([
            param,
            _fmt(row.value),
            _fmt(row.p_click),
            _fmt(None if m is None else m.fidelity),
            _fmt(None if m is None else m.purity),
            _fmt(None if m is None else m.trace_defect),
            _fmt(None if m is None else m.min_eigenvalue),
        ])
    return buf.getvalue()
