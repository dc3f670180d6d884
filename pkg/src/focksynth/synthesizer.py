"""
Detection probability and post-selected signal state of the synthesizer.

The signal mode c1 (state nu_in) shifts the round-trip phase of a ring
cavity through a cross-Kerr medium. The cavity is fed by a coherent state
|alpha> and its transmitted port b2 is watched by an on/off detector of
quantum efficiency eta. Given a click, the signal is left in

    nu_out[n, m] = nu_in[n, m] exp(|alpha|^2 (kappa_n kappa_m* + sigma_n sigma_m* - 1))
                   (1 - exp(-eta |alpha|^2 sigma_n sigma_m*)) / P1

    P1 = sum_n nu_in[n, n] (1 - exp(-eta |alpha|^2 |sigma_n|^2))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .cavity import CavityParams, TWO_PI, cavity_response, resonant_numbers
from .errors import (
    DimensionMismatch,
    InvalidParameter,
    InvalidState,
    NoClickProbability,
    NoResonance,
    NonMonotoneBracket,
    TargetOutOfRange,
)
from .fockspace import DensityMatrix, FockTruncation, PureStateVector, log_factorial

MIN_CLICK_PROBABILITY = 1e-15


@dataclass(frozen=True)
class SynthesizerParams:
    """Full device configuration.

    Args:
        cavity: ring-cavity parameters (tau, psi, chi_t).
        alpha: coherent amplitude injected into cavity port a1.
        eta: quantum efficiency of the on/off detector, in (0, 1].
        trunc: Fock cutoff of the signal mode. ``None`` means "whatever the
            input state uses".
    """

    cavity: CavityParams
    alpha: complex
    eta: float = 1.0
    trunc: FockTruncation | None = None

    def __post_init__(self):
        alpha = complex(self.alpha)
        if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
            raise InvalidParameter(f"alpha must be finite, got {self.alpha}")
        eta = float(self.eta)
        if not 0 < eta <= 1:
            raise InvalidParameter(f"quantum efficiency must lie in (0, 1], got {self.eta}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "eta", eta)

    @property
    def alpha_sq(self) -> float:
        return abs(self.alpha) ** 2

    def replace(self, **changes) -> SynthesizerParams:
        fields = {"cavity": self.cavity, "alpha": self.alpha, "eta": self.eta, "trunc": self.trunc}
        fields.update(changes)
        return SynthesizerParams(**fields)

    def with_cavity(self, **changes) -> SynthesizerParams:
        return self.replace(cavity=self.cavity.replace(**changes))

    def to_dict(self) -> dict:
        return {
            "tau": self.cavity.tau,
            "psi": self.cavity.psi,
            "chi_t": self.cavity.chi_t,
            "alpha": [self.alpha.real, self.alpha.imag],
            "eta": self.eta,
            "n_max": None if self.trunc is None else self.trunc.n_max,
        }


@dataclass(frozen=True)
class ClickReport:
    """Outcome probabilities of the on/off detector (1 = click, 0 = no click)."""

    p_click: float
    p_no_click: float
    params: SynthesizerParams

    def to_dict(self) -> dict:
        return {"p_click": self.p_click, "p_no_click": self.p_no_click,
                "params": self.params.to_dict()}


def _resolve_truncation(nu_in: DensityMatrix, params: SynthesizerParams) -> FockTruncation:
    trunc = nu_in.truncation
    if params.trunc is not None and params.trunc.n_max != trunc.n_max:
        raise DimensionMismatch(
            f"input state has n_max={trunc.n_max} but params ask for n_max={params.trunc.n_max}")
    return trunc


def pom_no_click_weight(k, eta: float):
    """Diagonal weight (1 - eta)^k of the no-click element on |k>."""
    if not 0 < eta <= 1:
        raise InvalidParameter(f"quantum efficiency must lie in (0, 1], got {eta}")
    k_arr = np.asarray(k)
    if np.any(k_arr < 0):
        raise InvalidParameter(f"photon number must be >= 0, got {k}")
    out = np.power(1.0 - eta, k_arr.astype(float))
    return float(out) if out.ndim == 0 else out


def _click_weights(nu_in: DensityMatrix, params: SynthesizerParams):
    trunc = _resolve_truncation(nu_in, params)
    response = cavity_response(params.cavity, trunc)
    weights = -np.expm1(-params.eta * params.alpha_sq * response.sigma_abs_sq)
    return response, weights


def detection_probability(nu_in: DensityMatrix, params: SynthesizerParams) -> ClickReport:
    """Click probability P1 = sum_n nu_nn (1 - exp(-eta |alpha|^2 |sigma_n|^2))."""
    _, weights = _click_weights(nu_in, params)
    p = float(np.dot(nu_in.number_distribution, weights))
    p = min(1.0, max(0.0, p))
    return ClickReport(p_click=p, p_no_click=1.0 - p, params=params)


def conditional_state(nu_in: DensityMatrix,
                      params: SynthesizerParams) -> tuple[DensityMatrix, ClickReport]:
    """Signal-mode state after a detector click, with its click report.

    Raises:
        NoClickProbability: if P1 <= 1e-15.
    """
    response, weights = _click_weights(nu_in, params)
    report = detection_probability(nu_in, params)
    if report.p_click <= MIN_CLICK_PROBABILITY:
        raise NoClickProbability(f"click probability {report.p_click:.3g} is too small to condition on")

    a2 = params.alpha_sq
    kappa, sigma = response.kappa, response.sigma
    ss = np.outer(sigma, sigma.conj())
    # Re(exponent) <= 0 by Cauchy-Schwarz; the diagonal vanishes identically.
    exponent = a2 * (np.outer(kappa, kappa.conj()) + ss - 1.0)
    np.fill_diagonal(exponent, 0.0)
    transfer = -np.expm1(-params.eta * a2 * ss)
    np.fill_diagonal(transfer, weights)

    out = nu_in.entries * np.exp(exponent) * transfer / report.p_click
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out), report


def ideal_filter_prediction(nu_in: DensityMatrix, cavity: CavityParams,
                            trunc: FockTruncation | None = None, threshold: float = 0.5):
    """Output expected in the high-finesse limit tau << chi_t.

    With a single resonant photon number n* the result is the pure state
    |n*> (a `PureStateVector`). With several resonances it is the block of
    `nu_in` on the resonant numbers, renormalized (a `DensityMatrix`).
    """
    trunc = nu_in.truncation if trunc is None else trunc
    if trunc.n_max != nu_in.n_max:
        raise DimensionMismatch(f"input state has n_max={nu_in.n_max}, trunc has {trunc.n_max}")
    resonant = resonant_numbers(cavity, trunc, threshold)
    if not resonant:
        raise NoResonance(f"no photon number up to {trunc.n_max} is resonant")
    if len(resonant) == 1:
        return PureStateVector.fock(resonant[0], trunc)
    block = nu_in.restricted(resonant)
    if block.trace <= 0:
        raise InvalidState(f"input state has no weight on the resonant numbers {resonant}")
    return block.normalized()


def equal_weight_amplitude(n1: int, n2: int) -> float:
    """Real coherent amplitude beta with equal Poisson weights on |n1> and |n2>.

    |beta|^2 = (n1! / n2!)^(1 / (n1 - n2)).
    """
    if n1 < 0 or n2 < 0:
        raise InvalidParameter(f"photon numbers must be >= 0, got {n1}, {n2}")
    if n1 == n2:
        raise InvalidParameter("equal-weight amplitude needs two distinct photon numbers")
    log_mean = (log_factorial(n1) - log_factorial(n2)) / (n1 - n2)
    return math.exp(0.5 * log_mean)


def design_phase(n_star: int, chi_t: float, snap: float = 1e-9) -> float:
    """Tunable phase psi in [0, 2 pi) that puts |n_star> on resonance.

    Values within `snap` of a multiple of 2 pi are returned as 0.
    """
    if n_star < 0:
        raise InvalidParameter(f"photon number must be >= 0, got {n_star}")
    psi = math.fmod(n_star * chi_t, TWO_PI)
    if psi < 0:
        psi += TWO_PI
    if psi < snap or TWO_PI - psi < snap:
        return 0.0
    return psi


def tau_calibration(nu_in: DensityMatrix, params: SynthesizerParams, target_p_click: float,
                    bracket: Sequence[float], samples: int = 32, tol: float = 1e-6) -> float:
    """Transmissivity tau whose click probability equals `target_p_click`.

    ``params.cavity.tau`` is ignored. P1 is first sampled at `samples`
    log-spaced points of `bracket` to confirm it is monotone, then the
    root is bisected in log10(tau).

    Raises:
        TargetOutOfRange: target outside the P1 range over the bracket.
        NonMonotoneBracket: P1 not monotone over the sampled points.
    """
    lo, hi = (float(b) for b in bracket)
    if not 0 < lo < hi <= 1:
        raise InvalidParameter(f"bracket must satisfy 0 < lo < hi <= 1, got {bracket}")

    def p_click(log_tau):
        return detection_probability(nu_in, params.with_cavity(tau=10.0 ** log_tau)).p_click

    grid = np.linspace(math.log10(lo), math.log10(hi), samples)
    values = np.array([p_click(x) for x in grid])
    steps = np.diff(values)
    if not (np.all(steps >= -1e-12) or np.all(steps <= 1e-12)):
        raise NonMonotoneBracket(f"click probability is not monotone in tau over {bracket}")
    if not values.min() <= target_p_click <= values.max():
        raise TargetOutOfRange(
            f"target {target_p_click} outside [{values.min():.6g}, {values.max():.6g}] over {bracket}")

    # Narrow to the sampled cell that brackets the target before bisecting.
    sign = np.sign(values - target_p_click)
    hit = np.flatnonzero(sign == 0)
    if hit.size:
        return float(10.0 ** grid[hit[0]])
    cell = np.flatnonzero(sign[:-1] != sign[1:])[0]
    root = optimize.bisect(lambda x: p_click(x) - target_p_click,
                           grid[cell], grid[cell + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps,
                           maxiter=200)
    if abs(p_click(root) - target_p_click) > tol:
        raise TargetOutOfRange(f"bisection could not reach {target_p_click} within {tol}")
    return float(10.0 ** root)
