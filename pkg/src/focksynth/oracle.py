"""
Brute-force reference for the conditional state.

Nothing here uses the closed-form click probability or conditional state.
The cavity scattering amplitudes are obtained by solving the steady-state
field equations of the two-beam-splitter ring numerically, the Kerr
coupling enters as a photon-number-dependent round-trip phase, the output
coherent states of b1 and b2 are expanded in explicit truncated Fock
bases, and the detector element is applied and traced out by summation
over those bases.

The explicit output state

    rho_out = sum_{n,m} nu_nm |B1_n><B1_m| (x) |B2_n><B2_m| (x) |n><m|

is stored through its factors (the b1 and b2 vectors for every signal
photon number n) because the dense operator on (J+1)(K+1)(N+1) states is
far too large at useful cutoffs. `TripartiteState.dense` assembles the
full operator for small cutoffs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cavity import CavityParams
from .errors import InvalidParameter, NoClickProbability, TruncationTooSmall
from .fockspace import DensityMatrix, FockTruncation, coherent_coefficients
from .synthesizer import MIN_CLICK_PROBABILITY, SynthesizerParams, conditional_state

TRACE_DEFICIT_TOL = 1e-8


def ring_scattering_matrix(phi: float, tau: float) -> np.ndarray:
    """2x2 map (a1, a2) -> (b1, b2) of the ring, from its field equations.

    Unknowns are the outputs b1, b2 and the internal fields u (BS1 -> BS2
    arm), w (leaving BS2 into the return arm) and v (return arm arriving
    at BS1). Each beam splitter has real amplitudes t = sqrt(tau),
    r = sqrt(1 - tau) with reflection -r seen from outside. The return arm
    carries the round-trip phase.
    """
    if not 0 < tau <= 1:
        raise InvalidParameter(f"beam-splitter transmissivity must lie in (0, 1], got {tau}")
    t, r = math.sqrt(tau), math.sqrt(1.0 - tau)
    # rows: b1, u, b2, w, v  ;  columns: b1, b2, u, w, v
    a = np.array([
        [1, 0, 0, 0, -t],
        [0, 0, 1, 0, -r],
        [0, 1, -t, 0, 0],
        [0, 0, -r, 1, 0],
        [0, 0, 0, -np.exp(1j * phi), 1],
    ], dtype=complex)
    # sources per input mode a1, a2
    rhs = np.array([
        [-r, 0],
        [t, 0],
        [0, -r],
        [0, t],
        [0, 0],
    ], dtype=complex)
    sol = np.linalg.solve(a, rhs)
    return sol[:2, :]


def poisson_cutoff(mean: float) -> int:
    """Cutoff whose Poisson tail beyond it is negligible (< 1e-16 or so)."""
    return int(math.ceil(mean + 10.0 * math.sqrt(mean) + 15))


@dataclass(frozen=True, eq=False)
class TripartiteState:
    """Output state over b1 (x) b2 (x) c2 in factored form."""

    nu: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    @property
    def cutoffs(self) -> tuple[int, int, int]:
        return self.b1.shape[1] - 1, self.b2.shape[1] - 1, self.nu.shape[0] - 1

    @property
    def trace(self) -> float:
        norms = np.sum(np.abs(self.b1) ** 2, axis=1) * np.sum(np.abs(self.b2) ** 2, axis=1)
        return float(np.dot(self.nu.diagonal().real, norms))

    def overlaps(self, mode: str) -> np.ndarray:
        """G[n, m] = <B_m|B_n> for mode 'b1' or 'b2'."""
        vecs = {"b1": self.b1, "b2": self.b2}[mode]
        return vecs @ vecs.conj().T

    def dense(self) -> np.ndarray:
        """Full density operator, axes ordered (b1, b2, c2) x (b1, b2, c2)."""
        j, k, n = self.cutoffs
        size = (j + 1) * (k + 1) * (n + 1)
        if size > 4000:
            raise InvalidParameter(f"dense tripartite operator of dimension {size} is too large")
        kets = np.einsum("nj,nk,nl->njkl", self.b1, self.b2, np.eye(n + 1)).reshape(n + 1, size)
        return kets.T @ self.nu @ kets.conj()


def build_output_state(nu_in: DensityMatrix, params: SynthesizerParams,
                       cavity_trunc: tuple[int, int] | None = None) -> TripartiteState:
    """Explicit output state for input nu_in (x) |alpha> (x) |0>.

    Args:
        cavity_trunc: Fock cutoffs (J, K) for b1 and b2. Chosen from |alpha|^2
            when omitted.

    Raises:
        TruncationTooSmall: if the assembled state misses more than 1e-8 of its trace.
    """
    n_max = nu_in.n_max
    if params.trunc is not None and params.trunc.n_max != n_max:
        raise InvalidParameter("params truncation differs from the input state")
    if cavity_trunc is None:
        cut = poisson_cutoff(params.alpha_sq)
        cavity_trunc = (cut, cut)
    j_max, k_max = cavity_trunc
    cav = params.cavity
    b1 = np.empty((n_max + 1, j_max + 1), dtype=complex)
    b2 = np.empty((n_max + 1, k_max + 1), dtype=complex)
    for n in range(n_max + 1):
        # cross-Kerr: n signal photons shift the cavity round trip by -chi_t n
        s = ring_scattering_matrix(cav.psi - cav.chi_t * n, cav.tau)
        # |alpha>_a1 |0>_a2 -> |S11 alpha>_b1 |S21 alpha>_b2
        b1[n] = coherent_coefficients(s[0, 0] * params.alpha, FockTruncation(j_max)).coefficients
        b2[n] = coherent_coefficients(s[1, 0] * params.alpha, FockTruncation(k_max)).coefficients
    state = TripartiteState(nu=np.array(nu_in.entries), b1=b1, b2=b2)
    deficit = nu_in.trace - state.trace
    if deficit > TRACE_DEFICIT_TOL:
        raise TruncationTooSmall(f"cavity cutoffs {cavity_trunc} lose {deficit:.3g} of the trace")
    return state


def oracle_condition(state: TripartiteState, eta: float) -> tuple[DensityMatrix, float]:
    """Apply the click element on b2, trace out b1 and b2, renormalize.

    The click element is I - sum_k (1 - eta)^k |k><k| on the b2 cutoff.
    """
    if not 0 < eta <= 1:
        raise InvalidParameter(f"quantum efficiency must lie in (0, 1], got {eta}")
    k = np.arange(state.b2.shape[1])
    click = 1.0 - (1.0 - eta) ** k
    g1 = state.b1 @ state.b1.conj().T
    g2 = (state.b2 * click) @ state.b2.conj().T
    unnormalized = state.nu * g1 * g2
    p_click = float(np.trace(unnormalized).real)
    if p_click <= MIN_CLICK_PROBABILITY:
        raise NoClickProbability(f"click probability {p_click:.3g} is too small to condition on")
    return DensityMatrix(unnormalized / p_click), p_click


def oracle_condition_dense(state: TripartiteState, eta: float) -> tuple[DensityMatrix, float]:
    """Same as `oracle_condition` but on the assembled dense operator."""
    j, k, n = state.cutoffs
    rho = state.dense().reshape((j + 1, k + 1, n + 1) * 2)
    click = 1.0 - (1.0 - eta) ** np.arange(k + 1)
    unnormalized = np.einsum("abnabm,b->nm", rho, click)
    p_click = float(np.trace(unnormalized).real)
    if p_click <= MIN_CLICK_PROBABILITY:
        raise NoClickProbability(f"click probability {p_click:.3g} is too small to condition on")
    return DensityMatrix(unnormalized / p_click), p_click


@dataclass(frozen=True, eq=False)
class OracleCase:
    beta: complex
    nu_in: DensityMatrix
    params: SynthesizerParams


def random_instances(rng: np.random.Generator, count: int, max_alpha: float = 3.0,
                     max_beta: float = 2.0, max_n: int = 12, tau_range=(1e-3, 0.3),
                     tau: float | None = None, eta: float | None = None) -> list[OracleCase]:
    """Random coherent-input configurations small enough for the oracle.

    tau is log-uniform over `tau_range` and eta is drawn from {0.2, 1}
    unless fixed.
    """
    cases = []
    for _ in range(count):
        n_max = int(rng.integers(4, max_n + 1))
        beta = max_beta * math.sqrt(rng.uniform()) * np.exp(2j * math.pi * rng.uniform())
        alpha = rng.uniform(0.3, max_alpha) * np.exp(2j * math.pi * rng.uniform())
        t = tau if tau is not None else 10 ** rng.uniform(*np.log10(tau_range))
        e = eta if eta is not None else float(rng.choice([0.2, 1.0]))
        cavity = CavityParams(t, rng.uniform(0, 2 * math.pi), rng.uniform(0, 1.0))
        nu_in = DensityMatrix.from_pure(coherent_coefficients(beta, FockTruncation(n_max)))
        cases.append(OracleCase(complex(beta), nu_in, SynthesizerParams(cavity, alpha, e)))
    return cases


def compare_with_oracle(nu_in: DensityMatrix, params: SynthesizerParams) -> tuple[float, float]:
    """(max elementwise state deviation, |P1 deviation|) against the closed forms."""
    rho_closed, report = conditional_state(nu_in, params)
    rho_oracle, p_oracle = oracle_condition(build_output_state(nu_in, params), params.eta)
    return (float(np.max(np.abs(rho_closed.entries - rho_oracle.entries))),
            abs(report.p_click - p_oracle))
