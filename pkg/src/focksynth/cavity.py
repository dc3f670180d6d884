"""
Ring-cavity response to a round-trip phase.

A ring of two mirrors and two equal beam splitters (transmissivity tau)
maps the input modes (a1, a2) onto the outputs (b1, b2) through

    b1 = kappa(phi) a1 + exp(i phi) sigma(phi) a2
    b2 = sigma(phi) a1 + kappa(phi) a2

    kappa(phi) = sqrt(1 - tau) (exp(i phi) - 1) / (1 - exp(i phi) (1 - tau))
    sigma(phi) = tau / (1 - exp(i phi) (1 - tau))

A signal photon number n in the Kerr medium sets the round-trip phase
phi_n = psi - chi_t n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .fockspace import FockTruncation

TWO_PI = 2.0 * math.pi


def _check_tau(tau):
    tau_arr = np.asarray(tau, dtype=float)
    if not np.all((tau_arr > 0) & (tau_arr <= 1)):
        raise InvalidParameter(f"beam-splitter transmissivity must lie in (0, 1], got {tau}")


@dataclass(frozen=True)
class CavityParams:
    """Beam-splitter transmissivity, tunable phase and Kerr phase per photon."""

    tau: float
    psi: float = 0.0
    chi_t: float = 0.0

    def __post_init__(self):
        for name in ("tau", "psi", "chi_t"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameter(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        _check_tau(self.tau)

    def replace(self, **changes) -> CavityParams:
        return CavityParams(**{"tau": self.tau, "psi": self.psi, "chi_t": self.chi_t, **changes})


def fock_phase(n, params: CavityParams):
    """Round-trip phase psi - chi_t n for signal photon number(s) n.

    No reduction modulo 2 pi is applied.
    """
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise InvalidParameter(f"photon number must be >= 0, got {n}")
    phase = params.psi - params.chi_t * n_arr
    return float(phase) if phase.ndim == 0 else phase


def _denominator(phi, tau):
    # exp(-i phi/2) (1 - exp(i phi)(1 - tau)), written without the
    # cancellation in 1 - (1 - tau) near resonance.
    half = 0.5 * np.asarray(phi, dtype=float)
    return tau * np.exp(1j * half) - 2j * np.sin(half), half


def cavity_coefficients(phi, tau):
    """Reflection `kappa` and transmission `sigma` amplitudes of the ring.

    Accepts scalars or arrays of phases; returns complex values of the same shape.
    """
    _check_tau(tau)
    tau = np.asarray(tau, dtype=float)
    den, half = _denominator(phi, tau)
    sigma = tau * np.exp(-1j * half) / den
    kappa = np.sqrt(1.0 - np.asarray(tau, dtype=float)) * 2j * np.sin(half) / den
    if np.ndim(sigma) == 0:
        return complex(kappa), complex(sigma)
    return kappa, sigma


def sigma_abs_sq(phi, tau):
    """|sigma(phi)|^2 = 1 / (1 + 4 (1 - tau) / tau^2 sin^2(phi / 2))."""
    _check_tau(tau)
    s = np.sin(0.5 * np.asarray(phi, dtype=float))
    tau = np.asarray(tau, dtype=float)
    out = 1.0 / (1.0 + 4.0 * (1.0 - tau) * (s / tau) ** 2)
    return float(out) if out.ndim == 0 else out


def sigma_argument(phi, tau):
    """Phase of sigma(phi): arctan[(1-tau) sin phi / (1 - (1-tau) cos phi)]."""
    _check_tau(tau)
    phi = np.asarray(phi, dtype=float)
    tau = np.asarray(tau, dtype=float)
    # 1 - (1-tau) cos phi = 2 sin^2(phi/2) + tau cos phi > 0
    den = 2.0 * np.sin(0.5 * phi) ** 2 + tau * np.cos(phi)
    out = np.arctan2((1.0 - tau) * np.sin(phi), den)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CavityResponse:
    """kappa_n, sigma_n and |sigma_n|^2 for n = 0..n_max."""

    kappa: np.ndarray
    sigma: np.ndarray
    sigma_abs_sq: np.ndarray

    def __post_init__(self):
        for name in ("kappa", "sigma", "sigma_abs_sq"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_max(self) -> int:
        return self.sigma.size - 1


def cavity_response(params: CavityParams, trunc: FockTruncation) -> CavityResponse:
    phi = fock_phase(trunc.numbers, params)
    kappa, sigma = cavity_coefficients(phi, params.tau)
    return CavityResponse(kappa=kappa, sigma=sigma, sigma_abs_sq=sigma_abs_sq(phi, params.tau))


def resonant_numbers(params: CavityParams, trunc: FockTruncation,
                     threshold: float = 0.5) -> list[int]:
    """Photon numbers n <= n_max whose transmission |sigma_n|^2 reaches `threshold`."""
    if not 0 < threshold < 1:
        raise InvalidParameter(f"threshold must lie in (0, 1), got {threshold}")
    t = sigma_abs_sq(fock_phase(trunc.numbers, params), params.tau)
    return [int(n) for n in np.flatnonzero(t >= threshold)]
