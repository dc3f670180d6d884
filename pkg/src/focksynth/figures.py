"""
Published configurations of the synthesizer and their reproduction.

The beam-splitter transmissivities behind the published panels were never
stated, only the resulting click probabilities. Each panel therefore
calibrates tau against its published P1 before computing the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import metrics
from .cavity import CavityParams
from .errors import FockSynthError
from .fockspace import PureStateVector, coherent_density_matrix, default_truncation
from .synthesizer import SynthesizerParams, conditional_state, equal_weight_amplitude, tau_calibration

TAU_BRACKET = (1e-8, 1.0)


@dataclass(frozen=True)
class Setup:
    beta: float
    alpha: float
    psi: float
    chi_t: float
    target_numbers: tuple[int, ...]
    published_p_click: tuple[float, ...]

    def truncation(self):
        return default_truncation(self.beta ** 2, self.target_numbers)

    def input_state(self):
        return coherent_density_matrix(self.beta, self.truncation())

    def params(self, tau: float = 1.0, eta: float = 1.0, alpha: float | None = None):
        return SynthesizerParams(CavityParams(tau, self.psi, self.chi_t),
                                 self.alpha if alpha is None else alpha, eta)

    def target(self) -> PureStateVector:
        return PureStateVector.superposition(self.target_numbers, self.truncation())


# Fock state |4> from beta = 2
FIG2 = Setup(beta=2.0, alpha=20.0, psi=0.04, chi_t=0.01, target_numbers=(4,),
             published_p_click=(0.99885, 0.4905, 0.1997))

# (|10> + |20>)/sqrt(2) from the equal-weight beta
FIG3 = Setup(beta=equal_weight_amplitude(10, 20), alpha=8.0, psi=0.0, chi_t=math.pi / 5,
             target_numbers=(10, 20), published_p_click=(0.205, 0.092))

FIG4_ETA = 0.2
FIG4_ALPHA = 3.58
FIG4_PUBLISHED = 0.116


def calibrate(setup: Setup, p_click: float, bracket=TAU_BRACKET) -> float:
    return tau_calibration(setup.input_state(), setup.params(), p_click, bracket)


def panel(setup: Setup, label: str, tau: float, eta: float = 1.0, alpha: float | None = None,
          published: float | None = None, matrix: bool = False) -> dict:
    """Simulate one panel and collect what the published plot shows."""
    rho, report = conditional_state(setup.input_state(), setup.params(tau, eta, alpha))
    m = metrics(rho, setup.target())
    out = {
        "panel": label,
        "tau": tau,
        "eta": eta,
        "alpha": setup.alpha if alpha is None else alpha,
        "published_p_click": published,
        "p_click": report.p_click,
        "fidelity": m.fidelity,
        "purity": m.purity,
        "number_distribution": [float(x) for x in m.number_distribution],
    }
    if matrix:
        out["abs_entries"] = [[float(x) for x in row] for row in np.abs(rho.entries)]
    return out


def _failed(label: str, published: float | None, exc: Exception) -> dict:
    return {"panel": label, "published_p_click": published,
            "error": f"{type(exc).__name__}: {exc}"}


def _calibrated_panels(setup: Setup, matrix: bool) -> list[dict]:
    panels = []
    for label, published in zip("abc", setup.published_p_click):
        try:
            tau = calibrate(setup, published)
            panels.append(panel(setup, label, tau, published=published, matrix=matrix))
        except FockSynthError as exc:
            panels.append(_failed(label, published, exc))
    return panels


def figure(which: int) -> dict:
    """Reproduce figure 2, 3 or 4 as a JSON-ready dict."""
    if which == 2:
        setup, panels = FIG2, _calibrated_panels(FIG2, matrix=False)
    elif which == 3:
        setup, panels = FIG3, _calibrated_panels(FIG3, matrix=True)
    elif which == 4:
        setup = FIG3
        try:
            tau = calibrate(FIG3, FIG3.published_p_click[0])
            panels = [
                panel(FIG3, "a", tau, eta=FIG4_ETA, published=FIG4_PUBLISHED, matrix=True),
                panel(FIG3, "b", tau, alpha=FIG4_ALPHA, published=FIG4_PUBLISHED, matrix=True),
            ]
        except FockSynthError as exc:
            panels = [_failed("a", FIG4_PUBLISHED, exc), _failed("b", FIG4_PUBLISHED, exc)]
    else:
        raise ValueError(f"no reproduction for figure {which}; choose 2, 3 or 4")
    return {
        "figure": which,
        "setup": {
            "beta": setup.beta,
            "alpha": setup.alpha,
            "psi": setup.psi,
            "chi_t": setup.chi_t,
            "n_max": setup.truncation().n_max,
            "target_numbers": list(setup.target_numbers),
        },
        "panels": panels,
    }
