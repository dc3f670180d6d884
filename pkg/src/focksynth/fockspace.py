"""
Numerics on a truncated single-mode Fock basis {|0>, ..., |n_max>}.

Everything here is immutable: arrays held by `PureStateVector` and
`DensityMatrix` are flagged read-only and every operation returns a new
object. Coherent-state amplitudes are built in (log-magnitude, phase) form
so that amplitudes of order 20 and cutoffs of several hundred photons never
overflow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, InvalidState

HERMITICITY_TOL = 1e-12
TRACE_SLACK = 1e-9
PSD_TOL = 1e-9

_EXACT_LOG_FACTORIALS = tuple(math.log(math.factorial(n)) for n in range(21))


def log_factorial(n: int) -> float:
    """Return ln(n!).

    Uses an exact table for n <= 20 and ``math.lgamma`` beyond.
    """
    n = int(n)
    if n < 0:
        raise InvalidParameter(f"log_factorial needs n >= 0, got {n}")
    if n <= 20:
        return _EXACT_LOG_FACTORIALS[n]
    return math.lgamma(n + 1.0)


def log_factorials(n_max: int) -> np.ndarray:
    """Vector of ln(n!) for n = 0..n_max."""
    return np.array([log_factorial(n) for n in range(n_max + 1)])


@dataclass(frozen=True)
class FockTruncation:
    """Cutoff of the Fock basis; the basis has ``n_max + 1`` states."""

    n_max: int

    def __post_init__(self):
        if isinstance(self.n_max, bool) or int(self.n_max) != self.n_max:
            raise InvalidParameter(f"n_max must be an integer, got {self.n_max!r}")
        if self.n_max < 0:
            raise InvalidParameter(f"n_max must be >= 0, got {self.n_max}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def numbers(self) -> np.ndarray:
        return np.arange(self.dim)


def default_truncation(mean: float, numbers: Iterable[int] = ()) -> FockTruncation:
    """Cutoff large enough for a Poissonian of the given mean and for `numbers`.

    The cutoff is ``ceil(max(mean, max(numbers))) + max(15, 10 sqrt(mean))``.
    """
    mean = float(mean)
    if not math.isfinite(mean) or mean < 0:
        raise InvalidParameter(f"mean photon number must be finite and >= 0, got {mean}")
    base = max([mean, *[float(n) for n in numbers]])
    return FockTruncation(math.ceil(base) + max(15, math.ceil(10 * math.sqrt(mean))))


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


def _check_same_truncation(a: FockTruncation, b: FockTruncation):
    if a.n_max != b.n_max:
        raise DimensionMismatch(f"truncations differ: n_max={a.n_max} vs n_max={b.n_max}")


@dataclass(frozen=True, eq=False)
class PureStateVector:
    """Amplitudes c_0..c_{n_max} of a (possibly unnormalized) pure state."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coefficients)
        if c.ndim != 1 or c.size == 0:
            raise InvalidState("state vector must be a nonempty 1-d array")
        if not np.all(np.isfinite(c)):
            raise InvalidState("state vector has non-finite entries")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def fock(cls, n: int, trunc: FockTruncation) -> PureStateVector:
        if not 0 <= n <= trunc.n_max:
            raise InvalidParameter(f"|{n}> is outside the truncation n_max={trunc.n_max}")
        c = np.zeros(trunc.dim, dtype=complex)
        c[n] = 1.0
        return cls(c)

    @classmethod
    def superposition(cls, numbers: Sequence[int], trunc: FockTruncation,
                      weights: Sequence[complex] | None = None) -> PureStateVector:
        """Normalized superposition of Fock states, equal weights by default."""
        c = np.zeros(trunc.dim, dtype=complex)
        if weights is None:
            weights = [1.0] * len(numbers)
        for n, w in zip(numbers, weights, strict=True):
            if not 0 <= n <= trunc.n_max:
                raise InvalidParameter(f"|{n}> is outside the truncation n_max={trunc.n_max}")
            c[n] += w
        return cls(c).normalize()

    @property
    def truncation(self) -> FockTruncation:
        return FockTruncation(self.coefficients.size - 1)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.coefficients, self.coefficients).real)

    def normalize(self) -> PureStateVector:
        norm_sq = self.norm_sq
        if norm_sq == 0.0:
            raise InvalidState("cannot normalize the zero vector")
        return PureStateVector(self.coefficients / math.sqrt(norm_sq))


def coherent_coefficients(amp: complex, trunc: FockTruncation) -> PureStateVector:
    """Truncated expansion of the coherent state |amp>.

    c_n = exp(-|amp|^2/2) amp^n / sqrt(n!), assembled as
    exp(log|c_n|) * exp(i n arg(amp)).
    """
    amp = complex(amp)
    if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
        raise InvalidParameter(f"coherent amplitude must be finite, got {amp}")
    n = trunc.numbers
    if amp == 0:
        return PureStateVector.fock(0, trunc)
    r = abs(amp)
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * log_factorials(trunc.n_max)
    phase = n * math.atan2(amp.imag, amp.real)
    return PureStateVector(np.exp(log_mag + 1j * phase))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator on a truncated Fock basis.

    Construction only checks shape and finiteness. Call `check_invariants`
    to assert Hermiticity, trace bounds and positivity.
    """

    entries: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.entries)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
            raise InvalidState(f"density matrix must be square and nonempty, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise InvalidState("density matrix has non-finite entries")
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_pure(cls, psi: PureStateVector) -> DensityMatrix:
        c = psi.coefficients
        return cls(np.outer(c, c.conj()))

    @classmethod
    def fock(cls, n: int, trunc: FockTruncation) -> DensityMatrix:
        return cls.from_pure(PureStateVector.fock(n, trunc))

    @classmethod
    def diagonal(cls, populations: Sequence[float]) -> DensityMatrix:
        return cls(np.diag(np.asarray(populations, dtype=complex)))

    @property
    def truncation(self) -> FockTruncation:
        return FockTruncation(self.entries.shape[0] - 1)

    @property
    def n_max(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def trace_defect(self) -> float:
        return 1.0 - self.trace

    @property
    def hermiticity_defect(self) -> float:
        """max |rho_nm - conj(rho_mn)| / max(1, |rho_nm|)."""
        rho = self.entries
        scale = np.maximum(1.0, np.abs(rho))
        return float(np.max(np.abs(rho - rho.conj().T) / scale))

    def hermitized(self) -> np.ndarray:
        return 0.5 * (self.entries + self.entries.conj().T)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.hermitized())

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    @property
    def number_distribution(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    def normalized(self) -> DensityMatrix:
        t = self.trace
        if t <= 0:
            raise InvalidState(f"cannot normalize a state with trace {t}")
        return DensityMatrix(self.entries / t)

    def restricted(self, numbers: Iterable[int]) -> DensityMatrix:
        """Zero every row and column outside `numbers` (not renormalized)."""
        mask = np.zeros(self.dim, dtype=bool)
        mask[list(numbers)] = True
        return DensityMatrix(np.where(np.outer(mask, mask), self.entries, 0))

    def check_invariants(self) -> DensityMatrix:
        """Raise `InvalidState` unless Hermitian, trace in [0, 1], and PSD."""
        if self.hermiticity_defect > HERMITICITY_TOL:
            raise InvalidState(f"not Hermitian: defect {self.hermiticity_defect:.3g}")
        t = self.trace
        if not -TRACE_SLACK <= t <= 1 + TRACE_SLACK:
            raise InvalidState(f"trace {t!r} outside [0, 1]")
        if self.min_eigenvalue < -PSD_TOL * max(t, 0.0):
            raise InvalidState(f"not positive semidefinite: min eigenvalue {self.min_eigenvalue:.3g}")
        return self

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> DensityMatrix:
        try:
            n_max = int(data["n_max"])
            rows = data["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidState(f"malformed density-matrix object: {exc}") from None
        if len(rows) != n_max + 1 or any(len(row) != n_max + 1 for row in rows):
            raise InvalidState(f"entries must be a square {n_max + 1}x{n_max + 1} array")
        try:
            arr = np.array([[complex(re, im) for re, im in row] for row in rows])
        except (TypeError, ValueError) as exc:
            raise InvalidState(f"entries must be [re, im] pairs: {exc}") from None
        return cls(arr.reshape(n_max + 1, n_max + 1))

    @classmethod
    def from_json(cls, text: str) -> DensityMatrix:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidState(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


def coherent_density_matrix(amp: complex, trunc: FockTruncation) -> DensityMatrix:
    """|amp><amp| truncated to `trunc` (trace = norm^2 of the truncated vector)."""
    return DensityMatrix.from_pure(coherent_coefficients(amp, trunc))


def fidelity_to_pure(rho: DensityMatrix, target: PureStateVector) -> float:
    """<target| rho |target>, clamped to [0, 1]."""
    _check_same_truncation(rho.truncation, target.truncation)
    c = target.coefficients
    f = float(np.vdot(c, rho.entries @ c).real)
    return min(1.0, max(0.0, f))


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2) computed on the Hermitized matrix."""
    h = rho.hermitized()
    return float(np.sum(np.abs(h) ** 2))
