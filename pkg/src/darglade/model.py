"""DAR(1) parameters, innovation laws, path simulation and residuals.

The model is ``y_t = phi*y_{t-1} + eta_t*sqrt(omega + alpha*y_{t-1}**2)`` with
i.i.d. symmetric innovations normalised to ``E|eta| = 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numba
import numpy as np

from darglade.numerics import (
    RngStream,
    SignedLog,
    decode_array,
    encode_array,
    integrate_against,
)


@dataclass(frozen=True)
class DarParams:
    phi: float
    alpha: float
    omega: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.alpha, self.omega])


# ---------------------------------------------------------------------------
# innovation laws
# ---------------------------------------------------------------------------


class InnovationKind(str, enum.Enum):
    NORMAL = "normal"
    LAPLACE = "laplace"
    STD_T3 = "st3"


# scale turning a Student t(3) draw into one with E|eta| = 1
_T3_SCALE = math.pi / (2.0 * math.sqrt(3.0))


def _normal_pdf(x: float) -> float:
    return math.exp(-x * x / math.pi) / math.pi


def _laplace_pdf(x: float) -> float:
    return 0.5 * math.exp(-abs(x))


def _st3_pdf(x: float) -> float:
    d = math.pi**2 + 4.0 * x * x
    return 4.0 * math.pi**2 / (d * d)


def _normal_draw(gen: np.random.Generator, size):
    return gen.normal(0.0, math.sqrt(math.pi / 2.0), size)


def _laplace_draw(gen: np.random.Generator, size):
    return gen.laplace(0.0, 1.0, size)


def _st3_draw(gen: np.random.Generator, size):
    return _T3_SCALE * gen.standard_t(3.0, size)


@dataclass(frozen=True)
class InnovationSpec:
    """One of the three innovation laws used in the simulation designs.

    ``density`` takes a scalar, ``sampler(gen, size)`` returns draws.
    ``f0`` is the density at zero and ``kappa_eta`` the second moment.
    """

    kind: InnovationKind
    density: Callable[[float], float]
    sampler: Callable[[np.random.Generator, object], np.ndarray]
    f0: float
    kappa_eta: float
    abs_first_moment: float

    @property
    def name(self) -> str:
        return self.kind.value


_LAWS = {
    InnovationKind.NORMAL: (_normal_pdf, _normal_draw, math.pi / 2.0),
    InnovationKind.LAPLACE: (_laplace_pdf, _laplace_draw, 2.0),
    InnovationKind.STD_T3: (_st3_pdf, _st3_draw, math.pi**2 / 4.0),
}

_ALIASES = {
    "normal": InnovationKind.NORMAL,
    "n": InnovationKind.NORMAL,
    "normalpihalf": InnovationKind.NORMAL,
    "laplace": InnovationKind.LAPLACE,
    "l": InnovationKind.LAPLACE,
    "st3": InnovationKind.STD_T3,
    "t": InnovationKind.STD_T3,
    "stdt3": InnovationKind.STD_T3,
    "t3": InnovationKind.STD_T3,
}


@lru_cache(maxsize=None)
def _build_spec(kind: InnovationKind) -> InnovationSpec:
    pdf, draw, kappa = _LAWS[kind]
    abs_moment = integrate_against(pdf, abs, (0.0,), 1e-10)
    if abs(abs_moment - 1.0) > 1e-8:
        raise AssertionError(f"{kind}: E|eta| = {abs_moment}, expected 1")
    return InnovationSpec(kind, pdf, draw, pdf(0.0), kappa, abs_moment)


def get_innovation(kind: str | InnovationKind) -> InnovationSpec:
    """Look up an innovation law by kind or alias (``"normal"``, ``"laplace"``, ``"st3"``)."""
    if not isinstance(kind, InnovationKind):
        key = str(kind).lower().replace("_", "").replace("-", "")
        if key not in _ALIASES:
            raise ValueError(f"unknown innovation law {kind!r}")
        kind = _ALIASES[key]
    return _build_spec(kind)


def density_at(spec: InnovationSpec, x: float) -> float:
    return spec.density(x)


def sample_innovation(spec: InnovationSpec, stream: RngStream) -> float:
    return float(spec.sampler(stream.gen, None))


def draw_innovations(spec: InnovationSpec, stream: RngStream, size: int) -> np.ndarray:
    return np.asarray(spec.sampler(stream.gen, size), dtype=float)


# ---------------------------------------------------------------------------
# series
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SignedLogSeries:
    """Observations ``y_0 .. y_n`` held as sign and log-magnitude arrays."""

    sign: np.ndarray
    logmag: np.ndarray

    def __post_init__(self):
        sign = np.asarray(self.sign, dtype=np.int8)
        logmag = np.asarray(self.logmag, dtype=float)
        if sign.shape != logmag.shape or sign.ndim != 1:
            raise ValueError("sign and logmag must be 1-d arrays of equal length")
        if np.any((sign == 0) != np.isneginf(logmag)):
            raise ValueError("zero sign must pair with -inf log-magnitude")
        sign.flags.writeable = False
        logmag.flags.writeable = False
        object.__setattr__(self, "sign", sign)
        object.__setattr__(self, "logmag", logmag)

    @classmethod
    def from_values(cls, values) -> "SignedLogSeries":
        return cls(*encode_array(values))

    @property
    def n(self) -> int:
        return len(self.sign) - 1

    def __len__(self):
        return len(self.sign)

    def __getitem__(self, t: int) -> SignedLog:
        return SignedLog(int(self.sign[t]), float(self.logmag[t]))

    def to_values(self) -> np.ndarray:
        """Decode to floats; raises :class:`SignedLogOverflow` for explosive paths."""
        return decode_array(self.sign, self.logmag)

    def __neg__(self) -> "SignedLogSeries":
        return SignedLogSeries(-self.sign, self.logmag)

    def scaled(self, c: float) -> "SignedLogSeries":
        """The series multiplied by ``c > 0``."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return SignedLogSeries(self.sign, self.logmag + math.log(c))

    def lagged_design(self):
        """Per-step arrays ``(a, b, u, m2)`` used by every likelihood.

        With ``m = max(logmag(y_{t-1}), 0)`` they satisfy ``y_{t-1} = e^m a``,
        ``y_t = e^m b``, ``u = e^{-2m}`` and ``m2 = 2m``, so that
        ``omega + alpha*y_{t-1}^2 = e^{2m} (omega*u + alpha*a^2)`` with every
        factor finite.
        """
        s_prev, l_prev = self.sign[:-1], self.logmag[:-1]
        m = np.maximum(l_prev, 0.0)
        with np.errstate(over="ignore"):
            a = s_prev * np.exp(l_prev - m)
            b = self.sign[1:] * np.exp(self.logmag[1:] - m)
        return a, b, np.exp(-2.0 * m), 2.0 * m


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _dar_recursion(phi, alpha, omega, eta, sign, logmag, y_start):
    """Run the recursion from ``y_start`` in place over ``len(eta)`` steps.

    Small values use plain arithmetic; once ``|y| >= 1`` the step is taken
    multiplicatively so the log-magnitude accumulates additively.
    """
    if y_start == 0.0:
        s, lg = 0, -np.inf
    else:
        s = 1 if y_start > 0.0 else -1
        lg = np.log(abs(y_start))
    sign[0] = s
    logmag[0] = lg
    for t in range(eta.shape[0]):
        e = eta[t]
        if lg < 0.0:
            y = s * np.exp(lg) if s != 0 else 0.0
            y_new = phi * y + e * np.sqrt(omega + alpha * y * y)
            if y_new == 0.0:
                s, lg = 0, -np.inf
            else:
                s = 1 if y_new > 0.0 else -1
                lg = np.log(abs(y_new))
        else:
            factor = phi + s * e * np.sqrt(alpha + omega * np.exp(-2.0 * lg))
            if factor == 0.0:
                s, lg = 0, -np.inf
            else:
                s = s if factor > 0.0 else -s
                lg = lg + np.log(abs(factor))
        sign[t + 1] = s
        logmag[t + 1] = lg


def simulate_from_innovations(params: DarParams, eta: np.ndarray, burn_in: int = 0,
                              y_start: float = 0.0) -> SignedLogSeries:
    """Deterministic path driven by the given innovations, started at ``y_start``.

    The first ``burn_in`` steps are discarded; the returned series has
    ``len(eta) - burn_in + 1`` entries.
    """
    eta = np.ascontiguousarray(eta, dtype=float)
    total = eta.shape[0]
    sign = np.empty(total + 1, dtype=np.int8)
    logmag = np.empty(total + 1, dtype=float)
    _dar_recursion(float(params.phi), float(params.alpha), float(params.omega), eta, sign, logmag,
                   float(y_start))
    return SignedLogSeries(sign[burn_in:], logmag[burn_in:])


def simulate(
    params: DarParams,
    spec: InnovationSpec,
    n: int,
    burn_in: int = 500,
    stream: RngStream | None = None,
    *,
    y_start: float = 0.0,
    return_innovations: bool = False,
):
    """Simulate ``y_0 .. y_n`` from ``y_start`` (default 0) after ``burn_in`` steps.

    With ``return_innovations`` the innovations driving ``y_1 .. y_n`` are
    returned as well, as ``(series, eta)``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    if stream is None:
        stream = RngStream(0, 0)
    eta = draw_innovations(spec, stream, burn_in + n)
    series = simulate_from_innovations(params, eta, burn_in, y_start)
    if return_innovations:
        return series, eta[burn_in:].copy()
    return series


def residuals(series: SignedLogSeries, theta: DarParams) -> np.ndarray:
    """Rescaled residuals ``eta_t(theta)`` for ``t = 1 .. n``.

    Evaluated on the scaled design of :meth:`SignedLogSeries.lagged_design`,
    so they stay finite on paths that overflow as plain floats.
    """
    if len(series) < 2:
        raise ValueError("series needs at least two observations")
    a, b, u, _ = series.lagged_design()
    return (b - theta.phi * a) / np.sqrt(theta.omega * u + theta.alpha * a * a)
