"""Low-level numerics: signed-log numbers, log-kernel quadrature, RNG streams.

Explosive DAR paths grow geometrically, so observations are carried as
``(sign, log|x|)`` pairs and only decoded to floats when that is safe.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from darglade.errors import NonConvergence, SignedLogOverflow

# log of the largest finite double
LOG_MAX_FLOAT = math.log(np.finfo(float).max)

DEFAULT_TOL = 1e-8


class SignedLog(NamedTuple):
    """A real number stored as ``sign * exp(logmag)``.

    Zero is ``(0, -inf)``; every other value has ``sign`` in ``{-1, +1}``.
    """

    sign: int
    logmag: float


def sl_encode(x: float) -> SignedLog:
    if not math.isfinite(x):
        raise ValueError(f"cannot encode non-finite value {x!r}")
    if x == 0.0:
        return SignedLog(0, -math.inf)
    return SignedLog(1 if x > 0 else -1, math.log(abs(x)))


def sl_decode(v: SignedLog) -> float:
    sign, logmag = v
    if sign == 0:
        return 0.0
    if logmag > LOG_MAX_FLOAT:
        raise SignedLogOverflow(f"log-magnitude {logmag} exceeds double range")
    return sign * math.exp(logmag)


def encode_array(x) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`sl_encode`; returns ``(signs, logmags)``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot encode non-finite values")
    sign = np.sign(x).astype(np.int8)
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(x))
    return sign, logmag


def decode_array(sign: np.ndarray, logmag: np.ndarray) -> np.ndarray:
    if np.any(logmag[sign != 0] > LOG_MAX_FLOAT):
        raise SignedLogOverflow("series exceeds double range")
    return sign * np.exp(logmag)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def integrate_against(
    density: Callable[[float], float],
    kernel: Callable[[float], float] | None = None,
    breakpoints: Sequence[float] = (0.0,),
    tol: float = DEFAULT_TOL,
    limit: int = 500,
) -> float:
    """Integrate ``kernel(x) * density(x)`` over the real line.

    The line is cut at ``breakpoints`` and each piece is handed to QUADPACK's
    adaptive Gauss-Kronrod routine, which copes with integrable endpoint
    singularities by extrapolation. Raises :class:`NonConvergence` when the
    combined error estimate exceeds ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if kernel is None:
        integrand = density
    else:
        def integrand(x):
            return kernel(x) * density(x)

    cuts = sorted(set(float(p) for p in breakpoints))
    edges = [-math.inf, *cuts, math.inf]
    pieces = len(edges) - 1
    total, err_total = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err, info = integrate.quad(
                integrand, lo, hi, epsabs=tol / (2 * pieces), epsrel=0.0,
                limit=limit, full_output=True,
            )[:3]
        total += val
        err_total += err
    if not math.isfinite(total) or err_total > tol:
        raise NonConvergence(
            f"quadrature error estimate {err_total:.3g} exceeds tol {tol:.3g}"
        )
    return total


def integrate_log_kernel(
    density: Callable[[float], float],
    phi: float,
    alpha: float,
    tol: float = DEFAULT_TOL,
) -> float:
    """Return the integral of ``log|phi + x*sqrt(alpha)| * density(x)``.

    The domain is split at the log singularity ``-phi/sqrt(alpha)`` and at 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    root = math.sqrt(alpha)
    singular = -phi / root

    def kernel(x):
        z = abs(phi + x * root)
        # the singular point itself has measure zero
        return math.log(z) if z > 0.0 else 0.0

    return integrate_against(density, kernel, (singular, 0.0), tol)


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

_SEED_MASK = (1 << 64) - 1


@dataclass(eq=False)
class RngStream:
    """An independent random stream keyed by ``(root_seed, stream_index)``.

    The generator is built lazily from ``numpy``'s ``SeedSequence`` spawn
    keys, so the mapping from the key to the draw sequence is pure while the
    stream object itself is stateful and meant for a single owner.
    """

    root_seed: int
    stream_index: int
    _gen: np.random.Generator | None = field(default=None, repr=False)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(
                self.root_seed & _SEED_MASK, spawn_key=(self.stream_index,)
            )
            self._gen = np.random.Generator(np.random.PCG64(seq))
        return self._gen

    def child_seed(self) -> int:
        """A 64-bit root seed for nested streams owned by this one."""
        seq = np.random.SeedSequence(
            self.root_seed & _SEED_MASK, spawn_key=(self.stream_index, 0xC0FFEE)
        )
        return int(seq.generate_state(1, np.uint64)[0])

    def __eq__(self, other):
        if not isinstance(other, RngStream):
            return NotImplemented
        return (self.root_seed, self.stream_index) == (
            other.root_seed, other.stream_index,
        )

    def __hash__(self):
        return hash((self.root_seed, self.stream_index))


def derive_stream(root_seed: int, index: int) -> RngStream:
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return RngStream(int(root_seed), int(index))
