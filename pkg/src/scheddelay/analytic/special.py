"""Special functions for the interference functional of a Poisson field.

The meta distribution of the conditional success probability involves the
Gauss hypergeometric function ``2F1(k, k - delta; k - delta + 1; -theta)``
for every term ``k`` of a binomial series in the complex exponent ``j*omega``.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")


def hyp2f1_kernel(k: int, delta: float, theta: float) -> float:
    """Evaluate ``2F1(k, k - delta; k - delta + 1; -theta)``.

    Uses the Euler integral, which for these parameters collapses to

        (k - delta) * int_0^1 t**(k - delta - 1) * (1 + theta*t)**(-k) dt

    The algebraic endpoint singularity at ``t = 0`` (present for ``k = 1``) is
    handled by QUADPACK's QAWS weight, so the relative error stays near 1e-12.
    """
    _check_delta(delta)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if theta == 0:
        return 1.0
    b = k - delta
    with warnings.catch_warnings():
        # for large k*theta QUADPACK flags roundoff at this tolerance even
        # though the value still agrees with high-precision references
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(
            lambda t: (1.0 + theta * t) ** (-k),
            0.0,
            1.0,
            weight="alg",
            wvar=(b - 1.0, 0.0),
            epsabs=0.0,
            epsrel=1e-12,
            limit=200,
        )
    return b * val


def z_kernel(k: int, delta: float, theta: float) -> float:
    """Signed series coefficient ``(-1)**(k+1) theta**k / (k - delta) * 2F1(...)``."""
    sign = 1.0 if k % 2 == 1 else -1.0
    return sign * theta**k / (k - delta) * hyp2f1_kernel(k, delta, theta)


def z_kernels(k_max: int, delta: float, theta: float) -> np.ndarray:
    """``z_kernel`` for ``k = 1 .. k_max`` as an array (index 0 is ``k = 1``)."""
    return np.array([z_kernel(k, delta, theta) for k in range(1, k_max + 1)])


def complex_binomial(z: complex, k: int) -> complex:
    """Generalized binomial coefficient ``z (z-1) ... (z-k+1) / k!``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    out = complex(1.0)
    for i in range(k):
        out *= (z - i) / (i + 1)
    return out


def complex_binomials(z, k_max: int) -> np.ndarray:
    """All coefficients ``binom(z, k)`` for ``k = 1 .. k_max``.

    ``z`` may be an array; the result has shape ``z.shape + (k_max,)``.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape + (k_max,), dtype=complex)
    c = np.ones_like(z)
    for i in range(k_max):
        c = c * (z - i) / (i + 1)
        out[..., i] = c
    return out


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)

