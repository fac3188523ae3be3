"""Riemann zeta, Dirichlet eta and Gamma on the complex plane.

The continuation is built in the classical order:

* ``Re z > 0``: ``zeta(z) = eta(z) / (1 - 2**(1 - z))`` with ``eta`` summed by
  the Cohen / Rodriguez-Villegas / Zagier Chebyshev acceleration.  Near the
  points where ``2**(1 - z) == 1`` (and near the pole ``z = 1``) the quotient
  is numerically useless, so Euler-Maclaurin summation of ``zeta`` is used
  instead.
* ``Re z <= 0``: the reflection ``zeta(z) = 2**z pi**(z-1) sin(pi z/2)
  Gamma(1-z) zeta(1-z)``, with ``zeta(0) = -1/2`` as a special value.

All arithmetic is double precision.  The accuracy targets hold for
``|Im z| <= 50``; beyond that results degrade gracefully but are not
guaranteed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.special import bernoulli

from .errors import ConvergenceError, DomainError, NonFiniteError, PoleError

__all__ = [
    "ZetaEvalPolicy",
    "DEFAULT_POLICY",
    "eta",
    "zeta",
    "zeta_euler_maclaurin",
    "zeta_direct",
    "gamma",
    "sinpi",
    "functional_equation_factor",
    "functional_equation_residual",
    "eta_singular_point",
]

LN2 = math.log(2.0)
LN_PI = math.log(math.pi)
_CRVZ_BASE = 3.0 + math.sqrt(8.0)

# Lanczos approximation, g = 7, nine coefficients.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Euler-Maclaurin order (number of Bernoulli correction terms).
_EM_ORDER = 12


@dataclass(frozen=True)
class ZetaEvalPolicy:
    """Accuracy and guard settings for zeta / eta evaluation.

    ``em_switch_radius`` is the distance from an eta singular point
    ``1 + 2 pi i n / ln 2`` (or from ``z = 1``) inside which the Euler-Maclaurin
    path replaces the eta quotient.
    """

    target_abs_tol: float = 1e-10
    max_terms: int = 500
    singular_guard_radius: float = 1e-6
    em_switch_radius: float = 0.25

    def __post_init__(self):
        if not self.target_abs_tol > 0:
            raise DomainError("target_abs_tol must be positive")
        if not self.singular_guard_radius > 0:
            raise DomainError("singular_guard_radius must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1")


DEFAULT_POLICY = ZetaEvalPolicy()


def _check_finite(value: complex, what: str) -> complex:
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise NonFiniteError(f"{what} is not finite ({value!r})")
    return value


def _as_complex(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"argument must be finite, got {z!r}")
    return z


def sinpi(z: complex) -> complex:
    """sin(pi z) with exact argument reduction on the real part."""
    z = complex(z)
    n = round(z.real)
    w = complex(z.real - n, z.imag)
    s = cmath.sin(math.pi * w)
    return -s if n % 2 else s


def gamma(z) -> complex:
    """Complex Gamma function (Lanczos, g=7, with reflection for Re z < 1/2).

    Relative error is below 1e-12 for ``|z| <= 50`` away from the poles.
    """
    z = _as_complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    if z.real < 0.5:
        # Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return _check_finite(math.pi / (sinpi(z) * gamma(1.0 - z)), "gamma")
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    log_val = (z + 0.5) * cmath.log(t) - t
    return _check_finite(_SQRT_2PI * cmath.exp(log_val) * acc, "gamma")


def eta_singular_point(z: complex) -> complex:
    """Nearest point of the form ``1 + 2 pi i n / ln 2`` (n = 0 gives the pole)."""
    step = 2.0 * math.pi / LN2
    n = round(complex(z).imag / step)
    return complex(1.0, n * step)


@lru_cache(maxsize=None)
def _bernoulli_even(q: int) -> tuple:
    """(B_2/2!, B_4/4!, ..., B_2q/(2q)!) as floats."""
    b = bernoulli(2 * q)
    return tuple(float(b[2 * k]) / math.factorial(2 * k) for k in range(1, q + 1))


def _log_abs_gamma(z: complex) -> float:
    if z.real < 0.5:
        return LN_PI - math.log(abs(sinpi(z))) - _log_abs_gamma(1.0 - z)
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return ((z + 0.5) * cmath.log(t) - t).real + math.log(abs(acc) * _SQRT_2PI)


def _crvz_terms(z: complex, tol: float) -> int:
    # a_k = (k+1)^{-z} are moments of a complex measure on [0, 1] with total
    # variation Gamma(sigma) / |Gamma(z)|; the Chebyshev weights then give
    #   |err| <= 2 Gamma(sigma) / (|Gamma(z)| (3 + sqrt 8)^n).
    log_num = math.log(2.0) + math.lgamma(z.real) - _log_abs_gamma(z)
    # the 1e-3 factor keeps realised errors well inside the requested tolerance
    n = math.ceil((log_num - math.log(tol * 1e-3)) / math.log(_CRVZ_BASE))
    return max(n, 2)


def _eta_crvz(z: complex, n: int) -> complex:
    # Algorithm 1 of Cohen, Rodriguez-Villegas and Zagier applied to
    # a_k = (k + 1)^{-z}.
    d = _CRVZ_BASE**n
    d = 0.5 * (d + 1.0 / d)
    b = -1.0
    c = -d
    s = 0j
    for k in range(n):
        c = b - c
        s += c * cmath.exp(-z * math.log(k + 1))
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1))
    return s / d


def eta(z, policy: ZetaEvalPolicy = DEFAULT_POLICY) -> complex:
    """Dirichlet eta function ``sum (-1)^(n+1) n^-z`` for ``Re z > 0``."""
    z = _as_complex(z)
    if z.real <= 0.0:
        raise DomainError("eta series requires Re z > 0")
    return _eta_with_tol(z, policy.target_abs_tol, policy)


def _eta_with_tol(z: complex, tol: float, policy: ZetaEvalPolicy) -> complex:
    n = _crvz_terms(z, tol)
    if n > policy.max_terms:
        raise ConvergenceError(
            f"eta({z}) needs {n} accelerated terms, budget is {policy.max_terms}"
        )
    return _check_finite(_eta_crvz(z, n), "eta")


def zeta_euler_maclaurin(z, policy: ZetaEvalPolicy = DEFAULT_POLICY) -> complex:
    """Zeta by Euler-Maclaurin summation; valid for ``Re z > 1 - 2*order``.

    Independent of the eta path, so it doubles as a cross-check oracle.
    """
    z = _as_complex(z)
    if abs(z - 1.0) <= policy.singular_guard_radius:
        raise PoleError("zeta has a pole at z = 1")
    q = _EM_ORDER
    sigma = z.real
    if sigma <= 1 - 2 * q:
        raise DomainError(f"Euler-Maclaurin path needs Re z > {1 - 2 * q}")
    coef = _bernoulli_even(q)
    tol = policy.target_abs_tol
    big_n = max(10, int(abs(z) / 4) + 1)
    while True:
        # remainder |B_2q|/(2q)! |(z)_{2q}| N^{1 - sigma - 2q} / (sigma + 2q - 1)
        poch = 1.0
        for j in range(2 * q):
            poch *= abs(z + j)
        bound = abs(coef[-1]) * poch * big_n ** (1 - sigma - 2 * q) / (sigma + 2 * q - 1)
        if bound <= tol:
            break
        if big_n > policy.max_terms * 100:
            raise ConvergenceError(f"Euler-Maclaurin zeta({z}) did not converge")
        big_n *= 2
    log_n = math.log(big_n)
    re = []
    im = []
    for k in range(1, big_n):
        v = cmath.exp(-z * math.log(k))
        re.append(v.real)
        im.append(v.imag)
    head = complex(math.fsum(re), math.fsum(im))
    n_pow = cmath.exp(-z * log_n)  # N^{-z}
    total = head + big_n * n_pow / (z - 1.0) + 0.5 * n_pow
    poch = z  # (z)_{2k-1}
    term_pow = n_pow / big_n  # N^{-z-1}
    for k in range(1, q + 1):
        total += coef[k - 1] * poch * term_pow
        poch *= (z + 2 * k - 1) * (z + 2 * k)
        term_pow /= big_n * big_n
    return _check_finite(total, "zeta")


def zeta_direct(z, n_terms: int) -> tuple[complex, float]:
    """Partial sum of the defining Dirichlet series and its tail bound.

    Returns ``(sum_{n<=N} n^-z, N^(1-Re z)/(Re z - 1))``; only for ``Re z > 1``.
    """
    z = _as_complex(z)
    if z.real <= 1.0:
        raise DomainError("the Dirichlet series converges only for Re z > 1")
    re = []
    im = []
    for k in range(1, n_terms + 1):
        v = cmath.exp(-z * math.log(k))
        re.append(v.real)
        im.append(v.imag)
    tail = n_terms ** (1.0 - z.real) / (z.real - 1.0)
    return complex(math.fsum(re), math.fsum(im)), tail


def functional_equation_factor(z) -> complex:
    """``2**z pi**(z-1) sin(pi z / 2) Gamma(1 - z)``."""
    z = _as_complex(z)
    pref = cmath.exp(z * LN2 + (z - 1.0) * LN_PI)
    return _check_finite(pref * sinpi(0.5 * z) * gamma(1.0 - z), "functional equation factor")


def zeta(z, policy: ZetaEvalPolicy = DEFAULT_POLICY) -> complex:
    """Analytically continued Riemann zeta function."""
    z = _as_complex(z)
    if abs(z - 1.0) <= policy.singular_guard_radius:
        raise PoleError(
            f"zeta has a pole at z = 1 (|z - 1| <= {policy.singular_guard_radius:g})"
        )
    if z == 0:
        return complex(-0.5, 0.0)
    if z.real > 0.0:
        zs = eta_singular_point(z)
        if abs(z - zs) <= policy.em_switch_radius:
            return zeta_euler_maclaurin(z, policy)
        denom = 1.0 - cmath.exp((1.0 - z) * LN2)
        # eta error is divided by |denom|; tighten so zeta meets the target
        eta_tol = max(policy.target_abs_tol * min(1.0, abs(denom)), 1e-16)
        return _check_finite(_eta_with_tol(z, eta_tol, policy) / denom, "zeta")
    if abs(z) < 0.5:
        return zeta_euler_maclaurin(z, policy)
    w = 1.0 - z
    return _check_finite(functional_equation_factor(z) * zeta(w, policy), "zeta")


def functional_equation_residual(z, policy: ZetaEvalPolicy = DEFAULT_POLICY) -> float:
    """``|zeta(z) - 2^z pi^(z-1) sin(pi z/2) Gamma(1-z) zeta(1-z)|``.

    Both zeta values come from the ``Re z > 0`` paths, so for ``0 < Re z < 1``
    the two sides are computed independently.
    """
    z = _as_complex(z)
    lhs = zeta(z, policy)
    rhs = functional_equation_factor(z) * zeta(1.0 - z, policy)
    return abs(lhs - rhs)
