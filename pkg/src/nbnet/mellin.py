"""Mellin transforms of fractional-part neurons over (0, 1).

The central quantity is

    M(theta, z) = int_0^1 frac(theta / x) x^(z-1) dx,      Re z > 0,

which equals ``theta/(z-1) - theta**z zeta(z)/z``.  The left side is computed
here by quadrature only; zeta never enters, so comparing both sides is a
genuine two-route check.

Quadrature layout: on ``(theta/(k+1), theta/k)`` the neuron equals
``theta/x - k`` and the integrand is smooth, so each such panel gets an
order-16 Gauss-Legendre rule with bisection until the halves agree.  Below
``tail_cut = theta/K`` the breakpoints pile up at 0; there the integral is
evaluated analytically after substituting ``u = theta/x``: the mean value 1/2
of the neuron integrates in closed form and the oscillating remainder is
expanded with periodic Bernoulli functions (Euler-Maclaurin), which leaves a
remainder with an explicit bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

from . import zeta as _zeta
from .errors import DomainError, PoleError, ToleranceError
from .network import FracNet

__all__ = [
    "QuadResult",
    "mellin_rho",
    "identity_rhs",
    "identity_residual",
    "mellin_net",
    "mellin_net_closed_form",
    "weighted_power_norm",
    "rho_integral_at_one",
    "tail_integral",
]

GL_ORDER = 16
TAIL_ORDER = 6  # Bernoulli correction terms in the tail expansion
MIN_PANELS = 8
DEFAULT_MAX_PANELS = 400_000
POLE_GUARD = 1e-6

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


@dataclass(frozen=True)
class QuadResult:
    value: complex
    err_bound: float
    panels: int
    tail_cut: float

    def __post_init__(self):
        if not self.err_bound >= 0:
            raise ValueError("err_bound must be non-negative")


@lru_cache(maxsize=None)
def _bern_even(q: int) -> tuple:
    b = bernoulli(2 * q)
    return tuple(float(b[2 * r]) / math.factorial(2 * r) for r in range(1, q + 1))


def _poch_abs(z: complex, n: int) -> float:
    # |(z+1)(z+2)...(z+n)|
    out = 1.0
    for j in range(1, n + 1):
        out *= abs(z + j)
    return out


def _tail_bound(theta: float, z: complex, big_k: int, q: int = TAIL_ORDER) -> float:
    sigma = z.real
    coef = abs(_bern_even(q)[-1])
    return (
        theta**sigma
        * coef
        * _poch_abs(z, 2 * q - 1)
        * big_k ** (1.0 - sigma - 2 * q)
        / (sigma + 2 * q - 1)
    )


def tail_integral(theta: float, z: complex, big_k: int, q: int = TAIL_ORDER) -> tuple[complex, float]:
    """``int_0^(theta/K) frac(theta/x) x^(z-1) dx`` and its remainder bound.

    After ``u = theta/x`` the integral is ``theta**z int_K^inf frac(u) u^(-z-1) du``.
    The constant 1/2 integrates exactly; ``frac(u) - 1/2`` is handled by
    repeated integration by parts against periodic Bernoulli functions, whose
    values at the integer ``K`` are Bernoulli numbers.
    """
    z = complex(z)
    coef = _bern_even(q)
    log_k = math.log(big_k)
    k_pow = np.exp(-z * log_k)  # K^-z
    acc = k_pow / (2.0 * z)
    poch = 1.0 + 0j  # (z+1)_{2r-2}
    term = k_pow / big_k  # K^{-z-1}
    for r in range(1, q + 1):
        acc -= coef[r - 1] * poch * term
        poch *= (z + 2 * r - 1) * (z + 2 * r)
        term /= big_k * big_k
    theta_z = np.exp(z * math.log(theta))
    return complex(theta_z * acc), _tail_bound(theta, z, big_k, q)


def _gl(a: np.ndarray, b: np.ndarray, shift: np.ndarray, theta: float, z: complex) -> np.ndarray:
    # int_a^b x^(z-1) (theta/x - shift) dx on each panel, order-16 Gauss-Legendre
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    logx = np.log(x)
    xz1 = np.exp((z - 1.0) * logx)
    f = xz1 * (theta / x - shift[:, None])
    return half * (f @ _GL_W)


def _choose_k(theta: float, z: complex, tol: float, max_panels: int) -> int:
    big_k = MIN_PANELS
    while _tail_bound(theta, z, big_k) > tol:
        big_k *= 2
        if big_k > max_panels:
            raise ToleranceError(
                f"tail of M({theta}, {z}) needs more than {max_panels} panels for tol {tol:g}"
            )
    return big_k


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0, 1)")
    return theta


def mellin_rho(theta: float, z, tol: float = 1e-10, max_panels: int = DEFAULT_MAX_PANELS) -> QuadResult:
    """Quadrature for ``int_0^1 frac(theta/x) x^(z-1) dx`` with ``Re z > 0``.

    Half of ``tol`` goes to the analytic tail, half to the panels (shared in
    proportion to panel length).  ``err_bound`` adds the tail remainder bound
    and the per-panel bisection differences.
    """
    theta = _check_theta(theta)
    z = complex(z)
    if not z.real > 0.0:
        raise DomainError("the transform converges only for Re z > 0")
    if not tol > 0:
        raise DomainError("tol must be positive")

    big_k = _choose_k(theta, z, 0.5 * tol, max_panels)
    tail_val, tail_err = tail_integral(theta, z, big_k)
    tail_cut = theta / big_k

    ks = np.arange(0, big_k, dtype=float)
    # k = 0 is the panel (theta, 1) where the neuron equals theta/x
    a = np.where(ks == 0, theta, theta / (ks + 1.0))
    b = np.where(ks == 0, 1.0, theta / np.maximum(ks, 1.0))
    span = 1.0 - tail_cut
    ptol = 0.5 * tol * (b - a) / span

    done_a, done_v, done_e = [], [], []
    evaluated = 0
    while a.size:
        evaluated += a.size
        if evaluated > max_panels:
            raise ToleranceError(
                f"M({theta}, {z}) exhausted {max_panels} panels before reaching tol {tol:g}"
            )
        m = 0.5 * (a + b)
        whole = _gl(a, b, ks, theta, z)
        left = _gl(a, m, ks, theta, z)
        right = _gl(m, b, ks, theta, z)
        halves = left + right
        err = np.abs(whole - halves)
        ok = err <= ptol
        done_a.append(a[ok])
        done_v.append(halves[ok])
        done_e.append(err[ok])
        bad = ~ok
        a, m, b, ks, ptol = a[bad], m[bad], b[bad], ks[bad], ptol[bad]
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        ks = np.concatenate([ks, ks])
        ptol = np.concatenate([ptol, ptol]) * 0.5

    pos = np.concatenate(done_a)
    vals = np.concatenate(done_v)
    errs = np.concatenate(done_e)
    order = np.argsort(pos, kind="stable")
    vals = vals[order]
    re = math.fsum(vals.real.tolist() + [tail_val.real])
    im = math.fsum(vals.imag.tolist() + [tail_val.imag])
    return QuadResult(
        value=complex(re, im),
        err_bound=float(math.fsum(errs.tolist()) + tail_err),
        panels=int(vals.size),
        tail_cut=float(tail_cut),
    )


def identity_rhs(theta: float, z, policy: _zeta.ZetaEvalPolicy = _zeta.DEFAULT_POLICY) -> complex:
    """``theta/(z-1) - theta**z zeta(z)/z``."""
    theta = _check_theta(theta)
    z = complex(z)
    if abs(z - 1.0) <= POLE_GUARD:
        raise PoleError("the right-hand side has cancelling poles at z = 1; use rho_integral_at_one")
    theta_z = complex(np.exp(z * math.log(theta)))
    return theta / (z - 1.0) - theta_z * _zeta.zeta(z, policy) / z


def identity_residual(theta: float, z, tol: float = 1e-10) -> float:
    """``|M(theta, z) - (theta/(z-1) - theta**z zeta(z)/z)|``."""
    lhs = mellin_rho(theta, z, tol).value
    return abs(lhs - identity_rhs(theta, z))


def rho_integral_at_one(theta: float) -> float:
    """``int_0^1 frac(theta/x) dx = theta (1 - gamma_E - ln theta)`` (the z = 1 limit)."""
    theta = _check_theta(theta)
    return theta * (1.0 - np.euler_gamma - math.log(theta))


def mellin_net(net: FracNet, z, tol: float = 1e-10) -> QuadResult:
    """Quadrature for ``int_{(0,1)^d} f(x) prod_j x_j^(z-1) dx``.

    Each neuron depends on one coordinate, so its integral factors into a
    one-dimensional transform times ``(1/z)**(d-1)`` from the other axes.
    """
    z = complex(z)
    if not z.real > 0.0:
        raise DomainError("the transform converges only for Re z > 0")
    scale = (1.0 / z) ** (net.d - 1)
    active = [(c, b) for c, b in zip(net.coeff.ravel(order="F"), net.beta.ravel(order="F")) if c != 0.0]
    if not active:
        return QuadResult(0j, 0.0, 0, 0.5)
    l1 = sum(abs(c) for c, _ in active)
    re, im = [], []
    err = 0.0
    panels = 0
    cut = 1.0
    for c, b in active:
        share = tol / (l1 * abs(scale))
        q = mellin_rho(b, z, share)
        v = c * q.value
        re.append(v.real)
        im.append(v.imag)
        err += abs(c) * q.err_bound
        panels += q.panels
        cut = min(cut, q.tail_cut)
    value = complex(math.fsum(re), math.fsum(im)) * scale
    return QuadResult(value, err * abs(scale), panels, cut)


def mellin_net_closed_form(net: FracNet, z, policy: _zeta.ZetaEvalPolicy = _zeta.DEFAULT_POLICY) -> complex:
    """``-z**(-d) zeta(z) sum_ij coeff[i,j] beta[i,j]**z`` (valid under the constraint)."""
    z = complex(z)
    powers = np.exp(z * np.log(net.beta))
    s = complex(np.sum(net.coeff * powers))
    return -(z ** (-net.d)) * _zeta.zeta(z, policy) * s


def weighted_power_norm(z, d: int) -> float:
    """L2 norm of ``prod_j x_j^(z-1)`` over ``(0,1)^d``: ``(2 Re z - 1)^(-d/2)``."""
    z = complex(z)
    if not z.real > 0.5:
        raise DomainError("the weight is square-integrable only for Re z > 1/2")
    if d < 1:
        raise DomainError("d must be >= 1")
    return (2.0 * z.real - 1.0) ** (-0.5 * d)
