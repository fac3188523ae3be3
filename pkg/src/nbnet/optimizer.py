"""Least-squares fit of network coefficients to the constant function 1.

For fixed ``beta`` the squared distance ``||1 - f||_2^2`` over ``(0,1)^d`` is
a quadratic form in the flattened coefficients.  Each coordinate contributes
a block ``f_j(x_j) = sum_i c[i,j] frac(beta[i,j]/x_j)``; cross terms between
different coordinates factor under the product measure, which gives

    ||1 - f||^2 = 1 - 2 S + sum_j (c_j' G_j c_j - m_j^2) + S^2,
    m_j = c_j' b_j,   S = sum_j m_j,

with per-coordinate Gram matrices ``G_j[i,k] = int_0^1 frac(b_i/x) frac(b_k/x) dx``
and moment vectors ``b_j[i] = int_0^1 frac(b_i/x) dx``.  Minimising under
``c . beta = 0`` is an equality-constrained QP solved through its KKT system.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import DomainError, ShapeError, SingularSystemError, ToleranceError
from .mellin import mellin_rho
from .network import BETA_MIN, FracNet, flatten, frac_quotient, make_net, project_constraint, unflatten
from .sampling import map_chunks

__all__ = [
    "GramSystem",
    "FitResult",
    "beta_schedule",
    "assemble_gram",
    "gram_entry_cells",
    "quadratic_parts",
    "objective",
    "objective_from_coeff",
    "fit_coefficients",
    "fit_result_to_dict",
]

COND_LIMIT = 1e12
RIDGE_STEPS = (1e-12, 1e-10, 1e-8)
MAX_CELLS = 8_000_000
_CELL_BLOCK = 200_000
_RATIONAL_DENOM = 10_000


@dataclass(frozen=True)
class GramSystem:
    """Per-coordinate Gram matrices and moment vectors for a fixed ``beta``."""

    G: tuple
    b: tuple
    method: str
    est_entry_err: float

    @property
    def d(self) -> int:
        return len(self.G)

    @property
    def m(self) -> int:
        return self.G[0].shape[0]


@dataclass(frozen=True)
class FitResult:
    coeff: np.ndarray
    lagrange: float
    delta_sq: float
    cond_estimate: float
    ridge_used: float

    def net(self, beta) -> FracNet:
        m, d = self.coeff.shape
        return make_net(d, m, beta, self.coeff, constraint_tol=1e-10)


# --------------------------------------------------------------------------
# beta schedules


def beta_schedule(kind: str, m: int, d: int = 1, seed: int | None = None, path=None) -> np.ndarray:
    """``m x d`` matrix of inner parameters.

    ``harmonic``: ``1/(k+1)`` for ``k = 1..m`` in every column.
    ``random``: i.i.d. uniform on ``[1e-3, 1 - 1e-3]`` from ``seed``.
    ``file``: JSON list (flat for ``d = 1`` or nested ``m x d``), or an object
    with a ``"beta"`` key.
    """
    if m < 1 or d < 1:
        raise DomainError("m and d must be >= 1")
    if kind == "harmonic":
        col = 1.0 / (np.arange(1, m + 1) + 1.0)
        return np.tile(col[:, None], (1, d))
    if kind == "random":
        rng = np.random.default_rng(seed)
        return rng.uniform(1e-3, 1.0 - 1e-3, size=(m, d))
    if kind == "file":
        if path is None:
            raise DomainError("the file schedule needs a path")
        data = json.loads(Path(path).read_text())
        if isinstance(data, dict):
            data = data.get("beta")
        try:
            beta = np.array(data, dtype=float)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"unreadable beta file: {exc}") from exc
        if beta.ndim == 1:
            beta = beta[:, None]
        if beta.shape != (m, d):
            raise DomainError(f"beta file has shape {beta.shape}, expected {(m, d)}")
        if not np.all(np.isfinite(beta)) or np.any(beta < BETA_MIN) or np.any(beta > 1 - BETA_MIN):
            raise DomainError("beta file entries must lie in (0, 1)")
        return beta
    raise DomainError(f"unknown beta schedule {kind!r}")


# --------------------------------------------------------------------------
# Gram assembly by exact cellwise integration


def _series_a1(x: np.ndarray, u0: np.ndarray) -> np.ndarray:
    # int_{u0}^{u0(1+x)} (u-u0)/u^2 du = log1p(x) - x/(1+x)
    direct = np.log1p(x) - x / (1.0 + x)
    small = x < 1e-3
    if np.any(small):
        xs = x[small]
        s = np.zeros_like(xs)
        p = xs * xs
        for n in range(2, 9):
            s += (-1) ** n * (n - 1) / n * p
            p = p * xs
        direct[small] = s
    return direct


def _series_a2(x: np.ndarray, u0: np.ndarray) -> np.ndarray:
    # int_{u0}^{u0(1+x)} (u-u0)^2/u^2 du = u0 (x - 2 log1p(x) + x/(1+x))
    direct = u0 * (x - 2.0 * np.log1p(x) + x / (1.0 + x))
    small = x < 1e-2
    if np.any(small):
        xs = x[small]
        s = np.zeros_like(xs)
        p = xs**3
        for n in range(3, 12):
            s += (-1) ** (n + 1) * (n - 2) / n * p
            p = p * xs
        direct[small] = u0[small] * s
    return direct


def _cell_block(beta: np.ndarray, u_lo: float, u_hi: float) -> tuple[np.ndarray, float]:
    """Exact ``int_{u_lo}^{u_hi} frac(b_i u) frac(b_k u) u^-2 du`` for all pairs."""
    cuts = [np.array([u_lo, u_hi])]
    for bi in beta:
        j0 = math.floor(bi * u_lo) + 1
        j1 = math.ceil(bi * u_hi) - 1
        if j1 >= j0:
            cuts.append(np.arange(j0, j1 + 1) / bi)
    pts = np.unique(np.concatenate(cuts))
    pts = pts[(pts >= u_lo) & (pts <= u_hi)]
    u0, u1 = pts[:-1], pts[1:]
    keep = u1 > u0
    u0, u1 = u0[keep], u1[keep]
    mid = 0.5 * (u0 + u1)
    k = np.floor(beta[None, :] * mid[:, None])
    r = beta[None, :] * u0[:, None] - k  # frac(b u) at the left end of each cell
    du = u1 - u0
    x = du / u0
    a0 = du / (u0 * u1)
    a1 = _series_a1(x, u0)
    a2 = _series_a2(x, u0)
    ra1 = r.T @ a1
    gram = (r * a0[:, None]).T @ r + np.outer(ra1, beta) + np.outer(beta, ra1)
    gram += np.outer(beta, beta) * math.fsum(a2.tolist())
    return gram, float(u0.size)


def _pair_tail(bi: float, bk: float, big_u: float) -> tuple[float, float]:
    """Mean-value tail ``int_U^inf frac(bi u) frac(bk u) u^-2 du`` and its error.

    For ``bi/bk = p/q`` in lowest terms the product is periodic with period
    ``p/bi`` and mean ``1/4 + 1/(12 p q)``; deviations from the mean integrate
    to at most ``period / U^2``.  Ratios without a small rational form are
    treated as incommensurate (mean 1/4) with an estimated error.
    """
    ratio = bi / bk
    frac_ = Fraction(ratio).limit_denominator(_RATIONAL_DENOM)
    p, q = frac_.numerator, frac_.denominator
    if abs(p / q - ratio) <= 1e-12 * ratio:
        period = p / bi
        mean = 0.25 + 1.0 / (12.0 * p * q)
        return mean / big_u, period / big_u**2
    period = 1.0 / min(bi, bk)
    return 0.25 / big_u, (1.0 + math.log(big_u)) * period / big_u**2


def gram_entry_cells(beta, big_u: float) -> np.ndarray:
    """Gram matrix truncated at ``u = U`` (i.e. ``x >= 1/U``), without the tail."""
    beta = np.asarray(beta, dtype=float)
    n_cells_est = float(beta.sum()) * big_u
    n_blocks = max(1, math.ceil(n_cells_est / _CELL_BLOCK))
    # cells have uniform density in u, so equal-width blocks hold equal counts
    edges = np.linspace(1.0, big_u, n_blocks + 1)
    total = np.zeros((beta.size, beta.size))
    parts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        g, _ = _cell_block(beta, float(lo), float(hi))
        parts.append(g)
    # deterministic summation order
    for g in parts:
        total += g
    return total


def _quadrature_gram(beta: np.ndarray, tol: float, max_cells: int) -> tuple[np.ndarray, np.ndarray, float]:
    m = beta.size
    periods = np.zeros((m, m))
    for i in range(m):
        for k in range(m):
            periods[i, k] = _pair_tail(beta[i], beta[k], 1.0)[1]
    # the tail error scales like period / U^2
    big_u = max(64.0, math.sqrt(periods.max() / tol))
    while True:
        if float(beta.sum()) * big_u > max_cells:
            raise ToleranceError(
                f"Gram entries need U = {big_u:.3g} (about {beta.sum() * big_u:.3g} cells) "
                f"for tol {tol:g}; the cell budget is {max_cells}"
            )
        errs = np.array([[_pair_tail(beta[i], beta[k], big_u)[1] for k in range(m)] for i in range(m)])
        if errs.max() <= tol:
            break
        big_u *= 2.0
    gram = gram_entry_cells(beta, big_u)
    tails = np.array([[_pair_tail(beta[i], beta[k], big_u)[0] for k in range(m)] for i in range(m)])
    gram = gram + tails
    gram = 0.5 * (gram + gram.T)
    b = np.empty(m)
    b_err = 0.0
    for i in range(m):
        res = mellin_rho(beta[i], 1.0, tol)
        b[i] = res.value.real
        b_err = max(b_err, res.err_bound)
    return gram, b, max(float(errs.max()), b_err)


def _mc_gram(beta: np.ndarray, n_samples: int, seed: int, workers: int) -> tuple[np.ndarray, np.ndarray, float]:
    m = beta.size

    def chunk(pts: np.ndarray):
        _, feats = frac_quotient(beta[None, :], pts[:, :1])
        outer = feats[:, :, None] * feats[:, None, :]
        return feats.sum(0), (feats**2).sum(0), outer.sum(0), (outer**2).sum(0)

    parts = map_chunks(chunk, seed, n_samples, 1, workers)
    s1 = np.sum([p[0] for p in parts], axis=0)
    s1sq = np.sum([p[1] for p in parts], axis=0)
    s2 = np.sum([p[2] for p in parts], axis=0)
    s2sq = np.sum([p[3] for p in parts], axis=0)
    n = float(n_samples)
    b = s1 / n
    gram = s2 / n
    var_b = np.maximum(s1sq / n - b**2, 0.0)
    var_g = np.maximum(s2sq / n - gram**2, 0.0)
    se = math.sqrt(max(var_b.max(), var_g.max()) / n)
    gram = 0.5 * (gram + gram.T)
    return gram, b, se


def assemble_gram(
    beta,
    method: str = "quadrature",
    tol: float = 1e-9,
    *,
    n_samples: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
    max_cells: int = MAX_CELLS,
) -> GramSystem:
    """Gram matrices and moment vectors for every coordinate of ``beta``.

    ``quadrature`` integrates exactly on each cell between consecutive
    breakpoints in ``u = 1/x`` up to a cut ``U`` and adds the mean-value tail
    beyond it; ``est_entry_err`` is the largest tail error estimate.
    ``monte_carlo`` averages neuron products over ``n_samples`` uniform points
    and reports the largest standard error.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 1:
        beta = beta[:, None]
    if beta.ndim != 2:
        raise ShapeError("beta must be an m x d matrix")
    if np.any(beta < BETA_MIN) or np.any(beta > 1 - BETA_MIN):
        raise DomainError("beta entries must lie in (0, 1)")
    if not tol > 0:
        raise DomainError("tol must be positive")
    cache: dict[bytes, tuple] = {}
    gs, bs, err = [], [], 0.0
    for j in range(beta.shape[1]):
        col = np.ascontiguousarray(beta[:, j])
        key = col.tobytes()
        if key not in cache:
            if method == "quadrature":
                cache[key] = _quadrature_gram(col, tol, max_cells)
            elif method == "monte_carlo":
                cache[key] = _mc_gram(col, n_samples, seed, workers)
            else:
                raise DomainError(f"unknown Gram method {method!r}")
        g, b, e = cache[key]
        gs.append(g.copy())
        bs.append(b.copy())
        err = max(err, e)
    return GramSystem(tuple(gs), tuple(bs), method, err)


# --------------------------------------------------------------------------
# objective and KKT solve


def quadratic_parts(gram: GramSystem) -> tuple[np.ndarray, np.ndarray]:
    """``(Q, q)`` with ``||1 - f||^2 = 1 - 2 q.c + c' Q c`` for flattened ``c``.

    ``Q = blockdiag(G_j - b_j b_j') + b b'`` with ``b`` the stacked moments.
    """
    blocks = [g - np.outer(b, b) for g, b in zip(gram.G, gram.b)]
    q = np.concatenate(gram.b)
    big_q = scipy.linalg.block_diag(*blocks) + np.outer(q, q)
    return 0.5 * (big_q + big_q.T), q


def objective_from_coeff(coeff, gram: GramSystem) -> float:
    """Objective for an ``m x d`` coefficient matrix or its flattened vector."""
    coeff = np.asarray(coeff, dtype=float)
    c = coeff if coeff.ndim == 1 else flatten(coeff)
    big_q, q = quadratic_parts(gram)
    if c.size != q.size:
        raise ShapeError(f"coefficient vector has {c.size} entries, Gram expects {q.size}")
    return float(1.0 - 2.0 * q @ c + c @ big_q @ c)


def objective(net: FracNet, gram: GramSystem) -> float:
    """``||1 - f||_2^2`` over ``(0,1)^d`` from the assembled Gram system."""
    if (net.m, net.d) != (gram.m, gram.d):
        raise ShapeError(f"net is {net.m}x{net.d} but Gram system is {gram.m}x{gram.d}")
    return objective_from_coeff(net.coeff, gram)


def _kkt(big_q: np.ndarray, beta_flat: np.ndarray, ridge: float) -> np.ndarray:
    n = beta_flat.size
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = 2.0 * (big_q + ridge * np.eye(n))
    kkt[:n, n] = beta_flat
    kkt[n, :n] = beta_flat
    return kkt


def fit_coefficients(beta, gram: GramSystem, refine_steps: int = 3) -> FitResult:
    """Minimise ``||1 - f||^2`` subject to ``c . beta = 0`` for fixed ``beta``.

    Solves ``[2Q, beta; beta', 0] [c; lam] = [2q; 0]`` with a symmetric
    indefinite factorisation.  When the condition number exceeds 1e12 a ridge
    from (1e-12, 1e-10, 1e-8) is added to ``Q``; the ridged factorisation is
    then used to iteratively refine against the unregularised system.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 1:
        beta = beta[:, None]
    if beta.shape != (gram.m, gram.d):
        raise ShapeError(f"beta is {beta.shape}, Gram system is {(gram.m, gram.d)}")
    for j in range(beta.shape[1]):
        if np.unique(beta[:, j]).size < beta.shape[0]:
            warnings.warn("duplicate beta entries make the Gram matrix rank deficient", stacklevel=2)
            break
    big_q, q = quadratic_parts(gram)
    bflat = flatten(beta)
    n = bflat.size
    rhs = np.concatenate([2.0 * q, [0.0]])
    exact = _kkt(big_q, bflat, 0.0)

    ridge = 0.0
    kkt = exact
    cond = float(np.linalg.cond(kkt))
    if not cond <= COND_LIMIT:
        for ridge in RIDGE_STEPS:
            kkt = _kkt(big_q, bflat, ridge)
            cond = float(np.linalg.cond(kkt))
            if cond <= COND_LIMIT:
                break
        else:
            raise SingularSystemError(
                f"KKT condition number {cond:.3e} exceeds {COND_LIMIT:g} even with ridge {ridge:g}"
            )
    try:
        lu = scipy.linalg.lu_factor(kkt) if ridge else None
        sol = scipy.linalg.solve(kkt, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(str(exc)) from exc

    def value(s):
        c = project_constraint(s[:n], bflat)
        return float(1.0 - 2.0 * q @ c + c @ big_q @ c)

    best = value(sol)
    if ridge:
        cur = sol
        for _ in range(refine_steps):
            cand = cur + scipy.linalg.lu_solve(lu, rhs - exact @ cur)
            v = value(cand)
            if not v < best:
                break
            cur, best = cand, v
        sol = cur
    if not np.all(np.isfinite(sol)):
        raise SingularSystemError("KKT solve produced non-finite values")
    c = project_constraint(sol[:n], bflat)
    return FitResult(
        coeff=unflatten(c, gram.m, gram.d),
        lagrange=float(sol[n]),
        delta_sq=best,
        cond_estimate=cond,
        ridge_used=ridge,
    )


def fit_result_to_dict(res: FitResult) -> dict:
    return {
        "delta_sq": res.delta_sq,
        "lagrange": res.lagrange,
        "cond_estimate": res.cond_estimate,
        "ridge_used": res.ridge_used,
    }
