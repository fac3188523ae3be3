"""Constrained fractional-part networks.

A network in dimension ``d`` with ``m`` neurons per input coordinate is

    f(x) = sum_j sum_i coeff[i, j] * frac(beta[i, j] / x[j]),   x in (0, 1)^d

with every ``beta`` entry in (0, 1) and the flattened orthogonality constraint
``sum_ij coeff[i, j] * beta[i, j] == 0``.  Under that constraint the linear
parts ``coeff * beta / x`` cancel and ``f`` is the integer-valued step function
``-sum_ij coeff[i, j] * floor(beta[i, j] / x[j])``.

Arrays are stored ``m x d``; flattening is column-major (dimension-major), so
the flat vector reads ``c[0,0], c[1,0], ..., c[m-1,0], c[0,1], ...``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConstraintViolation, DomainError, ShapeError

__all__ = [
    "BETA_MIN",
    "FracNet",
    "Breakpoints",
    "frac",
    "make_net",
    "project_constraint",
    "evaluate",
    "evaluate_step_form",
    "linear_part",
    "column_residuals",
    "breakpoints",
    "frac_quotient",
    "flatten",
    "unflatten",
    "net_to_dict",
    "net_from_dict",
    "save_net",
    "load_net",
    "net_hash",
    "example_net",
]

# beta entries closer than this to 0 or 1 are rejected
BETA_MIN = 1e-9


def frac(x):
    """Fractional part ``x - floor(x)``, always in [0, 1)."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x)
    # x - floor(x) rounds to 1.0 for tiny negative x
    r = np.where(r >= 1.0, 0.0, r)
    return r if r.ndim else float(r)


def frac_quotient(beta, x):
    """``(floor(beta/x), frac(beta/x))`` computed without rounding the quotient.

    ``fmod`` is exact in IEEE arithmetic, so the integer part is the true
    quotient and the fractional part carries a single rounding.
    """
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    rem = np.fmod(beta, x)
    k = np.rint((beta - rem) / x)
    return k, rem / x


def flatten(a: np.ndarray) -> np.ndarray:
    """Column-major flattening of an ``m x d`` array."""
    return np.asarray(a, dtype=float).ravel(order="F")


def unflatten(v, m: int, d: int) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape((m, d), order="F")


@dataclass(frozen=True)
class FracNet:
    """Validated, immutable network ``(d, m, beta, coeff)``.

    Build instances through :func:`make_net`; the constructor re-checks all
    invariants so that direct construction cannot bypass them.
    """

    d: int
    m: int
    beta: np.ndarray
    coeff: np.ndarray
    constraint_tol: float = 1e-12

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float, copy=True)
        coeff = np.array(self.coeff, dtype=float, copy=True)
        if self.d < 1 or self.m < 1:
            raise ShapeError("d and m must be >= 1")
        if beta.shape != (self.m, self.d) or coeff.shape != (self.m, self.d):
            raise ShapeError(
                f"beta and coeff must be {self.m}x{self.d}, got {beta.shape} and {coeff.shape}"
            )
        if not np.all(np.isfinite(beta)) or not np.all(np.isfinite(coeff)):
            raise DomainError("beta and coeff must be finite")
        if np.any(beta < BETA_MIN) or np.any(beta > 1.0 - BETA_MIN):
            raise DomainError(f"beta entries must lie in [{BETA_MIN:g}, 1 - {BETA_MIN:g}]")
        dot = float(np.dot(flatten(coeff), flatten(beta)))
        if abs(dot) > self.constraint_tol:
            raise ConstraintViolation(
                f"|c . beta| = {abs(dot):.3e} exceeds tolerance {self.constraint_tol:g}"
            )
        beta.flags.writeable = False
        coeff.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "coeff", coeff)

    @property
    def c_l1(self) -> float:
        """l1 norm over all ``m * d`` coefficients."""
        return float(np.abs(self.coeff).sum())

    def __call__(self, x):
        return evaluate(self, x)

    def __eq__(self, other):
        if not isinstance(other, FracNet):
            return NotImplemented
        return (
            self.d == other.d
            and self.m == other.m
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.coeff, other.coeff)
        )

    def __hash__(self):
        return hash(net_hash(self))


@dataclass(frozen=True)
class Breakpoints:
    points: np.ndarray
    xmin: float

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points.tolist())


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    elif a.ndim != 2:
        raise ShapeError(f"{name} must be at most 2-dimensional")
    return a


def make_net(d: int, m: int, beta, coeff, constraint_tol: float = 1e-12) -> FracNet:
    """Validate parameters and build a :class:`FracNet`.

    1-d ``beta`` / ``coeff`` are read as a single column (``d = 1``).

    >>> net = make_net(1, 3, [0.7, 0.3, 0.1], [1, -1, -4])
    >>> net.c_l1
    6.0
    """
    beta = _as_matrix(beta, "beta")
    coeff = _as_matrix(coeff, "coeff")
    return FracNet(int(d), int(m), beta, coeff, constraint_tol)


def project_constraint(coeff, beta) -> np.ndarray:
    """Orthogonal projection of ``coeff`` onto ``{c : c . beta = 0}``.

    Works on flattened vectors; the result has the shape of ``coeff``.
    """
    coeff = np.asarray(coeff, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if coeff.shape != beta.shape:
        raise ShapeError("coeff and beta must have the same shape")
    shape = coeff.shape
    c = coeff.reshape(-1, order="F")
    b = beta.reshape(-1, order="F")
    out = c - (np.dot(c, b) / np.dot(b, b)) * b
    # one refinement sweep removes most of the residual rounding
    out = out - (np.dot(out, b) / np.dot(b, b)) * b
    return out.reshape(shape, order="F")


def _points(net: FracNet, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and net.d > 1)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        # for d = 1 a flat array is a batch of scalar points
        x = x.reshape(-1, 1) if net.d == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != net.d:
        raise ShapeError(f"points must have {net.d} coordinate(s), got shape {x.shape}")
    if not np.all((x > 0.0) & (x < 1.0)):
        raise DomainError("every coordinate must lie in the open interval (0, 1)")
    return x, single


def evaluate(net: FracNet, x):
    """Network value at one point (shape ``(d,)``) or a batch (shape ``(n, d)``).

    For ``d = 1`` a scalar is a single point and a flat array is a batch.
    """
    pts, single = _points(net, x)
    # (n, 1, d) against (m, d)
    _, r = frac_quotient(net.beta[None, :, :], pts[:, None, :])
    vals = np.einsum("nij,ij->n", r, net.coeff)
    return float(vals[0]) if single else vals


def evaluate_step_form(net: FracNet, x):
    """``-sum coeff * floor(beta / x)``.

    This equals :func:`evaluate` whenever the linear parts cancel, which the
    flattened constraint guarantees for ``d = 1``.  For ``d > 1`` the two
    differ by :func:`linear_part` unless every column satisfies its own
    constraint ``coeff[:, j] . beta[:, j] = 0``.
    """
    pts, single = _points(net, x)
    k, _ = frac_quotient(net.beta[None, :, :], pts[:, None, :])
    vals = -np.einsum("nij,ij->n", k, net.coeff)
    vals = vals + 0.0  # normalise -0.0
    return float(vals[0]) if single else vals


def linear_part(net: FracNet, x):
    """``sum_j (coeff[:, j] . beta[:, j]) / x[j]``, so that ``evaluate = step form + linear part``."""
    pts, single = _points(net, x)
    col = np.einsum("ij,ij->j", net.coeff, net.beta)
    vals = (col[None, :] / pts).sum(axis=1)
    return float(vals[0]) if single else vals


def column_residuals(net: FracNet) -> np.ndarray:
    """Per-coordinate constraint residuals ``coeff[:, j] . beta[:, j]``."""
    return np.einsum("ij,ij->j", net.coeff, net.beta)


def breakpoints(net: FracNet, dim: int = 0, xmin: float = 0.01) -> Breakpoints:
    """Jump locations ``beta[i, dim] / k`` inside the open interval ``(xmin, 1)``.

    The full set accumulates at 0, hence the explicit lower cut.
    """
    if not 0.0 < xmin < 1.0:
        raise DomainError("xmin must lie in (0, 1)")
    if not 0 <= dim < net.d:
        raise DomainError(f"dim must be in [0, {net.d})")
    pts = []
    for b in net.beta[:, dim]:
        kmax = int(np.ceil(b / xmin))
        ks = np.arange(1, kmax + 1)
        cand = b / ks
        pts.append(cand[(cand > xmin) & (cand < 1.0)])
    allpts = np.unique(np.concatenate(pts)) if pts else np.empty(0)
    return Breakpoints(allpts, float(xmin))


def net_to_dict(net: FracNet) -> dict:
    return {
        "d": net.d,
        "m": net.m,
        "beta": net.beta.tolist(),
        "coeff": net.coeff.tolist(),
    }


def net_from_dict(data: dict, constraint_tol: float = 1e-12) -> FracNet:
    try:
        d = int(data["d"])
        m = int(data["m"])
        beta = np.array(data["beta"], dtype=float)
        coeff = np.array(data["coeff"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed network record: {exc}") from exc
    return FracNet(d, m, beta, coeff, constraint_tol)


def net_hash(net: FracNet) -> str:
    """sha256 of the canonical JSON form (sorted keys, shortest round-trip floats)."""
    blob = json.dumps(net_to_dict(net), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def save_net(net: FracNet, path) -> None:
    Path(path).write_text(json.dumps(net_to_dict(net), indent=2) + "\n")


def load_net(path) -> FracNet:
    data = json.loads(Path(path).read_text())
    if "net" in data and isinstance(data["net"], dict):
        data = data["net"]
    return net_from_dict(data)


def example_net() -> FracNet:
    """``rho(0.7/x) - rho(0.3/x) - 4 rho(0.1/x)``, a member of the d = 1 class."""
    return make_net(1, 3, [0.7, 0.3, 0.1], [1.0, -1.0, -4.0])
