"""Zero-free regions of zeta derived from network approximations of 1.

Every region here has the parabolic form

    R(Delta) = { z : Re z > (1 + Delta |z|^2) / 2 },

and only ``Delta`` (``delta_eff``) is stored.  The three sources differ in how
``Delta`` is obtained from the approximation error:

* ``exact_d1``: ``delta**2`` for a known ``delta = ||1 - f||_2`` in one dimension;
* ``exact_dd``: ``delta**(2/d)`` for networks on ``(0,1)^d``;
* ``empirical``: ``Delta_N**(1/d)`` where ``Delta_N`` is a Monte-Carlo estimate
  of ``||1 - f||^2`` plus a Hoeffding penalty, valid with probability
  ``1 - alpha``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Optional

import numpy as np

from .errors import DomainError
from .network import FracNet, evaluate, net_hash
from .sampling import map_chunks

__all__ = [
    "ZeroFreeRegion",
    "Certificate",
    "SamplePlan",
    "RegionOrder",
    "exact_region",
    "contains",
    "boundary_polyline",
    "max_height_in_strip",
    "hoeffding_penalty",
    "monte_carlo_certificate",
    "plan_samples",
    "compare_regions",
    "certificate_to_dict",
    "certificate_from_dict",
    "polyline_to_csv",
    "FEASIBLE_SAMPLES",
]

# sample counts above this are reported as infeasible
FEASIBLE_SAMPLES = 10**15


@dataclass(frozen=True)
class ZeroFreeRegion:
    delta_eff: float
    source: str
    d: int = 1
    alpha: Optional[float] = None

    def __post_init__(self):
        if not (self.delta_eff > 0 and math.isfinite(self.delta_eff)):
            raise DomainError("delta_eff must be positive and finite")
        if self.source not in ("exact_d1", "exact_dd", "empirical"):
            raise DomainError(f"unknown region source {self.source!r}")
        if self.d < 1:
            raise DomainError("d must be >= 1")
        if self.source == "empirical":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise DomainError("empirical regions need alpha in (0, 1)")
        elif self.alpha is not None:
            raise DomainError("alpha applies only to empirical regions")

    def __contains__(self, z) -> bool:
        return contains(self, z)


@dataclass(frozen=True)
class Certificate:
    net_hash: str
    N: int
    alpha: float
    seed: int
    empirical_risk: float
    penalty: float
    delta_N: float
    region: ZeroFreeRegion
    c_l1: float


@dataclass(frozen=True)
class SamplePlan:
    """Minimum sample count for a target ``delta_eff``.

    ``n_samples`` is an exact integer (arbitrarily large); ``saturated`` is set
    when the count exceeds the representable decimal range, in which case only
    ``log10_n`` is meaningful.
    """

    n_samples: Optional[int]
    log10_n: float
    feasible: bool
    saturated: bool
    target_delta_eff: float
    d: int
    alpha: float
    c_l1: float


class RegionOrder(str, enum.Enum):
    LARGER = "larger"
    SMALLER = "smaller"
    EQUAL = "equal"


def exact_region(delta: float, d: int = 1) -> ZeroFreeRegion:
    """Region from a known ``delta = ||1 - f||_2``."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    if d < 1:
        raise DomainError("d must be >= 1")
    if d == 1:
        return ZeroFreeRegion(float(delta) ** 2, "exact_d1", 1)
    return ZeroFreeRegion(float(delta) ** (2.0 / d), "exact_dd", int(d))


def contains(region: ZeroFreeRegion, z) -> bool:
    z = complex(z)
    return z.real > 0.5 * (1.0 + region.delta_eff * abs(z) ** 2)


def boundary_polyline(region: ZeroFreeRegion, a_min: float = 0.5, a_max: float = 1.0, n_pts: int = 200) -> np.ndarray:
    """Rows ``(a, b, -b)`` with ``b(a) = sqrt(max(0, (2a-1)/Delta - a^2))``."""
    if not (a_min >= 0.5 and a_max > a_min):
        raise DomainError("need 1/2 <= a_min < a_max")
    if n_pts < 2:
        raise DomainError("n_pts must be >= 2")
    a = np.linspace(a_min, a_max, n_pts)
    b = np.sqrt(np.maximum(0.0, (2.0 * a - 1.0) / region.delta_eff - a * a))
    return np.column_stack([a, b, -b])


def max_height_in_strip(region: ZeroFreeRegion) -> float:
    """Largest ``|Im z|`` in the region with ``0 < Re z <= 1`` (attained at ``Re z = 1``)."""
    return math.sqrt(max(0.0, 1.0 / region.delta_eff - 1.0))


def hoeffding_penalty(c_l1: float, n: int, alpha: float) -> float:
    """``(1 + ||c||_1^2) sqrt(2 log(2/alpha) / N)``."""
    return (1.0 + c_l1 * c_l1) * math.sqrt(2.0 * math.log(2.0 / alpha) / n)


def monte_carlo_certificate(net: FracNet, N: int, alpha: float, seed: int = 0, workers: int = 1) -> Certificate:
    """Empirical risk on ``N`` seeded uniform points plus the Hoeffding penalty.

    With probability at least ``1 - alpha`` the returned region contains no
    zeros of zeta.  Samples are drawn in fixed chunks, so the certificate is
    bit-identical for any ``workers``.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if seed < 0:
        raise DomainError("seed must be non-negative")

    def chunk(pts: np.ndarray) -> float:
        r = 1.0 - evaluate(net, pts)
        return math.fsum((r * r).tolist())

    sums = map_chunks(chunk, seed, N, net.d, workers)
    risk = math.fsum(sums) / N
    c_l1 = net.c_l1
    penalty = hoeffding_penalty(c_l1, N, alpha)
    delta_n = risk + penalty
    region = ZeroFreeRegion(delta_n ** (1.0 / net.d), "empirical", net.d, float(alpha))
    return Certificate(net_hash(net), int(N), float(alpha), int(seed), risk, penalty, delta_n, region, c_l1)


def plan_samples(target_delta_eff: float, d: int = 1, alpha: float = 0.1, c_l1: float = 0.0) -> SamplePlan:
    """Smallest ``N`` whose Hoeffding penalty alone is at most ``target**d``.

    ``N = ceil(2 log(2/alpha) (1 + c_l1^2)^2 / target^(2d))``.  The empirical
    risk is taken as zero, so this is a lower bound on the samples needed.
    """
    if not 0.0 < target_delta_eff < 1.0:
        raise DomainError("target_delta_eff must lie in (0, 1)")
    if d < 1:
        raise DomainError("d must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if c_l1 < 0:
        raise DomainError("c_l1 must be non-negative")
    log10_n = (
        math.log10(2.0 * math.log(2.0 / alpha))
        + 2.0 * math.log10(1.0 + c_l1 * c_l1)
        - 2.0 * d * math.log10(target_delta_eff)
    )
    n_samples: Optional[int] = None
    saturated = log10_n > 10_000
    if not saturated:
        with localcontext() as ctx:
            ctx.prec = 60
            two = Decimal(2)
            val = (
                two
                * (two / Decimal(alpha)).ln()
                * (Decimal(1) + Decimal(c_l1) ** 2) ** 2
                / Decimal(target_delta_eff) ** (2 * d)
            )
            n_samples = int(val.to_integral_value(rounding="ROUND_CEILING"))
    feasible = (not saturated) and n_samples <= FEASIBLE_SAMPLES
    return SamplePlan(n_samples, log10_n, feasible, saturated, float(target_delta_eff), int(d), float(alpha), float(c_l1))


def compare_regions(r1: ZeroFreeRegion, r2: ZeroFreeRegion) -> RegionOrder:
    """Regions are nested, smaller ``delta_eff`` meaning the larger region."""
    if r1.delta_eff < r2.delta_eff:
        return RegionOrder.LARGER
    if r1.delta_eff > r2.delta_eff:
        return RegionOrder.SMALLER
    return RegionOrder.EQUAL


def certificate_to_dict(cert: Certificate) -> dict:
    return {
        "net_hash": cert.net_hash,
        "N": cert.N,
        "alpha": cert.alpha,
        "seed": cert.seed,
        "empirical_risk": cert.empirical_risk,
        "penalty": cert.penalty,
        "delta_N": cert.delta_N,
        "delta_eff": cert.region.delta_eff,
        "d": cert.region.d,
        "source": cert.region.source,
        "c_l1": cert.c_l1,
    }


def certificate_from_dict(data: dict) -> Certificate:
    try:
        region = ZeroFreeRegion(float(data["delta_eff"]), data["source"], int(data["d"]), float(data["alpha"]))
        cert = Certificate(
            str(data["net_hash"]),
            int(data["N"]),
            float(data["alpha"]),
            int(data["seed"]),
            float(data["empirical_risk"]),
            float(data["penalty"]),
            float(data["delta_N"]),
            region,
            float(data.get("c_l1", float("nan"))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed certificate: {exc}") from exc
    if not math.isclose(cert.delta_N, cert.empirical_risk + cert.penalty, rel_tol=1e-15, abs_tol=0.0):
        raise DomainError("certificate delta_N does not equal empirical_risk + penalty")
    return cert


def polyline_to_csv(rows: np.ndarray) -> str:
    lines = ["a,b_plus,b_minus"]
    lines += [f"{a!r},{bp!r},{bm!r}" for a, bp, bm in rows.tolist()]
    return "\n".join(lines) + "\n"

