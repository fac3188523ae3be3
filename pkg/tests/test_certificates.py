import math

import numpy as np
import pytest

from nbnet.certificates import (
    FEASIBLE_SAMPLES,
    RegionOrder,
    ZeroFreeRegion,
    boundary_polyline,
    certificate_from_dict,
    certificate_to_dict,
    compare_regions,
    contains,
    exact_region,
    hoeffding_penalty,
    max_height_in_strip,
    monte_carlo_certificate,
    plan_samples,
    polyline_to_csv,
)
from nbnet.errors import DomainError
from nbnet.network import example_net, make_net
from nbnet.optimizer import assemble_gram, objective

LN20 = math.log(20.0)


def test_exact_region_examples():
    assert exact_region(0.5, 1).delta_eff == 0.25
    assert exact_region(0.25, 2).delta_eff == pytest.approx(0.25)
    assert exact_region(0.001, 1).delta_eff == pytest.approx(1e-6)
    assert exact_region(0.25, 2).source == "exact_dd"
    with pytest.raises(DomainError):
        exact_region(0.0)
    with pytest.raises(DomainError):
        exact_region(-1.0)


def test_region_validation():
    with pytest.raises(DomainError):
        ZeroFreeRegion(0.0, "exact_d1")
    with pytest.raises(DomainError):
        ZeroFreeRegion(0.1, "empirical")
    with pytest.raises(DomainError):
        ZeroFreeRegion(0.1, "exact_d1", alpha=0.1)
    with pytest.raises(DomainError):
        ZeroFreeRegion(0.1, "guess")


def test_contains_examples():
    assert not contains(ZeroFreeRegion(1.0, "exact_d1"), 0.75)
    assert contains(ZeroFreeRegion(0.01, "exact_d1"), 0.6)
    r = ZeroFreeRegion(1e-9, "exact_d1")
    for z in (0.5, 0.5 + 3j, 0.2, -1 + 1j):
        assert z not in r


def test_contains_implies_right_half():
    rng = np.random.default_rng(0)
    zs = rng.uniform(-1, 2, 1000) + 1j * rng.uniform(-50, 50, 1000)
    for de in (1e-4, 0.01, 0.5):
        r = ZeroFreeRegion(de, "exact_d1")
        assert all(z.real > 0.5 for z in zs if contains(r, z))


def test_region_nesting():
    rng = np.random.default_rng(1)
    zs = rng.uniform(0, 1.2, 1000) + 1j * rng.uniform(-20, 20, 1000)
    deltas = [0.5, 0.1, 0.01, 1e-3, 1e-5]
    for big, small in zip(deltas[:-1], deltas[1:]):
        r_big, r_small = ZeroFreeRegion(big, "exact_d1"), ZeroFreeRegion(small, "exact_d1")
        assert all(contains(r_small, z) for z in zs if contains(r_big, z))


def test_corollary_limit():
    z = 0.51 + 10j
    threshold = (2 * z.real - 1) / abs(z) ** 2
    assert contains(ZeroFreeRegion(threshold * 0.99, "exact_d1"), z)
    assert not contains(ZeroFreeRegion(threshold * 1.01, "exact_d1"), z)


def test_boundary_polyline_examples():
    rows = boundary_polyline(ZeroFreeRegion(1.0, "exact_d1"), 0.5, 1.0, 3)
    assert rows[-1, 1] == 0.0 and rows[0, 1] == 0.0
    rows = boundary_polyline(ZeroFreeRegion(0.25, "exact_d1"), 0.5, 1.0, 11)
    assert rows[-1, 1] == pytest.approx(math.sqrt(3), abs=1e-15)
    np.testing.assert_array_equal(rows[:, 2], -rows[:, 1])
    with pytest.raises(DomainError):
        boundary_polyline(ZeroFreeRegion(0.25, "exact_d1"), 0.4, 1.0, 5)
    with pytest.raises(DomainError):
        boundary_polyline(ZeroFreeRegion(0.25, "exact_d1"), 0.5, 1.0, 1)


def test_boundary_points_lie_on_region_edge():
    r = ZeroFreeRegion(0.05, "exact_d1")
    for a, b, _ in boundary_polyline(r, 0.55, 1.0, 20):
        assert contains(r, complex(a + 1e-9, b * (1 - 1e-6)))
        assert not contains(r, complex(a - 1e-9, b * (1 + 1e-6)))


def test_max_height():
    assert max_height_in_strip(ZeroFreeRegion(0.25, "exact_d1")) == pytest.approx(math.sqrt(3), abs=1e-12)
    assert max_height_in_strip(ZeroFreeRegion(1.0, "exact_d1")) == 0.0
    assert max_height_in_strip(ZeroFreeRegion(1e-24, "exact_d1")) == pytest.approx(1e12, rel=1e-12)
    for de in (0.9, 0.25, 0.01, 1e-6):
        r = ZeroFreeRegion(de, "exact_d1")
        rows = boundary_polyline(r, 0.5, 1.0, 100_001)
        assert abs(rows[:, 1].max() - max_height_in_strip(r)) <= 1e-4 * max(1, max_height_in_strip(r))


def test_penalty_closed_form():
    assert hoeffding_penalty(6.0, 10_000, 0.1) == 37 * math.sqrt(2 * LN20 / 10_000)
    assert hoeffding_penalty(6.0, 10_000, 0.1) == pytest.approx(0.90567, abs=1e-5)


def test_zero_net_certificate():
    net = make_net(1, 2, [0.5, 0.25], [0.0, 0.0])
    cert = monte_carlo_certificate(net, 5000, 0.1, seed=3)
    assert cert.empirical_risk == 1.0
    assert cert.penalty == math.sqrt(2 * LN20 / 5000)
    assert cert.delta_N == cert.empirical_risk + cert.penalty
    assert cert.region.source == "empirical"


def test_example_net_certificate():
    cert = monte_carlo_certificate(example_net(), 10_000, 0.1, seed=0)
    assert cert.c_l1 == 6.0
    assert cert.penalty == 37 * math.sqrt(2 * LN20 / 10_000)
    assert cert.region.delta_eff == cert.delta_N


def test_empirical_risk_matches_quadrature():
    net = example_net()
    truth = objective(net, assemble_gram(net.beta))
    cert = monte_carlo_certificate(net, 1_000_000, 0.1, seed=11)
    # (1 - f)^2 for this net takes few values; bound its spread crudely by the sup
    sd = math.sqrt(2 * (1 + 36))
    assert abs(cert.empirical_risk - truth) <= 4 * sd / 1000


def test_multi_d_certificate_root():
    beta = np.array([[0.5, 0.4], [0.25, 0.2]])
    net = make_net(2, 2, beta, [[1.0, 0.0], [-2.0, 0.0]])
    cert = monte_carlo_certificate(net, 20_000, 0.05, seed=2)
    assert cert.region.delta_eff == pytest.approx(cert.delta_N**0.5)
    assert cert.c_l1 == 3.0


def test_certificate_determinism_across_workers():
    net = example_net()
    a = monte_carlo_certificate(net, 300_000, 0.1, seed=7, workers=1)
    b = monte_carlo_certificate(net, 300_000, 0.1, seed=7, workers=8)
    assert a == b
    c = monte_carlo_certificate(net, 300_000, 0.1, seed=8, workers=1)
    assert c.empirical_risk != a.empirical_risk


def test_certificate_parameter_errors():
    net = example_net()
    with pytest.raises(DomainError):
        monte_carlo_certificate(net, 0, 0.1)
    with pytest.raises(DomainError):
        monte_carlo_certificate(net, 10, 1.0)
    with pytest.raises(DomainError):
        monte_carlo_certificate(net, 10, 0.1, seed=-1)


def test_certificate_serialization_round_trip():
    cert = monte_carlo_certificate(example_net(), 1000, 0.2, seed=1)
    data = certificate_to_dict(cert)
    for key in ("net_hash", "N", "alpha", "seed", "empirical_risk", "penalty", "delta_N", "delta_eff", "d", "source"):
        assert key in data
    back = certificate_from_dict(data)
    assert back == cert
    bad = dict(data, delta_N=data["delta_N"] + 1)
    with pytest.raises(DomainError):
        certificate_from_dict(bad)
    with pytest.raises(DomainError):
        certificate_from_dict({"N": 3})


def test_plan_samples_examples():
    small = plan_samples(0.1, 1, 0.1, 0.0)
    assert small.n_samples == 600
    assert small.feasible
    big = plan_samples(1e-12, 1, 0.1, 0.0)
    assert 1e24 <= big.n_samples <= 1e26
    assert big.n_samples == pytest.approx(2 * LN20 * 1e24, rel=1e-12)
    assert not big.feasible and not big.saturated
    assert big.n_samples > FEASIBLE_SAMPLES


def test_plan_samples_dimension_ratio():
    t = 0.01
    n1 = plan_samples(t, 1, 0.1, 2.0).n_samples
    n2 = plan_samples(t, 2, 0.1, 2.0).n_samples
    # both counts are ceilings, so the ratio is exact only up to 1/n1
    assert n2 / n1 == pytest.approx(t**-2, rel=2 / n1)


def test_plan_samples_penalty_meets_target():
    for t, d, c in [(0.3, 1, 0.0), (0.05, 2, 3.0), (0.5, 3, 1.0)]:
        n = plan_samples(t, d, 0.1, c).n_samples
        assert hoeffding_penalty(c, n, 0.1) <= t**d * (1 + 1e-12)
        assert hoeffding_penalty(c, n - 1, 0.1) > t**d * (1 - 1e-12)


def test_plan_samples_saturates():
    p = plan_samples(1e-300, 40, 0.1, 0.0)
    assert p.saturated and p.n_samples is None and not p.feasible
    assert p.log10_n == pytest.approx(24000 + math.log10(2 * LN20))


def test_plan_samples_errors():
    for args in [(0.0, 1), (1.0, 1), (0.1, 0), (0.1, 1, 1.5), (0.1, 1, 0.1, -1.0)]:
        with pytest.raises(DomainError):
            plan_samples(*args)


def test_compare_regions():
    a, b = ZeroFreeRegion(0.1, "exact_d1"), ZeroFreeRegion(0.2, "exact_d1")
    assert compare_regions(a, b) is RegionOrder.LARGER
    assert compare_regions(b, a) is RegionOrder.SMALLER
    assert compare_regions(a, ZeroFreeRegion(0.1, "exact_dd", d=2)) is RegionOrder.EQUAL
    two_d = exact_region(0.04**2, 2)  # delta_eff 0.04
    one_d = exact_region(0.3, 1)  # delta_eff 0.09
    assert compare_regions(two_d, one_d) is RegionOrder.LARGER


def test_polyline_csv():
    rows = boundary_polyline(ZeroFreeRegion(0.25, "exact_d1"), 0.5, 1.0, 3)
    text = polyline_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "a,b_plus,b_minus"
    assert len(lines) == 4
    assert float(lines[-1].split(",")[1]) == rows[-1, 1]
