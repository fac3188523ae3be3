import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbnet.errors import ConstraintViolation, DomainError, ShapeError
from nbnet.network import (
    FracNet,
    breakpoints,
    column_residuals,
    evaluate,
    evaluate_step_form,
    example_net,
    flatten,
    frac,
    linear_part,
    load_net,
    make_net,
    net_from_dict,
    net_hash,
    net_to_dict,
    project_constraint,
    save_net,
    unflatten,
)


def dyadic_column(rng, m):
    """beta on a 2^-12 lattice and coefficients with column constraint exactly 0."""
    k = rng.integers(41, 4056, m)
    c = np.zeros(m, dtype=np.int64)
    if m > 1:
        for _ in range(m):
            i, j = rng.choice(m, 2, replace=False)
            s = int(rng.integers(-8, 9))
            c[i] += s * k[j]
            c[j] -= s * k[i]
    return k / 4096.0, c / 4096.0


def exact_net(rng, d, m):
    cols = [dyadic_column(rng, m) for _ in range(d)]
    beta = np.column_stack([b for b, _ in cols])
    coeff = np.column_stack([c for _, c in cols])
    return make_net(d, m, beta, coeff)


# --- frac ---------------------------------------------------------------------


@pytest.mark.parametrize("x, expected", [(0.3, 0.3), (2.0, 0.0), (1.5, 0.5), (-0.25, 0.75), (-1e-20, 0.0)])
def test_frac(x, expected):
    assert frac(x) == pytest.approx(expected, abs=1e-15)
    assert 0.0 <= frac(x) < 1.0


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_frac_range(x):
    r = frac(x)
    assert 0.0 <= r < 1.0


# --- construction ---------------------------------------------------------------


def test_example_net_valid():
    net = example_net()
    assert net.d == 1 and net.m == 3
    assert net.c_l1 == 6.0


def test_zero_net_valid():
    net = make_net(1, 1, [0.5], [0.0])
    assert evaluate(net, 0.3) == 0.0


def test_constraint_violation():
    with pytest.raises(ConstraintViolation):
        make_net(1, 2, [0.5, 0.5], [1, 1])


@pytest.mark.parametrize("beta", [[0.0, 0.5], [1.0, 0.5], [-0.1, 0.5], [0.5, 1.5], [np.nan, 0.5]])
def test_beta_domain(beta):
    with pytest.raises(DomainError):
        make_net(1, 2, beta, [0, 0])


def test_shape_errors():
    with pytest.raises(ShapeError):
        make_net(1, 3, [0.5, 0.25], [0, 0])
    with pytest.raises(ShapeError):
        make_net(2, 2, np.full((2, 1), 0.5), np.zeros((2, 1)))


def test_net_is_immutable():
    net = example_net()
    with pytest.raises(ValueError):
        net.coeff[0, 0] = 3.0
    with pytest.raises(AttributeError):
        net.m = 4


def test_direct_construction_revalidates():
    with pytest.raises(ConstraintViolation):
        FracNet(1, 2, np.array([[0.5], [0.5]]), np.array([[1.0], [1.0]]))


# --- projection -----------------------------------------------------------------


def test_projection_examples():
    np.testing.assert_allclose(project_constraint([1, 1], [0.5, 0.5]), [0, 0], atol=1e-16)
    np.testing.assert_array_equal(project_constraint([1, -1], [0.5, 0.5]), [1, -1])
    np.testing.assert_array_equal(project_constraint([1, -1, -4], [0.7, 0.3, 0.1]), [1, -1, -4])


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 6),
    st.integers(1, 3),
    st.integers(0, 2**32 - 1),
)
def test_projection_idempotent_and_valid(m, d, seed):
    rng = np.random.default_rng(seed)
    beta = rng.uniform(0.01, 0.99, (m, d))
    c = rng.normal(0, 5, (m, d))
    p = project_constraint(c, beta)
    make_net(d, m, beta, p)  # passes the constraint check
    np.testing.assert_allclose(project_constraint(p, beta), p, rtol=0, atol=1e-14)


# --- evaluation -----------------------------------------------------------------


def test_example_net_values():
    net = example_net()
    assert evaluate(net, 0.8) == pytest.approx(0.0, abs=1e-15)
    assert evaluate(net, 0.5) == pytest.approx(-1.0, abs=1e-15)
    assert evaluate(net, 0.2) == pytest.approx(-2.0, abs=1e-15)
    assert evaluate_step_form(net, 0.5) == -1.0
    assert evaluate_step_form(net, 0.2) == -2.0
    assert evaluate_step_form(net, 0.8) == 0.0


def test_floor_sum_oracle():
    # f(x) = -(floor(0.7/x) - floor(0.3/x) - 4 floor(0.1/x)) written out by hand
    net = example_net()
    xs = np.array([0.05, 0.09, 0.11, 0.26, 0.34, 0.4, 0.69])
    expected = [-(np.floor(0.7 / x) - np.floor(0.3 / x) - 4 * np.floor(0.1 / x)) for x in xs]
    np.testing.assert_allclose(evaluate(net, xs), expected, atol=1e-13)


def test_domain_of_points():
    net = example_net()
    for x in (0.0, 1.0, -0.2, 1.2):
        with pytest.raises(DomainError):
            evaluate(net, x)
    with pytest.raises(ShapeError):
        evaluate(make_net(2, 1, [[0.5, 0.5]], [[0.0, 0.0]]), np.ones((3, 3)) * 0.5)


def test_batch_and_single_shapes():
    net = exact_net(np.random.default_rng(0), 2, 3)
    assert isinstance(evaluate(net, [0.3, 0.4]), float)
    assert evaluate(net, np.full((5, 2), 0.3)).shape == (5,)
    assert evaluate(example_net(), [0.3, 0.4, 0.5]).shape == (3,)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_step_form_equivalence_exact_nets(d, m, seed):
    rng = np.random.default_rng(seed)
    net = exact_net(rng, d, m)
    for j in range(d):
        assert sum(Fraction(a) * Fraction(b) for a, b in zip(net.coeff[:, j], net.beta[:, j])) == 0
    x = rng.uniform(0, 1, (20, d))
    x = np.clip(x, 1e-12, None)
    np.testing.assert_allclose(evaluate(net, x), evaluate_step_form(net, x), rtol=0, atol=1e-12)


def test_step_form_plus_linear_part_multi_d():
    # only the flattened constraint holds, so the per-coordinate linear parts survive
    rng = np.random.default_rng(3)
    beta = rng.uniform(0.05, 0.95, (3, 2))
    coeff = project_constraint(rng.normal(size=(3, 2)), beta)
    net = make_net(2, 3, beta, coeff)
    assert np.abs(column_residuals(net)).max() > 1e-3
    x = rng.uniform(0.05, 1, (50, 2))
    np.testing.assert_allclose(
        evaluate(net, x), evaluate_step_form(net, x) + linear_part(net, x), rtol=0, atol=1e-12
    )


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_vanishes_beyond_max_beta(d, m, seed):
    rng = np.random.default_rng(seed)
    net = exact_net(rng, d, m)
    lo = net.beta.max(axis=0)
    x = lo + (1 - lo) * rng.uniform(1e-9, 1, (10, d))
    x = np.minimum(x, 1 - 1e-16)
    np.testing.assert_allclose(evaluate(net, x), 0.0, atol=1e-14)
    assert np.all(evaluate_step_form(net, x) == 0.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_constant_between_breakpoints(m, seed):
    rng = np.random.default_rng(seed)
    net = exact_net(rng, 1, m)
    bp = np.concatenate([[0.05], breakpoints(net, 0, 0.05).points, [1.0]])
    for lo, hi in zip(bp[:-1], bp[1:]):
        pts = lo + (hi - lo) * np.array([0.25, 0.5, 0.75])
        vals = evaluate(net, pts)
        assert np.ptp(vals) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_sup_norm_bound(d, m, seed):
    rng = np.random.default_rng(seed)
    beta = rng.uniform(0.01, 0.99, (m, d))
    net = make_net(d, m, beta, project_constraint(rng.normal(0, 3, (m, d)), beta))
    x = rng.uniform(1e-6, 1, (200, d))
    f = evaluate(net, x)
    assert np.all(np.abs(f) <= net.c_l1 + 1e-12)
    assert np.all((1 - f) ** 2 <= 2 * (1 + net.c_l1**2) + 1e-12)


# --- breakpoints ----------------------------------------------------------------


def test_breakpoints_example_net():
    bp = breakpoints(example_net(), xmin=0.15)
    np.testing.assert_allclose(bp.points, [0.175, 0.7 / 3, 0.3, 0.35, 0.7], rtol=1e-15)
    assert len(bp) == 5
    assert all(p > 0.15 for p in bp)


def test_breakpoints_edge_cases():
    assert len(breakpoints(example_net(), xmin=0.7)) == 0
    bp = breakpoints(make_net(1, 1, [0.5], [0.0]), xmin=0.2)
    np.testing.assert_allclose(bp.points, [0.25, 0.5])
    with pytest.raises(DomainError):
        breakpoints(example_net(), xmin=0.0)
    with pytest.raises(DomainError):
        breakpoints(example_net(), dim=1)


def test_breakpoints_strictly_increasing():
    net = exact_net(np.random.default_rng(9), 1, 6)
    pts = breakpoints(net, xmin=0.01).points
    assert np.all(np.diff(pts) > 0)


# --- storage and serialization --------------------------------------------------


def test_flatten_is_column_major():
    a = np.array([[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]])
    np.testing.assert_array_equal(flatten(a), [1, 2, 3, 4, 5, 6])
    np.testing.assert_array_equal(unflatten(flatten(a), 3, 2), a)


def test_json_round_trip(tmp_path):
    net = exact_net(np.random.default_rng(1), 2, 4)
    path = tmp_path / "net.json"
    save_net(net, path)
    back = load_net(path)
    assert back == net
    assert net_hash(back) == net_hash(net)
    assert json.dumps(net_to_dict(back)) == json.dumps(net_to_dict(net))


def test_load_wrapped_record(tmp_path):
    net = example_net()
    path = tmp_path / "fit.json"
    path.write_text(json.dumps({"net": net_to_dict(net), "fit": {}}))
    assert load_net(path) == net


def test_malformed_record():
    with pytest.raises(DomainError):
        net_from_dict({"d": 1, "m": 1})
    with pytest.raises(ConstraintViolation):
        net_from_dict({"d": 1, "m": 2, "beta": [[0.5], [0.5]], "coeff": [[1], [1]]})


def test_hash_distinguishes_nets():
    a = example_net()
    b = make_net(1, 3, [0.7, 0.3, 0.1], [2.0, -2.0, -8.0])
    assert net_hash(a) != net_hash(b)
    assert len({a, example_net()}) == 1
