import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strictsp import (
    DomainError,
    ObjectiveKind,
    ObjectiveSpec,
    TypeGrid,
    evaluate_objective,
    make_random_monotone,
    make_second_price,
    objective_gap,
    strictify,
)
from strictsp.mechanism import MechanismTable

BUILTIN_KINDS = [ObjectiveKind.REVENUE, ObjectiveKind.EFFICIENCY, ObjectiveKind.WELFARE]


def test_vickrey_revenue_by_enumeration(second_price):
    pts = second_price.grid.points
    total = sum(min(a, b) for a in pts for b in pts)
    assert evaluate_objective(second_price) == pytest.approx(total / 9, abs=1e-15)
    assert evaluate_objective(second_price) == pytest.approx(2.5 / 9, abs=1e-12)


def test_constant_welfare(constant):
    assert evaluate_objective(constant, ObjectiveSpec("welfare")) == pytest.approx(0.5, abs=1e-15)
    assert evaluate_objective(constant, ObjectiveSpec("revenue")) == 0.0


def test_identical_gap_is_zero(second_price):
    rep = objective_gap(second_price, second_price)
    assert rep.gap == 0.0 and rep.within_bound


def test_constant_strictified_revenue_gap(product, constant):
    res = strictify(product, constant, 0.1)
    rep = objective_gap(constant, res, ObjectiveSpec("revenue"))
    # E[delta t^2 / 4] per agent with t uniform on {0, 0.5, 1} is delta (5/12) / 4
    assert rep.gap == pytest.approx(-2 * 0.1 * (5 / 12) / 4, abs=1e-14)
    assert rep.gap < 0 and rep.within_bound


def test_weights_validation():
    with pytest.raises(DomainError):
        evaluate_objective(make_second_price(2, TypeGrid.uniform(3)), ObjectiveSpec(weights=[0.5, 0.6, -0.1]))
    with pytest.raises(DomainError):
        evaluate_objective(make_second_price(2, TypeGrid.uniform(3)), ObjectiveSpec(weights=[0.5, 0.5]))
    with pytest.raises(DomainError):
        ObjectiveSpec("custom")


def test_point_mass_prior(second_price):
    spec = ObjectiveSpec("revenue", weights=[[0, 0, 1], [0, 1, 0]])
    assert evaluate_objective(second_price, spec) == pytest.approx(0.5)


def test_custom_reproduces_welfare(second_price):
    own = np.stack(np.meshgrid(*([second_price.grid.points] * 2), indexing="ij"), axis=-1)
    spec = ObjectiveSpec("custom", cx=own, cp=-np.ones_like(own))
    assert evaluate_objective(second_price, spec) == pytest.approx(
        evaluate_objective(second_price, ObjectiveSpec("welfare")), abs=1e-15)
    assert spec.lipschitz() == 2.0


def random_table(seed, n=2, m=4):
    rng = np.random.default_rng(seed)
    shape = (m,) * n + (n,)
    return MechanismTable(n, TypeGrid.uniform(m), rng.random(shape), rng.normal(0, 1, shape))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 2**31), st.sampled_from(BUILTIN_KINDS))
def test_lipschitz_bound(s1, s2, kind):
    a, b = random_table(s1), random_table(s2)
    rep = objective_gap(a, b, ObjectiveSpec(kind))
    assert rep.within_bound


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_revenue_linear_in_payments(seed):
    a = random_table(seed)
    doubled = a.replace(payments=2 * a.payments)
    assert evaluate_objective(doubled) == pytest.approx(2 * evaluate_objective(a), rel=1e-12, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(BUILTIN_KINDS))
def test_agent_relabeling_invariance(seed, kind):
    a = random_table(seed)
    swapped = a.replace(allocation=np.swapaxes(a.allocation, 0, 1)[..., ::-1],
                        payments=np.swapaxes(a.payments, 0, 1)[..., ::-1])
    spec = ObjectiveSpec(kind)
    assert evaluate_objective(swapped, spec) == pytest.approx(evaluate_objective(a, spec), abs=1e-13)


def test_random_strictification_gaps(product):
    from strictsp import envelope_payments

    for seed in range(5):
        mech = envelope_payments(product, make_random_monotone(3, TypeGrid.uniform(4), seed))
        res = strictify(product, mech, 0.02)
        for kind in BUILTIN_KINDS:
            assert objective_gap(res.reference, res, ObjectiveSpec(kind)).within_bound
