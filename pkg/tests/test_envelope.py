import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strictsp import (
    AllocationSlice,
    DomainError,
    EnvelopeContractError,
    PayoffModel,
    TypeGrid,
    deviation_loss_formula,
    envelope_payments,
    envelope_residual,
    integrate_g2_along,
    make_constant,
    make_random_monotone,
    utility,
)
from strictsp.mechanism import MechanismTable, agent_view

from oracles import envelope_table, slice_integral

MODELS = [PayoffModel.product(), PayoffModel.power(2.0), PayoffModel.power(0.5),
          PayoffModel.quadratic(0.3)]


def slice_of(values, grid, interpolation):
    return AllocationSlice(grid, values, interpolation=interpolation)


# ------------------------------------------------------------ slice integral
def test_step_integral_hand_value(product, grid3):
    s = slice_of([0.0, 0.5, 1.0], grid3, "step")
    assert integrate_g2_along(product, s, 0.0, 1.0) == pytest.approx(0.25, abs=1e-15)


def test_linear_integral_is_trapezoid(product, grid3):
    s = slice_of([0.0, 0.5, 1.0], grid3, "linear")
    assert integrate_g2_along(product, s, 0.0, 1.0) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("interp", ["step", "linear"])
def test_empty_interval_and_sign(product, grid3, interp):
    s = slice_of([0.1, 0.5, 0.8], grid3, interp)
    assert integrate_g2_along(product, s, 0.5, 0.5) == 0.0
    assert integrate_g2_along(product, s, 1.0, 0.0) == -integrate_g2_along(product, s, 0.0, 1.0)


@pytest.mark.parametrize("interp", ["step", "linear"])
def test_constant_slice(product, interp):
    grid = TypeGrid.uniform(5)
    s = slice_of([0.3] * 5, grid, interp)
    for t in grid.points:
        assert integrate_g2_along(product, s, 0.0, t) == pytest.approx(0.3 * t, abs=1e-15)


def test_off_grid_endpoint_raises(product, grid3):
    with pytest.raises(DomainError):
        integrate_g2_along(product, slice_of([0, 0.5, 1], grid3, "step"), 0.0, 0.7)


@pytest.mark.parametrize("interp", ["step", "linear"])
@pytest.mark.parametrize("model", MODELS + ["tabulated"], ids=str)
def test_integral_matches_quad_oracle(model, interp, tabulated):
    model = tabulated if model == "tabulated" else model
    grid = TypeGrid([0.0, 0.1, 0.35, 0.6, 1.0])
    vals = [0.0, 0.2, 0.2, 0.7, 0.95]
    s = slice_of(vals, grid, interp)
    for a in grid.points:
        for b in grid.points:
            expected = slice_integral(model, grid.points, vals, a, b, interp)
            assert integrate_g2_along(model, s, a, b) == pytest.approx(expected, abs=1e-9)


# --------------------------------------------------------- envelope payments
def test_constant_allocation_keeps_base_payment(product):
    mech = make_constant(2, TypeGrid.uniform(7), 0.4, 0.2)
    for interp in ("step", "linear"):
        env = envelope_payments(product, mech, interpolation=interp)
        assert np.max(np.abs(env.payments - 0.2)) <= 1e-12
        assert envelope_residual(product, mech, interp) <= 1e-12


def test_second_price_step_envelope_hand_values(product, second_price):
    env = envelope_payments(product, second_price, interpolation="step")
    col = 1  # opponent reports 0.5
    np.testing.assert_allclose(agent_view(env.payments, 0)[:, col], [0.0, 0.25, 0.75], atol=1e-10)


def test_second_price_linear_envelope_matches_oracle(product, second_price):
    env = envelope_payments(product, second_price, interpolation="linear")
    # 0.5*0.5 - 0.5*(0 + 0.5)/2 and 1 - [0.125 + 0.5*(0.5 + 1)/2]
    np.testing.assert_allclose(agent_view(env.payments, 0)[:, 1], [0.0, 0.125, 0.5], atol=1e-12)
    np.testing.assert_allclose(env.payments, envelope_table(product, second_price, "linear"),
                               atol=1e-10)


def test_allocation_unchanged(product, second_price):
    env = envelope_payments(product, second_price)
    assert np.array_equal(env.allocation, second_price.allocation)


@pytest.mark.parametrize("interp", ["step", "linear"])
@pytest.mark.parametrize("model", MODELS + ["tabulated"], ids=str)
def test_envelope_matches_quad_oracle(model, interp, tabulated):
    model = tabulated if model == "tabulated" else model
    raw = make_random_monotone(2, TypeGrid([0.0, 0.2, 0.5, 1.0]), seed=3)
    rng = np.random.default_rng(0)
    mech = raw.replace(payments=rng.uniform(-0.3, 0.3, raw.payments.shape))
    env = envelope_payments(model, mech, interpolation=interp)
    np.testing.assert_allclose(env.payments, envelope_table(model, mech, interp), atol=1e-9)


def test_explicit_base_row(product, second_price):
    base = [np.full(3, 0.1), np.full(3, -0.2)]
    env = envelope_payments(product, second_price, base_row=base)
    np.testing.assert_allclose(agent_view(env.payments, 0)[0], 0.1)
    np.testing.assert_allclose(agent_view(env.payments, 1)[0], -0.2)
    with pytest.raises(DomainError):
        envelope_payments(product, second_price, base_row=[np.zeros(2), np.zeros(3)])


def test_step_envelope_linear_allocation_convergence(product):
    for m in (3, 9, 17, 33):
        grid = TypeGrid.uniform(m)
        mech = MechanismTable(1, grid, grid.points[:, None], np.zeros((m, 1)))
        step = envelope_payments(product, mech, interpolation="step").payments[-1, 0]
        # left-Riemann integral is 0.5 - 1/(2(m-1)), so P(1) = 1 - integral
        assert step == pytest.approx(0.5 + 1 / (2 * (m - 1)), abs=1e-12)
        lin = envelope_payments(product, mech, interpolation="linear").payments[-1, 0]
        assert lin == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["step", "linear"]), st.sampled_from(MODELS))
def test_envelope_idempotent(seed, interp, model):
    mech = make_random_monotone(2, TypeGrid.uniform(5), seed)
    env = envelope_payments(model, mech, interpolation=interp)
    again = envelope_payments(model, env, interpolation=interp)
    assert np.max(np.abs(again.payments - env.payments)) <= 1e-12


def test_vickrey_residuals(product, second_price):
    assert envelope_residual(product, second_price, "step") == pytest.approx(0.25, abs=1e-12)
    assert envelope_residual(product, second_price, "linear") == pytest.approx(0.125, abs=1e-12)


# ------------------------------------------------------ deviation-loss identity
def test_loss_formula_examples(product, second_price, constant):
    env = envelope_payments(product, second_price, interpolation="step")
    assert deviation_loss_formula(product, env, 0, (0.5,), 1.0, 0.0, "step") == \
        pytest.approx(0.25, abs=1e-12)
    for t in (0.0, 0.5, 1.0):
        assert deviation_loss_formula(product, env, 0, (0.5,), t, t, "step") == 0.0
        for r in (0.0, 0.5, 1.0):
            assert deviation_loss_formula(product, constant, 1, (1.0,), t, r) == 0.0


def test_loss_formula_refuses_non_envelope(product, second_price):
    with pytest.raises(EnvelopeContractError):
        deviation_loss_formula(product, second_price, 0, (0.5,), 1.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["step", "linear"]), st.sampled_from(MODELS),
       st.booleans())
def test_loss_identity_matches_utility_difference(seed, interp, model, strict):
    mech = envelope_payments(model, make_random_monotone(2, TypeGrid.uniform(4), seed, strict),
                             interpolation=interp)
    pts = mech.grid.points
    for i in range(2):
        for o in pts:
            for t in pts:
                for r in pts:
                    direct = (utility(model, mech, i, (o,), t, t)
                              - utility(model, mech, i, (o,), t, r))
                    formula = deviation_loss_formula(model, mech, i, (o,), t, r, interp)
                    assert formula == pytest.approx(direct, abs=1e-8)


def test_loss_identity_tabulated(tabulated):
    mech = envelope_payments(tabulated, make_random_monotone(2, TypeGrid.uniform(4), 11, True))
    pts = mech.grid.points
    for t in pts:
        for r in pts:
            direct = (utility(tabulated, mech, 1, (0.0,), t, t)
                      - utility(tabulated, mech, 1, (0.0,), t, r))
            assert deviation_loss_formula(tabulated, mech, 1, (0.0,), t, r) == \
                pytest.approx(direct, abs=1e-8)



@pytest.mark.parametrize("interp", ["step", "linear"])
def test_loss_table_matches_pointwise_formula(interp, tabulated):
    from strictsp import deviation_loss_table

    for model in MODELS + [tabulated]:
        mech = envelope_payments(model, make_random_monotone(2, TypeGrid.uniform(4), 5, True),
                                 interpolation=interp)
        pts = mech.grid.points
        for i in range(2):
            table = deviation_loss_table(model, mech, i, interp)
            for col, o in enumerate(pts):
                for kt, t in enumerate(pts):
                    for kr, r in enumerate(pts):
                        assert table[kt, kr, col] == pytest.approx(
                            deviation_loss_formula(model, mech, i, (o,), t, r, interp), abs=1e-13)

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["step", "linear"]))
def test_pairwise_loss_sum_positive_when_allocation_rises(seed, interp):
    # loss(t, r) + loss(r, t) = int_r^t [X(t) - X(r)] ds for the product payoff
    product = PayoffModel.product()
    mech = envelope_payments(product, make_random_monotone(2, TypeGrid.uniform(5), seed),
                             interpolation=interp)
    pts = mech.grid.points
    for o in pts:
        slc = AllocationSlice.of(mech, 0, (o,), interp)
        for kr, r in enumerate(pts):
            for kt in range(kr + 1, len(pts)):
                t = pts[kt]
                both = (deviation_loss_formula(product, mech, 0, (o,), t, r, interp)
                        + deviation_loss_formula(product, mech, 0, (o,), r, t, interp))
                expected = (t - r) * (slc.values[kt] - slc.values[kr])
                assert both == pytest.approx(expected, abs=1e-12)
                if slc.values[kt] > slc.values[kr]:
                    assert both > 0
