import numpy as np
import pytest

from strictsp import PayoffModel, TypeGrid, make_constant, make_second_price


@pytest.fixture
def grid3():
    return TypeGrid([0.0, 0.5, 1.0])


@pytest.fixture
def product():
    return PayoffModel.product()


@pytest.fixture
def second_price(grid3):
    return make_second_price(2, grid3)


@pytest.fixture
def constant(grid3):
    return make_constant(2, grid3, 0.5, 0.0)


@pytest.fixture
def tabulated():
    # g2(x, t) = x + x t / 2 sampled on a coarse lattice; strictly increasing in x
    xs = np.linspace(0.0, 1.0, 5)
    ts = np.linspace(0.0, 1.0, 4)
    g2 = xs[:, None] * (1.0 + 0.5 * ts[None, :])
    return PayoffModel.tabulated(xs, ts, g2, g0_samples=-0.1 * xs ** 2)
