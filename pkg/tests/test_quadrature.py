import math

import pytest
from scipy.integrate import quad

from strictsp.errors import QuadratureError
from strictsp.quadrature import adaptive_simpson


@pytest.mark.parametrize("f,a,b", [
    (math.sin, 0.0, math.pi),
    (lambda s: s ** 1.5, 0.0, 1.0),
    (lambda s: abs(s - 0.3), 0.0, 1.0),
    (lambda s: math.exp(-s) * s ** 3, 0.2, 0.9),
])
def test_matches_scipy(f, a, b):
    expected = quad(f, a, b, epsabs=1e-13, limit=200)[0]
    assert adaptive_simpson(f, a, b) == pytest.approx(expected, abs=1e-9)


def test_cubic_is_exact():
    assert adaptive_simpson(lambda s: 4 * s ** 3 - s, 0.0, 2.0) == pytest.approx(14.0, abs=1e-13)


def test_signed_and_empty_interval():
    f = lambda s: s * s
    assert adaptive_simpson(f, 0.5, 0.5) == 0.0
    assert adaptive_simpson(f, 1.0, 0.0) == pytest.approx(-1 / 3, abs=1e-13)


def test_non_convergence_raises():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda s: 1.0 if s > 1 / 3 else 0.0, 0.0, 1.0, tol=1e-14, max_depth=5)
