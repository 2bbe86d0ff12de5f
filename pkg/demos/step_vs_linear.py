"""
Step or linear extension between grid points
============================================

Envelope payments need ``X(s)`` between grid points. A left-step extension
reproduces threshold mechanisms exactly, but it is flat inside each cell, so
the next-lower grid type is always an equally good report. Linear
interpolation keeps a strictly increasing table strictly increasing.
"""

import numpy as np

from strictsp import (
    MechanismTable,
    PayoffModel,
    TypeGrid,
    check_strict_sp,
    envelope_payments,
    make_random_monotone,
    make_second_price,
)

model = PayoffModel.product()

# Vickrey on {0, 0.5, 1}: bidder 1's payments against an opponent at 0.5
auction = make_second_price(2, TypeGrid([0.0, 0.5, 1.0]))
for interp in ("step", "linear"):
    env = envelope_payments(model, auction, interpolation=interp)
    print(f"{interp:>6}: P1(., 0.5) = {env.payments[:, 1, 0]}")

# a strictly increasing random table
mech = make_random_monotone(2, TypeGrid.uniform(9), seed=3, strict=True)
for interp in ("step", "linear"):
    res = check_strict_sp(model, envelope_payments(model, mech, interpolation=interp),
                          interpolation=interp)
    print(f"{interp:>6}: strictly SP {res.strict_sp}, margin {res.strict_margin:.2e}")

# X(t) = t with one bidder: the step payment at t = 1 approaches 1/2 as the grid refines
for m in (3, 9, 17, 33):
    grid = TypeGrid.uniform(m)
    lin = MechanismTable(1, grid, grid.points[:, None].copy(), np.zeros((m, 1)))
    p1 = envelope_payments(model, lin, interpolation="step").payments[-1, 0]
    print(f"m={m:>2}: step P(1) = {p1:.5f}   error {abs(p1 - 0.5):.5f} <= {1 / (2 * (m - 1)):.5f}")
