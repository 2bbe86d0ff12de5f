"""
Checking a second-price auction
===============================

Build the two-bidder Vickrey auction on a three-point type grid, enumerate
every misreport, and see why it is only weakly strategy-proof.
"""

import numpy as np

from strictsp import (
    PayoffModel,
    TypeGrid,
    characterize,
    check_ir,
    check_monotonicity,
    check_weak_sp,
    make_second_price,
)

model = PayoffModel.product()          # g(x, t) = x * t
grid = TypeGrid([0.0, 0.5, 1.0])
auction = make_second_price(2, grid)

# allocation and payments of bidder 1, rows = own type, columns = opponent type
print("X1:\n", auction.allocation[..., 0])
print("P1:\n", auction.payments[..., 0])

# every unilateral misreport, for every type and opponent report
res = check_weak_sp(model, auction)
print(f"\nweakly SP: {res.weak_sp}   smallest loss from lying: {res.min_loss:g}")

# ties are everywhere: a zero type values the good at nothing, and a losing
# bid loses at any lower report
strict = characterize(model, auction).verification
print(f"strictly SP: {strict.strict_sp}")
for w in strict.strict_witnesses[:3]:
    print(f"  bidder {w.agent + 1}, type {w.true_type} vs {w.t_other}: "
          f"reporting {w.report} costs {w.loss:g}")

# the reason is visible in the allocation slices
mono = check_monotonicity(auction, "strict")
print(f"\nslice monotonicity: {mono.worst.name}")

# zero payments break even weak strategy-proofness
free = auction.replace(payments=np.zeros_like(auction.payments))
bad = check_weak_sp(model, free)
w = bad.min_loss_witness
print(f"\nwith free allocation: weakly SP {bad.weak_sp}; bidder {w.agent + 1} of type "
      f"{w.true_type} gains {-w.loss:g} by reporting {w.report}")

# participation: the lowest type's payoff covers a zero outside option
print("\nIR at w = 0:", check_ir(model, auction, 0.0).passed)
