"""Independent reference computations used by the tests.

Nothing here calls the envelope engine or the vectorised enumerator: integrals
go through scipy.integrate.quad and deviations through plain loops.
"""

import itertools

import numpy as np
from scipy.integrate import quad


def interpolated(points, values, interpolation):
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    if interpolation == "linear":
        return lambda s: float(np.interp(s, points, values))

    def step(s):
        k = max(i for i, p in enumerate(points) if p <= s + 1e-15)
        return float(values[k])
    return step


def slice_integral(model, points, values, a, b, interpolation):
    """Integral of g2(X(s), s) from a to b by quad, split at grid points."""
    X = interpolated(points, values, interpolation)
    lo, hi = min(a, b), max(a, b)
    cuts = [lo] + [p for p in points if lo < p < hi] + [hi]
    total = 0.0
    for u, v in zip(cuts[:-1], cuts[1:]):
        # step slices are constant on [u, v); evaluate just inside the cell
        if interpolation == "step":
            xv = X(u)
            f = lambda s, xv=xv: float(model.g2(xv, s))
        else:
            f = lambda s: float(model.g2(X(s), s))
        total += quad(f, u, v, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return total if b >= a else -total


def envelope_table(model, mech, interpolation):
    """Envelope payments for every profile, built slice by slice with quad."""
    n, pts = mech.n_agents, mech.grid.points
    out = np.empty_like(mech.payments)
    for idx in itertools.product(range(len(pts)), repeat=n):
        for i in range(n):
            ks = list(idx)
            slice_vals = []
            for k in range(len(pts)):
                ks[i] = k
                slice_vals.append(mech.allocation[tuple(ks) + (i,)])
            ks[i] = 0
            p0 = mech.payments[tuple(ks) + (i,)]
            t = pts[idx[i]]
            x_t = mech.allocation[idx + (i,)]
            integral = slice_integral(model, pts, slice_vals, 0.0, t, interpolation)
            out[idx + (i,)] = (p0 - float(model.g(slice_vals[0], 0.0))
                               + float(model.g(x_t, t)) - integral)
    return out


def all_losses(model, mech):
    """List of (agent, profile index, report index, loss) from explicit loops."""
    n, pts = mech.n_agents, mech.grid.points
    rows = []
    for idx in itertools.product(range(len(pts)), repeat=n):
        for i in range(n):
            t = pts[idx[i]]
            truth = float(model.g(mech.allocation[idx + (i,)], t)) - mech.payments[idx + (i,)]
            for kr in range(len(pts)):
                if kr == idx[i]:
                    continue
                rep = list(idx)
                rep[i] = kr
                rep = tuple(rep)
                lie = float(model.g(mech.allocation[rep + (i,)], t)) - mech.payments[rep + (i,)]
                rows.append((i, idx, kr, truth - lie))
    return rows
