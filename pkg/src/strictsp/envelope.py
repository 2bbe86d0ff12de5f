"""Envelope-formula payments and the deviation-loss identity.

A grid slice ``X_i(., t_-i)`` is extended to a function on [0, 1] before it is
integrated. Two extensions are supported:

``"linear"`` (default)
    piecewise-linear interpolation between grid points. A strictly increasing
    table stays strictly increasing between grid points, so envelope payments
    of a strictly monotone table are strictly strategy-proof on the grid.
``"step"``
    left-step interpolation: ``X(s)`` is the value at the greatest grid point
    not above ``s``. This represents threshold mechanisms (posted prices,
    auctions on a grid) exactly, but the extension is flat inside every grid
    cell, so a type is always indifferent to mimicking the next-lower grid
    type under step-envelope payments.

Envelope payments of agent ``i`` at own type ``t`` are::

    P(t) = P(0) - g(X(0), 0) + g(X(t), t) - integral_0^t g2(X(s), s) ds
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EnvelopeContractError, QuadratureError
from .mechanism import (
    TypeGrid,
    agent_view,
    from_agent_view,
    opponent_column,
    _check_agent,
)
from .quadrature import DEFAULT_MAX_DEPTH, DEFAULT_TOL, adaptive_simpson

INTERPOLATIONS = ("linear", "step")
DEFAULT_INTERPOLATION = "linear"
ENVELOPE_GATE = 1e-9


def _check_interpolation(interpolation):
    if interpolation not in INTERPOLATIONS:
        raise DomainError(f"interpolation must be one of {INTERPOLATIONS}, got {interpolation!r}")
    return interpolation


@dataclass(frozen=True, eq=False)
class AllocationSlice:
    """One agent's allocation as a function of own type, opponents fixed."""

    grid: TypeGrid
    values: np.ndarray
    agent: int = 0
    t_other: tuple = ()
    interpolation: str = DEFAULT_INTERPOLATION

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (len(self.grid),):
            raise DomainError(f"slice has {vals.shape} values for a {len(self.grid)}-point grid")
        if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
            raise DomainError("slice values must lie in [0, 1]")
        vals = np.clip(vals, 0.0, 1.0)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        _check_interpolation(self.interpolation)

    @classmethod
    def of(cls, mech, i, t_other, interpolation=DEFAULT_INTERPOLATION):
        i = _check_agent(mech, i)
        col = opponent_column(mech.grid, mech.n_agents, i, t_other)
        return cls(mech.grid, agent_view(mech.allocation, i)[:, col], i, tuple(t_other),
                   interpolation)

    def __call__(self, s):
        """Evaluate the interpolated allocation at type ``s``."""
        pts = self.grid.points
        if self.interpolation == "linear":
            return np.interp(s, pts, self.values)
        k = np.clip(np.searchsorted(pts, s, side="right") - 1, 0, len(pts) - 1)
        return self.values[k]


def piece_integrals(model, points, values, interpolation=DEFAULT_INTERPOLATION,
                    tol=DEFAULT_TOL, max_depth=DEFAULT_MAX_DEPTH):
    """Integral of ``g2(X(s), s)`` over each grid cell, for every column of ``values``.

    ``values`` has shape ``(m, S)``; the result has shape ``(m - 1, S)``.
    """
    _check_interpolation(interpolation)
    pts = np.asarray(points, dtype=float)
    h = np.diff(pts)[:, None]
    lo, hi = values[:-1], values[1:]
    if interpolation == "step":
        if model.g2_depends_on_type:
            return model.g(lo, pts[1:, None]) - model.g(lo, pts[:-1, None])
        return model.g2(lo, 0.0) * h
    if not model.g2_depends_on_type:
        return model.g2_mean(lo, hi) * h

    out = np.empty(lo.shape)
    for k, col in np.ndindex(*lo.shape):
        u, v = float(pts[k]), float(pts[k + 1])
        x0, x1 = float(lo[k, col]), float(hi[k, col])
        slope = (x1 - x0) / (v - u)

        def integrand(s, u=u, x0=x0, slope=slope):
            x = min(max(x0 + slope * (s - u), 0.0), 1.0)
            return float(model.g2(x, s))

        try:
            out[k, col] = adaptive_simpson(integrand, u, v, tol, max_depth)
        except QuadratureError as exc:
            raise QuadratureError(
                f"{exc} (cell {k}, slice column {col}, values {x0!r} -> {x1!r})") from exc
    return out


def cumulative_integrals(model, points, values, interpolation=DEFAULT_INTERPOLATION):
    """``I[k, col]`` = integral of g2 along column ``col`` from 0 to ``points[k]``."""
    pieces = piece_integrals(model, points, values, interpolation)
    return np.concatenate([np.zeros((1, values.shape[1])), np.cumsum(pieces, axis=0)])


def integrate_g2_along(model, slc, a, b):
    """Signed integral of ``g2(X(s), s)`` from grid point ``a`` to grid point ``b``."""
    ka, kb = slc.grid.index(a), slc.grid.index(b)
    if ka == kb:
        return 0.0
    lo, hi = min(ka, kb), max(ka, kb)
    pts = slc.grid.points[lo:hi + 1]
    vals = slc.values[lo:hi + 1, None]
    total = float(np.sum(piece_integrals(model, pts, vals, slc.interpolation)))
    return total if kb > ka else -total


def _base_columns(mech, i, base_row):
    cols = mech.m ** (mech.n_agents - 1)
    if base_row is None:
        return agent_view(mech.payments, i)[0]
    arr = np.asarray(base_row[i], dtype=float).reshape(-1)
    if arr.shape != (cols,):
        raise DomainError(f"base row for agent {i} has {arr.size} entries, expected {cols}")
    return arr


def base_row_of(mech):
    """Type-zero payments ``P_i(0, t_-i)`` of every agent, one flat array per agent."""
    return [agent_view(mech.payments, i)[0].copy() for i in range(mech.n_agents)]


def envelope_payments(model, mech, base_row=None, interpolation=DEFAULT_INTERPOLATION):
    """Copy of ``mech`` whose payments satisfy the envelope formula on the grid.

    ``base_row[i]`` holds ``P_i(0, t_-i)`` for every opponent profile of agent
    ``i`` (any shape with ``m ** (n - 1)`` entries, row-major); by default the
    mechanism's own type-zero payments are kept.
    """
    _check_interpolation(interpolation)
    n, m = mech.n_agents, mech.m
    pts = mech.grid.points
    pay = np.empty_like(mech.payments)
    for i in range(n):
        X = agent_view(mech.allocation, i)
        base = _base_columns(mech, i, base_row)
        I = cumulative_integrals(model, pts, X, interpolation)
        P = base[None, :] - model.g(X[0], 0.0)[None, :] + model.g(X, pts[:, None]) - I
        pay[..., i] = from_agent_view(P, i, n, m)
    return mech.replace(payments=pay)


def envelope_residual(model, mech, interpolation=DEFAULT_INTERPOLATION):
    """Sup-norm distance between the payments and their own envelope values."""
    env = envelope_payments(model, mech, interpolation=interpolation)
    return float(np.max(np.abs(env.payments - mech.payments)))


def deviation_loss_formula(model, mech, i, t_other, t, r, interpolation=DEFAULT_INTERPOLATION,
                           gate=ENVELOPE_GATE):
    """Payoff loss of type ``t`` from reporting ``r``, via the integral identity.

    Returns ``integral_r^t [g2(X(s), s) - g2(X(r), s)] ds``, which equals the
    direct utility difference only when payments satisfy the envelope formula;
    mechanisms whose envelope residual exceeds ``gate`` are rejected.
    """
    residual = envelope_residual(model, mech, interpolation)
    if residual > gate:
        raise EnvelopeContractError(
            f"envelope residual {residual:.3e} exceeds {gate:.1e}; the loss identity does not apply")
    slc = AllocationSlice.of(mech, i, t_other, interpolation)
    kt, kr = mech.grid.index(t), mech.grid.index(r)
    if kt == kr:
        return 0.0
    t, r = float(mech.grid.points[kt]), float(mech.grid.points[kr])
    along = integrate_g2_along(model, slc, r, t)
    x_r = slc.values[kr]
    if model.g2_depends_on_type:
        fixed = float(model.g(x_r, t) - model.g(x_r, r))
    else:
        fixed = float(model.g2(x_r, 0.0)) * (t - r)
    return along - fixed


def deviation_loss_table(model, mech, i, interpolation=DEFAULT_INTERPOLATION,
                         gate=ENVELOPE_GATE):
    """:func:`deviation_loss_formula` for every (true, report, opponent column) of agent ``i``.

    Shape ``(m_true, m_report, S)`` with zeros on the diagonal, laid out like
    :func:`~strictsp.mechanism.agent_losses`.
    """
    i = _check_agent(mech, i)
    residual = envelope_residual(model, mech, interpolation)
    if residual > gate:
        raise EnvelopeContractError(
            f"envelope residual {residual:.3e} exceeds {gate:.1e}; the loss identity does not apply")
    pts = mech.grid.points
    X = agent_view(mech.allocation, i)
    I = cumulative_integrals(model, pts, X, interpolation)
    along = I[:, None, :] - I[None, :, :]
    if model.g2_depends_on_type:
        fixed = model.g(X[None, :, :], pts[:, None, None]) - model.g(X, pts[:, None])[None, :, :]
    else:
        fixed = model.g2(X, 0.0)[None, :, :] * (pts[:, None, None] - pts[None, :, None])
    out = along - fixed
    k = np.arange(mech.m)
    out[k, k, :] = 0.0
    return out
