"""Direct mechanisms tabulated on a product grid of types.

A :class:`MechanismTable` stores allocations and payments as dense arrays of
shape ``(m,) * n + (n,)``: ``allocation[k1, ..., kn, i]`` is agent ``i``'s
outcome when agent ``j`` reports ``grid[kj]``.

For agent ``i``, a *slice* is the vector ``X_i(., t_-i)`` over own type with the
opponents' reports held fixed. :func:`agent_view` moves agent ``i``'s own axis
to the front and flattens the opponents' axes, giving arrays of shape
``(m, m ** (n - 1))`` whose columns are slices; opponent profiles are ordered
row-major over the other agents in ascending agent index.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, FeasibilityError

FEAS_TOL = 1e-12
GRID_MATCH_TOL = 1e-12


class Feasibility(str, enum.Enum):
    FREE = "free"
    SUM_LE_1 = "sum_le_1"
    SUM_EQ_1 = "sum_eq_1"


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TypeGrid:
    """Ascending type grid on [0, 1] that starts at 0 and ends at 1."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 2:
            raise DomainError("a type grid needs at least two points")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise DomainError("a type grid must start at 0 and end at 1")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("type grid points must be strictly ascending")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, m):
        return cls(np.linspace(0.0, 1.0, int(m)))

    def __len__(self):
        return len(self.points)

    @property
    def spacing(self):
        return np.diff(self.points)

    def index(self, t):
        """Grid index of ``t``; off-grid values raise :class:`DomainError`."""
        t = float(t)
        k = int(np.argmin(np.abs(self.points - t)))
        if abs(self.points[k] - t) > GRID_MATCH_TOL:
            raise DomainError(f"type {t!r} is not a grid point")
        return k

    def __eq__(self, other):
        return isinstance(other, TypeGrid) and np.array_equal(self.points, other.points)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MechanismTable:
    n_agents: int
    grid: TypeGrid
    allocation: np.ndarray = field(repr=False)
    payments: np.ndarray = field(repr=False)
    feasibility: Feasibility = Feasibility.FREE

    def __post_init__(self):
        n, m = int(self.n_agents), len(self.grid)
        if n < 1:
            raise DomainError("a mechanism needs at least one agent")
        shape = (m,) * n + (n,)
        alloc, pay = _frozen(self.allocation), _frozen(self.payments)
        if alloc.shape != shape:
            raise DomainError(f"allocation shape {alloc.shape} != {shape}")
        if pay.shape != shape:
            raise DomainError(f"payment shape {pay.shape} != {shape}")
        if not (np.all(np.isfinite(alloc)) and np.all(np.isfinite(pay))):
            raise DomainError("allocation and payments must be finite")
        if np.any(alloc < -FEAS_TOL) or np.any(alloc > 1.0 + FEAS_TOL):
            raise DomainError("allocation entries must lie in [0, 1]")
        if np.any((alloc < 0.0) | (alloc > 1.0)):
            alloc = _frozen(np.clip(alloc, 0.0, 1.0))
        object.__setattr__(self, "n_agents", n)
        object.__setattr__(self, "allocation", alloc)
        object.__setattr__(self, "payments", pay)
        object.__setattr__(self, "feasibility", Feasibility(self.feasibility))

    @property
    def m(self):
        return len(self.grid)

    @property
    def n_profiles(self):
        return self.m ** self.n_agents

    def replace(self, allocation=None, payments=None, feasibility=None):
        return MechanismTable(
            self.n_agents, self.grid,
            self.allocation if allocation is None else allocation,
            self.payments if payments is None else payments,
            self.feasibility if feasibility is None else feasibility,
        )

    def profiles(self):
        """Iterate over (index tuple, type tuple) for every profile."""
        pts = self.grid.points
        for idx in itertools.product(range(self.m), repeat=self.n_agents):
            yield idx, tuple(float(pts[k]) for k in idx)


# ------------------------------------------------------------------ slicing
def agent_view(table, i):
    """Agent ``i``'s own-type-first view of a ``(m,)*n + (n,)`` array: ``(m, S)``."""
    arr = np.moveaxis(np.asarray(table)[..., i], i, 0)
    return arr.reshape(arr.shape[0], -1)


def from_agent_view(columns, i, n, m):
    """Inverse of :func:`agent_view` for a single agent's component."""
    arr = np.asarray(columns).reshape((m,) * n)
    return np.moveaxis(arr, 0, i)


def opponent_profile(grid, n, i, col):
    """Opponent types (ascending agent order) of column ``col`` of agent ``i``'s view."""
    if n == 1:
        return ()
    idx = np.unravel_index(col, (len(grid),) * (n - 1))
    return tuple(float(grid.points[k]) for k in idx)


def opponent_column(grid, n, i, t_other):
    """Column index of an opponent profile in agent ``i``'s view."""
    t_other = tuple(t_other)
    if len(t_other) != n - 1:
        raise DomainError(f"expected {n - 1} opponent types, got {len(t_other)}")
    if n == 1:
        return 0
    idx = tuple(grid.index(t) for t in t_other)
    return int(np.ravel_multi_index(idx, (len(grid),) * (n - 1)))


def _check_agent(mech, i):
    if not 0 <= int(i) < mech.n_agents:
        raise DomainError(f"agent index {i} out of range for {mech.n_agents} agents")
    return int(i)


# ------------------------------------------------------------- feasibility
@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    regime: Feasibility
    violations: tuple = ()   # (type profile, slack) pairs; slack < 0 means violated
    min_slack: float = 0.0

    def to_dict(self):
        return {
            "feasible": self.feasible,
            "regime": self.regime.value,
            "min_slack": self.min_slack,
            "violations": [{"profile": list(p), "slack": s} for p, s in self.violations],
        }


def check_feasibility(mech, tol=FEAS_TOL):
    """Check every profile's allocation vector against the feasibility regime.

    Slack is ``1 - sum`` for SUM_LE_1 and ``-|sum - 1|`` for SUM_EQ_1.
    """
    if mech.feasibility is Feasibility.FREE:
        return FeasibilityVerdict(True, mech.feasibility)
    total = mech.allocation.sum(axis=-1)
    if mech.feasibility is Feasibility.SUM_LE_1:
        slack = 1.0 - total
    else:
        slack = -np.abs(total - 1.0)
    bad = np.argwhere(slack < -tol)
    pts = mech.grid.points
    violations = tuple(
        (tuple(float(pts[k]) for k in idx), float(slack[tuple(idx)])) for idx in bad)
    return FeasibilityVerdict(len(violations) == 0, mech.feasibility, violations,
                              float(np.min(slack)))


# ------------------------------------------------------------------ utility
def utility(model, mech, i, t_other, true_t, report_r):
    """``g(X_i(r, t_-i), t) - P_i(r, t_-i)`` for grid types."""
    i = _check_agent(mech, i)
    col = opponent_column(mech.grid, mech.n_agents, i, t_other)
    k_true = mech.grid.index(true_t)
    k_rep = mech.grid.index(report_r)
    x = agent_view(mech.allocation, i)[k_rep, col]
    p = agent_view(mech.payments, i)[k_rep, col]
    return float(model.g(x, mech.grid.points[k_true]) - p)


# --------------------------------------------------------------- deviations
@dataclass(frozen=True)
class Deviation:
    agent: int
    t_other: tuple
    true_type: float
    report: float
    loss: float

    def to_dict(self):
        return {"agent": self.agent, "t_other": list(self.t_other),
                "true_type": self.true_type, "report": self.report, "loss": self.loss}


@dataclass(frozen=True, eq=False)
class DeviationReport:
    """Brute-force incentive losses of every agent, opponent profile, type and report.

    ``losses[i][kt, kr, col]`` is the payoff of truth-telling minus the payoff
    of reporting ``grid[kr]`` for agent ``i`` of type ``grid[kt]`` against the
    opponent profile in column ``col``. Diagonal entries (``kr == kt``) are
    zero and are excluded from :attr:`min_loss`.
    """

    grid: TypeGrid
    n_agents: int
    losses: tuple = field(repr=False)

    def _masked(self, i):
        arr = self.losses[i]
        m = arr.shape[0]
        return np.where(np.eye(m, dtype=bool)[:, :, None], np.inf, arr)

    @property
    def min_loss(self):
        return float(min(np.min(self._masked(i)) for i in range(self.n_agents)))

    def deviation(self, i, kt, kr, col):
        return Deviation(i, opponent_profile(self.grid, self.n_agents, i, col),
                         float(self.grid.points[kt]), float(self.grid.points[kr]),
                         float(self.losses[i][kt, kr, col]))

    @property
    def witness(self):
        """The deviation attaining :attr:`min_loss` (first in index order)."""
        best = None
        for i in range(self.n_agents):
            masked = self._masked(i)
            flat = int(np.argmin(masked))
            if best is None or masked.flat[flat] < best[0]:
                best = (masked.flat[flat], i, np.unravel_index(flat, masked.shape))
        _, i, (kt, kr, col) = best
        return self.deviation(i, kt, kr, col)

    def below(self, threshold, strict=True, limit=10):
        """Up to ``limit`` deviations with loss < threshold (<= if not strict), worst first."""
        found = []
        for i in range(self.n_agents):
            masked = self._masked(i)
            hit = masked < threshold if strict else masked <= threshold
            for kt, kr, col in np.argwhere(hit):
                found.append((float(masked[kt, kr, col]), i, int(kt), int(kr), int(col)))
        found.sort()
        return tuple(self.deviation(i, kt, kr, col) for _, i, kt, kr, col in found[:limit])

    def entries(self):
        """Iterate over every off-diagonal deviation."""
        m = len(self.grid)
        for i in range(self.n_agents):
            cols = self.losses[i].shape[2]
            for col in range(cols):
                for kt in range(m):
                    for kr in range(m):
                        if kr != kt:
                            yield self.deviation(i, kt, kr, col)


def agent_losses(model, mech, i):
    """Loss array ``(m_true, m_report, S)`` for agent ``i``."""
    X = agent_view(mech.allocation, i)
    P = agent_view(mech.payments, i)
    t = mech.grid.points
    # payoff[kt, kr, col] = g(X[kr, col], t[kt]) - P[kr, col]
    payoff = model.g(X[None, :, :], t[:, None, None]) - P[None, :, :]
    truthful = np.diagonal(payoff, axis1=0, axis2=1).T  # (m, S)
    return truthful[:, None, :] - payoff


def deviation_losses(model, mech, executor=None):
    """Enumerate every unilateral misreport; see :class:`DeviationReport`.

    ``executor`` (a ``concurrent.futures`` executor) spreads agents across
    workers; results are collected in agent order either way.
    """
    agents = range(mech.n_agents)
    if executor is None:
        losses = [agent_losses(model, mech, i) for i in agents]
    else:
        losses = list(executor.map(lambda i: agent_losses(model, mech, i), agents))
    for arr in losses:
        arr.flags.writeable = False
    return DeviationReport(mech.grid, mech.n_agents, tuple(losses))


# -------------------------------------------------------------- generators
def make_second_price(n, grid):
    """Vickrey auction: highest type wins (ties split), pays the highest opposing type."""
    n = int(n)
    if n < 2:
        raise DomainError("a second-price auction needs at least two agents")
    grid = grid if isinstance(grid, TypeGrid) else TypeGrid(grid)
    m = len(grid)
    pts = grid.points
    types = np.stack(np.meshgrid(*([pts] * n), indexing="ij"), axis=-1)  # (m,)*n + (n,)
    top = types.max(axis=-1, keepdims=True)
    winners = types == top
    alloc = winners / winners.sum(axis=-1, keepdims=True)
    opposing = np.empty_like(types)
    for i in range(n):
        others = np.delete(types, i, axis=-1)
        opposing[..., i] = others.max(axis=-1)
    pay = alloc * opposing
    assert alloc.shape == (m,) * n + (n,)
    return MechanismTable(n, grid, alloc, pay, Feasibility.SUM_EQ_1)


def make_constant(n, grid, x, p, feasibility=Feasibility.SUM_LE_1):
    """Every agent always gets outcome ``x`` and pays ``p``."""
    n = int(n)
    grid = grid if isinstance(grid, TypeGrid) else TypeGrid(grid)
    feasibility = Feasibility(feasibility)
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"constant outcome must lie in [0, 1], got {x}")
    if feasibility is Feasibility.SUM_LE_1 and n * x > 1.0 + FEAS_TOL:
        raise FeasibilityError(f"{n} agents x {x} exceeds unit total")
    if feasibility is Feasibility.SUM_EQ_1 and abs(n * x - 1.0) > FEAS_TOL:
        raise FeasibilityError(f"{n} agents x {x} does not sum to one")
    shape = (len(grid),) * n + (n,)
    return MechanismTable(n, grid, np.full(shape, x), np.full(shape, float(p)), feasibility)


def make_posted_price(grid, price):
    """Single agent buys (outcome 1) iff its type is at least ``price`` and pays ``price``."""
    grid = grid if isinstance(grid, TypeGrid) else TypeGrid(grid)
    alloc = (grid.points >= float(price)).astype(float)[:, None]
    return MechanismTable(1, grid, alloc, alloc * float(price), Feasibility.SUM_LE_1)


def make_random_monotone(n, grid, seed, strict=False):
    """Random allocation whose slices are monotone in own type, with zero payments.

    Each agent's slices are drawn independently inside ``[0, 1/n]``, so the
    SUM_LE_1 constraint holds at every profile. With ``strict=True`` every
    increment is at least a tenth of the corresponding grid spacing; otherwise
    roughly a third of increments are exactly zero.
    """
    n = int(n)
    grid = grid if isinstance(grid, TypeGrid) else TypeGrid(grid)
    m = len(grid)
    rng = np.random.default_rng(seed)
    cols = m ** (n - 1)
    cap = 1.0 / n
    alloc = np.empty((m,) * n + (n,))
    h = grid.spacing
    for i in range(n):
        # weights[0] is the starting level, weights[-1] the unused headroom
        w = rng.random((m + 1, cols))
        if strict:
            if cap < 0.1:
                raise DomainError("strict random fixtures need at most 10 agents")
            budget = cap - 0.1
            floor = np.concatenate([[0.0], h / 10.0])
        else:
            w[1:m] *= rng.random((m - 1, cols)) >= 1.0 / 3.0
            budget = cap
            floor = np.zeros(m)
        w /= w.sum(axis=0, keepdims=True)
        steps = budget * w[:m] + floor[:, None]
        alloc[..., i] = from_agent_view(np.cumsum(steps, axis=0), i, n, m)
    return MechanismTable(n, grid, np.clip(alloc, 0.0, 1.0), np.zeros_like(alloc),
                          Feasibility.SUM_LE_1)
