"""Principal objectives: expected revenue, efficiency and welfare over a type prior.

The prior is a product of per-agent probability vectors on the grid. For a
per-agent flow ``pi(x, p, t)`` the objective is::

    Pi(X, P) = sum_t F(t) * sum_i pi(X_i(t), P_i(t), t_i)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError
from .strictify import closeness


class ObjectiveKind(str, enum.Enum):
    REVENUE = "revenue"
    EFFICIENCY = "efficiency"
    WELFARE = "welfare"
    CUSTOM = "custom"


# Lipschitz constant of pi in (x, p) under the sup-norm, per agent
LIPSCHITZ = {ObjectiveKind.REVENUE: 1.0, ObjectiveKind.EFFICIENCY: 1.0, ObjectiveKind.WELFARE: 2.0}


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """Objective kind plus a per-agent prior.

    ``weights`` has shape ``(n, m)`` (or ``(m,)``, shared by all agents);
    ``None`` means uniform. ``CUSTOM`` objectives use ``pi = cx * x + cp * p``
    with coefficient tables ``cx`` and ``cp`` shaped like the allocation.
    """

    kind: ObjectiveKind = ObjectiveKind.REVENUE
    weights: Optional[np.ndarray] = field(default=None, repr=False)
    cx: Optional[np.ndarray] = field(default=None, repr=False)
    cp: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ObjectiveKind(self.kind))
        if self.kind is ObjectiveKind.CUSTOM and (self.cx is None or self.cp is None):
            raise DomainError("a custom objective needs cx and cp coefficient tables")

    def prior(self, n, m):
        if self.weights is None:
            return np.full((n, m), 1.0 / m)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim == 1:
            w = np.broadcast_to(w, (n, w.shape[0]))
        if w.shape != (n, m):
            raise DomainError(f"prior weights shape {w.shape} != {(n, m)}")
        if np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-12):
            raise DomainError("each agent's prior weights must be nonnegative and sum to 1")
        return w

    def lipschitz(self):
        if self.kind is ObjectiveKind.CUSTOM:
            return float(np.max(np.abs(self.cx)) + np.max(np.abs(self.cp)))
        return LIPSCHITZ[self.kind]


def profile_weights(spec, n, m):
    """Joint probability of every profile, shape ``(m,) * n``."""
    w = spec.prior(n, m)
    joint = w[0]
    for i in range(1, n):
        joint = np.multiply.outer(joint, w[i])
    return joint


def flows(mech, spec):
    """Per-profile, per-agent flow ``pi``; same shape as the allocation."""
    X, P = mech.allocation, mech.payments
    kind = spec.kind
    if kind is ObjectiveKind.REVENUE:
        return P.copy()
    own = np.stack(np.meshgrid(*([mech.grid.points] * mech.n_agents), indexing="ij"), axis=-1)
    if kind is ObjectiveKind.EFFICIENCY:
        return X * own
    if kind is ObjectiveKind.WELFARE:
        return X * own - P
    cx, cp = np.asarray(spec.cx, dtype=float), np.asarray(spec.cp, dtype=float)
    if cx.shape != X.shape or cp.shape != X.shape:
        raise DomainError(f"custom coefficient tables must have shape {X.shape}")
    return cx * X + cp * P


def evaluate_objective(mech, spec=None):
    """Expected objective of ``mech`` under the prior held by ``spec``."""
    spec = spec or ObjectiveSpec()
    F = profile_weights(spec, mech.n_agents, mech.m)
    return float(np.sum(F * flows(mech, spec).sum(axis=-1)))


@dataclass(frozen=True)
class GapReport:
    kind: ObjectiveKind
    original: float
    strictified: float
    gap: float
    epsilon: float
    lipschitz: float
    bound: float

    @property
    def within_bound(self):
        return abs(self.gap) <= self.bound + 1e-12

    def to_dict(self):
        d = dict(self.__dict__)
        d["kind"] = self.kind.value
        d["within_bound"] = self.within_bound
        return d


def objective_gap(original, strictified, spec=None):
    """Objective loss from replacing ``original`` by ``strictified``.

    ``strictified`` may be a :class:`~strictsp.strictify.StrictifiedMechanism`
    or a plain table. The bound ``L * n * eps`` uses the sup-norm distance
    ``eps`` between the two tables actually compared.
    """
    spec = spec or ObjectiveSpec()
    other = getattr(strictified, "mech", strictified)
    dx, dp = closeness(original, other)
    eps = max(dx, dp)
    a, b = evaluate_objective(original, spec), evaluate_objective(other, spec)
    L = spec.lipschitz()
    return GapReport(spec.kind, a, b, a - b, eps, L, L * original.n_agents * eps)
