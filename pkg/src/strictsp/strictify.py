"""Turn a weakly strategy-proof mechanism into a strictly strategy-proof one.

The allocation is mixed with a rule that is strictly increasing in own type::

    X_d = d * mix(t) + (1 - d) * X

and payments are recomputed from the envelope formula, keeping the original
type-zero payments. Two mixing rules are available:

PROPORTIONAL
    ``t_i / sum_j t_j`` (``1/n`` at the all-zero profile). Preserves an exact
    unit total, but is constant in own type on the slice where every opponent
    reports 0, so it can leave that slice flat.
LINEAR
    ``t_i / n``. Strictly increasing on every slice; the total of the mixing
    term is at most 1, so it respects SUM_LE_1 but not SUM_EQ_1.

The mixing weight ``d`` is found by halving from ``min(eps, 0.5)`` until the
payments are within ``eps`` of the reference payments in sup-norm.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .envelope import (
    DEFAULT_INTERPOLATION,
    ENVELOPE_GATE,
    base_row_of,
    envelope_payments,
    envelope_residual,
)
from .errors import ConvergenceError, DomainError, FeasibilityError, PreconditionError
from .mechanism import Feasibility, check_feasibility, deviation_losses
from .payoff import check_regularity
from .verify import DEFAULT_TOL, Monotonicity, check_monotonicity, verify

log = logging.getLogger(__name__)

MAX_START_DELTA = 0.5
MIN_DELTA = 1e-12


class MixingRule(str, enum.Enum):
    PROPORTIONAL = "proportional"
    LINEAR = "linear"


def mixing_term(mech, rule):
    """The strictly increasing allocation that gets mixed in, same shape as ``allocation``."""
    rule = MixingRule(rule)
    n = mech.n_agents
    pts = mech.grid.points
    types = np.stack(np.meshgrid(*([pts] * n), indexing="ij"), axis=-1)
    if rule is MixingRule.LINEAR:
        return types / n
    total = types.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = types / total
    return np.where(total > 0, share, 1.0 / n)


def perturb_allocation(mech, delta, rule=MixingRule.LINEAR):
    """Mix the allocation toward ``rule`` with weight ``delta``; payments are copied."""
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    rule = MixingRule(rule)
    if rule is MixingRule.LINEAR and mech.feasibility is Feasibility.SUM_EQ_1:
        raise FeasibilityError("the linear mixing rule cannot keep a unit total allocation")
    mixed = delta * mixing_term(mech, rule) + (1.0 - delta) * mech.allocation
    return mech.replace(allocation=np.clip(mixed, 0.0, 1.0))


def closeness(a, b):
    """Sup-norm allocation and payment distances between two mechanisms on one grid."""
    if a.n_agents != b.n_agents or a.grid != b.grid:
        raise DomainError("mechanisms must share agents and grid")
    return (float(np.max(np.abs(a.allocation - b.allocation))),
            float(np.max(np.abs(a.payments - b.payments))))


@dataclass(frozen=True)
class StrictifiedMechanism:
    mech: object = field(repr=False)
    reference: object = field(repr=False)   # the mechanism closeness is measured against
    delta: float
    rule: MixingRule
    requested_rule: MixingRule
    epsilon: float
    sup_dx: float
    sup_dp: float
    sup_dp_input: float                     # payment distance to the untouched input
    strict_sp: bool
    strict_margin: float
    feasible: bool
    interpolation: str
    canonicalized: bool
    heuristic: bool
    fallback: bool
    relaxed_feasibility: bool
    input_residual: float
    attempts: tuple = ()                    # (delta, sup_dx, sup_dp) per candidate tried
    type_zero_utility: tuple = ()           # min type-0 payoff (input, output)

    def to_dict(self):
        return {
            "delta": self.delta,
            "rule": self.rule.value,
            "requested_rule": self.requested_rule.value,
            "epsilon": self.epsilon,
            "sup_dx": self.sup_dx,
            "sup_dp": self.sup_dp,
            "sup_dp_input": self.sup_dp_input,
            "strict_sp": self.strict_sp,
            "strict_margin": self.strict_margin,
            "feasible": self.feasible,
            "feasibility": self.mech.feasibility.value,
            "interpolation": self.interpolation,
            "canonicalized": self.canonicalized,
            "heuristic": self.heuristic,
            "fallback": self.fallback,
            "relaxed_feasibility": self.relaxed_feasibility,
            "input_residual": self.input_residual,
            "attempts": [list(a) for a in self.attempts],
            "type_zero_utility": list(self.type_zero_utility),
        }


def _type_zero_utility(model, mech):
    """Smallest truthful payoff of a type-0 agent over all agents and opponent profiles."""
    lows = []
    for i in range(mech.n_agents):
        idx = [slice(None)] * mech.n_agents
        idx[i] = 0
        x = mech.allocation[tuple(idx) + (i,)]
        p = mech.payments[tuple(idx) + (i,)]
        lows.append(float(np.min(model.g(x, 0.0) - p)))
    return min(lows)


def strictify(model, mech, epsilon, rule=MixingRule.LINEAR, canonicalize=True,
              interpolation=DEFAULT_INTERPOLATION, tol=DEFAULT_TOL, min_delta=MIN_DELTA):
    """Build a strictly strategy-proof mechanism uniformly ``epsilon``-close to ``mech``.

    ``mech`` must be feasible and weakly strategy-proof. Closeness of payments
    is measured against the envelope payments of the input (its own type-zero
    payments kept) unless ``canonicalize`` is false, in which case the input
    payments are used; if they are not envelope-consistent the result is
    flagged ``heuristic``.

    A SUM_EQ_1 input combined with the LINEAR rule yields a SUM_LE_1 output
    (``relaxed_feasibility``). With the PROPORTIONAL rule, a candidate whose
    allocation is not strictly monotone on every slice triggers a permanent
    switch to LINEAR (``fallback``).

    Raises :class:`PreconditionError` for infeasible or manipulable inputs and
    :class:`ConvergenceError` when ``delta`` drops below ``min_delta``.
    """
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    requested = rule = MixingRule(rule)
    feas = check_feasibility(mech)
    if not feas.feasible:
        raise PreconditionError(f"input mechanism is infeasible (min slack {feas.min_slack:.3e})")
    min_loss = deviation_losses(model, mech).min_loss
    if min_loss < -tol:
        raise PreconditionError(f"input mechanism is not weakly strategy-proof (min loss {min_loss:.3e})")

    residual = envelope_residual(model, mech, interpolation)
    canonical = envelope_payments(model, mech, interpolation=interpolation)
    heuristic = not canonicalize and residual > ENVELOPE_GATE
    reference = canonical if canonicalize else mech
    if heuristic:
        log.warning("input payments are not envelope-consistent (residual %.3e); "
                    "closeness is measured against them anyway", residual)
    base = base_row_of(mech)

    def target(r):
        if r is MixingRule.LINEAR and mech.feasibility is Feasibility.SUM_EQ_1:
            return mech.replace(feasibility=Feasibility.SUM_LE_1), True
        return mech, False

    source, relaxed = target(rule)
    fallback = False
    attempts = []
    delta = min(epsilon, MAX_START_DELTA)
    while delta >= min_delta:
        X_d = perturb_allocation(source, delta, rule)
        if rule is MixingRule.PROPORTIONAL and not check_monotonicity(X_d, Monotonicity.STRICT).passed:
            log.info("proportional mixing leaves a flat slice at delta=%g; switching to linear", delta)
            rule, fallback = MixingRule.LINEAR, True
            source, relaxed = target(rule)
            continue
        out = envelope_payments(model, X_d, base_row=base, interpolation=interpolation)
        dx, dp = closeness(reference, out)
        attempts.append((delta, dx, dp))
        if dx <= epsilon and dp <= epsilon:
            break
        delta *= 0.5
    else:
        reg = check_regularity(model)
        raise ConvergenceError(
            f"no delta >= {min_delta:g} brings payments within {epsilon:g}",
            diagnostics={"attempts": attempts, "g2_modulus": reg.modulus_of_continuity,
                         "modulus_spacing": reg.modulus_spacing})

    res = verify(model, out, tol=tol, interpolation=interpolation)
    return StrictifiedMechanism(
        mech=out,
        reference=reference,
        delta=delta,
        rule=rule,
        requested_rule=requested,
        epsilon=epsilon,
        sup_dx=dx,
        sup_dp=dp,
        sup_dp_input=closeness(mech, out)[1],
        strict_sp=res.strict_sp,
        strict_margin=res.strict_margin,
        feasible=check_feasibility(out).feasible,
        interpolation=interpolation,
        canonicalized=bool(canonicalize),
        heuristic=heuristic,
        fallback=fallback,
        relaxed_feasibility=relaxed,
        input_residual=residual,
        attempts=tuple(attempts),
        type_zero_utility=(_type_zero_utility(model, mech), _type_zero_utility(model, out)),
    )
