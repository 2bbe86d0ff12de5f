"""Brute-force strategy-proofness, monotonicity and individual-rationality checks.

Enumeration over the grid is the ground truth. :func:`characterize` runs the
monotonicity/envelope characterisation next to it and reports any disagreement
as an internal inconsistency, which always indicates a bug in this package.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .envelope import DEFAULT_INTERPOLATION, ENVELOPE_GATE, envelope_residual
from .errors import DomainError, PreconditionError
from .mechanism import agent_view, deviation_losses, opponent_profile

DEFAULT_TOL = 1e-9
STRICT_MONOTONE_MARGIN = 1e-12
MAX_WITNESSES = 10


class Monotonicity(enum.IntEnum):
    NON_MONOTONE = 0
    WEAK = 1
    STRICT = 2


@dataclass(frozen=True)
class MonotonicityReport:
    mode: Monotonicity
    margin: float
    classes: tuple = field(repr=False)    # per agent: int array of Monotonicity, one per slice
    worst: Monotonicity = Monotonicity.STRICT
    min_increment: float = np.inf
    witnesses: tuple = ()                 # (agent, t_other, lower type, upper type, increment)

    @property
    def passed(self):
        return self.worst >= self.mode

    def to_dict(self):
        return {
            "mode": self.mode.name,
            "margin": self.margin,
            "passed": self.passed,
            "worst": self.worst.name,
            "min_increment": self.min_increment,
            "witnesses": [
                {"agent": a, "t_other": list(o), "lower": lo, "upper": hi, "increment": d}
                for a, o, lo, hi, d in self.witnesses
            ],
        }


def check_monotonicity(mech, mode=Monotonicity.WEAK, margin=None):
    """Classify every slice ``X_i(., t_-i)`` over consecutive grid points.

    A slice is STRICT when every increment exceeds ``strict_margin`` (1e-12) and
    WEAK when every increment is at least ``-margin``. For ``mode=STRICT`` the
    ``margin`` argument replaces the strict threshold. Witnesses are the
    offending consecutive pairs for the requested mode.
    """
    mode = Monotonicity(mode) if not isinstance(mode, str) else Monotonicity[mode.upper()]
    if mode is Monotonicity.NON_MONOTONE:
        raise DomainError("mode must be WEAK or STRICT")
    if margin is None:
        margin = STRICT_MONOTONE_MARGIN if mode is Monotonicity.STRICT else 0.0
    if margin < 0:
        raise DomainError("margin must be nonnegative")
    strict_margin = margin if mode is Monotonicity.STRICT else STRICT_MONOTONE_MARGIN
    weak_slack = margin if mode is Monotonicity.WEAK else 0.0

    n, pts = mech.n_agents, mech.grid.points
    classes, witnesses = [], []
    worst, min_inc = Monotonicity.STRICT, np.inf
    for i in range(n):
        d = np.diff(agent_view(mech.allocation, i), axis=0)   # (m-1, S)
        cls = np.full(d.shape[1], Monotonicity.NON_MONOTONE, dtype=int)
        weak = np.all(d >= -weak_slack, axis=0)
        strict = np.all(d > strict_margin, axis=0)
        cls[weak] = Monotonicity.WEAK
        cls[strict] = Monotonicity.STRICT
        classes.append(cls)
        worst = min(worst, Monotonicity(int(cls.min())))
        min_inc = min(min_inc, float(d.min()))
        bad = (d <= strict_margin) if mode is Monotonicity.STRICT else (d < -weak_slack)
        for k, col in np.argwhere(bad):
            if len(witnesses) < MAX_WITNESSES:
                witnesses.append((i, opponent_profile(mech.grid, n, i, col), float(pts[k]),
                                  float(pts[k + 1]), float(d[k, col])))
    return MonotonicityReport(mode, float(margin), tuple(classes), worst, min_inc,
                              tuple(witnesses))


@dataclass(frozen=True)
class VerificationResult:
    weak_sp: bool
    strict_sp: bool
    min_loss: float
    strict_margin: float
    tol: float
    strict_tol: float
    monotonicity: Monotonicity
    envelope_residual: float
    weak_witnesses: tuple = ()
    strict_witnesses: tuple = ()
    min_loss_witness: Optional[object] = None

    @property
    def witnesses(self):
        """Deviations proving the first failed verdict (weak before strict)."""
        if not self.weak_sp:
            return self.weak_witnesses
        if not self.strict_sp:
            return self.strict_witnesses
        return ()

    def to_dict(self):
        return {
            "weak_sp": self.weak_sp,
            "strict_sp": self.strict_sp,
            "min_loss": self.min_loss,
            "strict_margin": self.strict_margin,
            "tol": self.tol,
            "strict_tol": self.strict_tol,
            "monotonicity": self.monotonicity.name,
            "envelope_residual": self.envelope_residual,
            "weak_witnesses": [w.to_dict() for w in self.weak_witnesses],
            "strict_witnesses": [w.to_dict() for w in self.strict_witnesses],
            "min_loss_witness": None if self.min_loss_witness is None
            else self.min_loss_witness.to_dict(),
        }


def verify(model, mech, tol=DEFAULT_TOL, strict_tol=None, interpolation=DEFAULT_INTERPOLATION,
           executor=None):
    """Enumerate all misreports and return both strategy-proofness verdicts.

    Weak SP holds iff every loss is ``>= -tol``; strict SP iff every loss over
    reports different from the truth is ``> strict_tol`` (defaults to ``tol``).
    """
    if tol < 0:
        raise DomainError("tol must be nonnegative")
    strict_tol = tol if strict_tol is None else strict_tol
    report = deviation_losses(model, mech, executor)
    min_loss = report.min_loss
    weak = min_loss >= -tol
    strict = min_loss > strict_tol
    mono = check_monotonicity(mech, Monotonicity.WEAK).worst
    return VerificationResult(
        weak_sp=bool(weak),
        strict_sp=bool(strict),
        min_loss=min_loss,
        strict_margin=min_loss,
        tol=tol,
        strict_tol=strict_tol,
        monotonicity=mono,
        envelope_residual=envelope_residual(model, mech, interpolation),
        weak_witnesses=() if weak else report.below(-tol, limit=MAX_WITNESSES),
        strict_witnesses=() if strict else report.below(strict_tol, strict=False,
                                                          limit=MAX_WITNESSES),
        min_loss_witness=report.witness,
    )


def check_weak_sp(model, mech, tol=DEFAULT_TOL, **kwargs):
    """Weak strategy-proofness: truth-telling is never worse by more than ``tol``."""
    return verify(model, mech, tol=tol, **kwargs)


def check_strict_sp(model, mech, tol=DEFAULT_TOL, **kwargs):
    """Strict strategy-proofness: every misreport loses more than ``tol``."""
    return verify(model, mech, tol=tol, strict_tol=tol, **kwargs)


@dataclass(frozen=True)
class CharacterizationReport:
    verification: VerificationResult
    weak_monotonicity: MonotonicityReport
    strict_monotonicity: MonotonicityReport
    envelope_residual: float
    interpolation: str
    implications: dict
    gate: float = ENVELOPE_GATE

    @property
    def consistent(self):
        return all(self.implications.values())

    @property
    def violated(self):
        return tuple(k for k, ok in self.implications.items() if not ok)

    def to_dict(self):
        return {
            "consistent": self.consistent,
            "status": "OK" if self.consistent else "INTERNAL_INCONSISTENCY",
            "violated": list(self.violated),
            "implications": dict(self.implications),
            "envelope_residual": self.envelope_residual,
            "interpolation": self.interpolation,
            "gate": self.gate,
            "weak_monotone": self.weak_monotonicity.passed,
            "strict_monotone": self.strict_monotonicity.passed,
            "verification": self.verification.to_dict(),
        }


def characterize(model, mech, tol=DEFAULT_TOL, strict_tol=None,
                 interpolation=DEFAULT_INTERPOLATION, executor=None):
    """Cross-check brute-force verdicts against the monotonicity characterisation.

    Under step interpolation the extended allocation is flat inside each grid
    cell, so it is never strictly increasing and the strict forward implication
    has a false premise there.
    """
    res = verify(model, mech, tol, strict_tol, interpolation, executor)
    weak_m = check_monotonicity(mech, Monotonicity.WEAK)
    strict_m = check_monotonicity(mech, Monotonicity.STRICT)
    env_ok = res.envelope_residual <= ENVELOPE_GATE
    strict_premise = strict_m.passed and env_ok and interpolation == "linear"
    implications = {
        "strict_monotone_and_envelope_implies_strict_sp": (not strict_premise) or res.strict_sp,
        "weak_monotone_and_envelope_implies_weak_sp": (not (weak_m.passed and env_ok)) or res.weak_sp,
        "strict_sp_implies_strict_monotone": (not res.strict_sp) or strict_m.passed,
        "weak_sp_implies_weak_monotone": (not res.weak_sp) or weak_m.passed,
    }
    return CharacterizationReport(res, weak_m, strict_m, res.envelope_residual, interpolation,
                                  implications)


@dataclass(frozen=True)
class IRReport:
    outside: tuple
    reduction_pass: bool
    direct_pass: bool
    reduction_min_slack: float
    direct_min_slack: float
    reduction_witness: Optional[dict] = None
    direct_witness: Optional[dict] = None

    @property
    def agree(self):
        return self.reduction_pass == self.direct_pass

    @property
    def passed(self):
        return self.reduction_pass and self.direct_pass

    def to_dict(self):
        d = dict(self.__dict__)
        d["outside"] = list(self.outside)
        d["agree"] = self.agree
        d["passed"] = self.passed
        return d


def check_ir(model, mech, outside=0.0, tol=DEFAULT_TOL):
    """Interim individual rationality against per-agent outside options.

    Two routes are reported: the type-zero reduction (the lowest type's
    truthful payoff covers the outside option for every opponent profile) and
    the direct check at every type. For a weakly strategy-proof mechanism
    whose payoff is nondecreasing in type they agree.
    """
    n = mech.n_agents
    w = np.broadcast_to(np.asarray(outside, dtype=float), (n,))
    if deviation_losses(model, mech).min_loss < -tol:
        raise PreconditionError("individual rationality is only checked for weakly SP mechanisms")
    pts = mech.grid.points

    def _min(i, U):
        k, col = np.unravel_index(int(np.argmin(U)), U.shape)
        return float(U[k, col] - w[i]), {
            "agent": i, "t_other": list(opponent_profile(mech.grid, n, i, col)),
            "type": float(pts[k]), "utility": float(U[k, col]), "outside": float(w[i])}

    red_slack, red_wit = np.inf, None
    dir_slack, dir_wit = np.inf, None
    for i in range(n):
        X = agent_view(mech.allocation, i)
        P = agent_view(mech.payments, i)
        U = model.g(X, pts[:, None]) - P
        s, wit = _min(i, U[:1])
        if s < red_slack:
            red_slack, red_wit = s, wit
        s, wit = _min(i, U)
        if s < dir_slack:
            dir_slack, dir_wit = s, wit
    red_ok, dir_ok = red_slack >= -tol, dir_slack >= -tol
    return IRReport(tuple(float(v) for v in w), bool(red_ok), bool(dir_ok), red_slack,
                    dir_slack, None if red_ok else red_wit, None if dir_ok else dir_wit)
