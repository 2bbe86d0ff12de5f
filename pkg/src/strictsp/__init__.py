"""Strict strategy-proofness for one-dimensional private-values mechanisms.

Grid-tabulated direct mechanisms, brute-force verification of weak and strict
strategy-proofness, envelope-formula payments, and a small perturbation that
makes any weakly strategy-proof mechanism strictly strategy-proof.
"""

__version__ = "0.1.0"

from .envelope import (
    AllocationSlice,
    deviation_loss_formula,
    deviation_loss_table,
    envelope_payments,
    envelope_residual,
    integrate_g2_along,
)
from .errors import (
    ConvergenceError,
    DomainError,
    EnvelopeContractError,
    FeasibilityError,
    MechanismError,
    MechanismFormatError,
    PreconditionError,
    QuadratureError,
)
from .mechanism import (
    DeviationReport,
    Feasibility,
    MechanismTable,
    TypeGrid,
    check_feasibility,
    deviation_losses,
    make_constant,
    make_posted_price,
    make_random_monotone,
    make_second_price,
    utility,
)
from .objective import ObjectiveKind, ObjectiveSpec, evaluate_objective, objective_gap
from .payoff import PayoffFamily, PayoffModel, check_regularity, eval_g, eval_g2
from .strictify import MixingRule, StrictifiedMechanism, closeness, perturb_allocation, strictify
from .verify import (
    Monotonicity,
    characterize,
    check_ir,
    check_monotonicity,
    check_strict_sp,
    check_weak_sp,
    verify,
)
