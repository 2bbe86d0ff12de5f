"""Mechanism JSON files and CSV export.

A mechanism file looks like::

    {
      "agents": 2,
      "grid": [0, 0.5, 1],
      "feasibility": "sum_eq_1",
      "allocation": [[[...], ...], ...],   # shape (m,)*n + (n,)
      "payments":   [[[...], ...], ...],
      "payoff": {"family": "product", "params": {}}
    }

Tabulated payoffs add ``"samples": {"x": [...], "t": [...], "g2": [[...]],
"g0": [...]}`` and may declare ``"params": {"g2_bound": ...}``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DomainError, MechanismFormatError
from .mechanism import Feasibility, MechanismTable, TypeGrid
from .payoff import PayoffFamily, PayoffModel


def payoff_to_dict(model):
    d = {"family": model.family.value, "params": model.params}
    if model.family is PayoffFamily.TABULATED:
        d["samples"] = {
            "x": model.x_lattice.tolist(),
            "t": model.t_lattice.tolist(),
            "g2": model.g2_samples.tolist(),
            "g0": model.g0_samples.tolist(),
        }
    return d


def payoff_from_dict(d):
    if not isinstance(d, dict) or "family" not in d:
        raise MechanismFormatError("expected an object with a 'family' key", "payoff")
    params = d.get("params") or {}
    try:
        family = PayoffFamily(str(d["family"]).lower())
    except ValueError:
        raise MechanismFormatError(f"unknown family {d['family']!r}", "payoff.family") from None
    try:
        if family is PayoffFamily.PRODUCT:
            return PayoffModel.product()
        if family is PayoffFamily.POWER:
            return PayoffModel.power(params["a"])
        if family is PayoffFamily.QUADRATIC:
            return PayoffModel.quadratic(params["c"])
        s = d.get("samples")
        if not isinstance(s, dict):
            raise MechanismFormatError("tabulated payoff needs 'samples'", "payoff.samples")
        return PayoffModel.tabulated(s["x"], s["t"], s["g2"], s.get("g0"), params.get("g2_bound"))
    except KeyError as exc:
        raise MechanismFormatError(f"missing parameter {exc.args[0]!r}", "payoff.params") from None
    except DomainError as exc:
        raise MechanismFormatError(str(exc), "payoff") from None


def mechanism_to_dict(mech, model=None):
    d = {
        "agents": mech.n_agents,
        "grid": mech.grid.points.tolist(),
        "feasibility": mech.feasibility.value,
        "allocation": mech.allocation.tolist(),
        "payments": mech.payments.tolist(),
    }
    if model is not None:
        d["payoff"] = payoff_to_dict(model)
    return d


def _array_field(d, key, shape):
    if key not in d:
        raise MechanismFormatError("missing field", key)
    try:
        arr = np.array(d[key], dtype=float)
    except (TypeError, ValueError):
        raise MechanismFormatError("must be a nested numeric array", key) from None
    if arr.shape != shape:
        raise MechanismFormatError(f"shape {arr.shape} does not match expected {shape}", key)
    return arr


def mechanism_from_dict(d):
    """Parse a mechanism document; returns ``(mechanism, payoff model)``.

    A missing ``"payoff"`` key means the product payoff.
    """
    if not isinstance(d, dict):
        raise MechanismFormatError("top level must be a JSON object")
    try:
        n = int(d["agents"])
    except KeyError:
        raise MechanismFormatError("missing field", "agents") from None
    except (TypeError, ValueError):
        raise MechanismFormatError("must be a positive integer", "agents") from None
    if n < 1:
        raise MechanismFormatError("must be a positive integer", "agents")
    try:
        grid = TypeGrid(d["grid"])
    except KeyError:
        raise MechanismFormatError("missing field", "grid") from None
    except (DomainError, TypeError, ValueError) as exc:
        raise MechanismFormatError(str(exc), "grid") from None
    try:
        feas = Feasibility(str(d.get("feasibility", "free")).lower())
    except ValueError:
        raise MechanismFormatError(f"unknown regime {d.get('feasibility')!r}", "feasibility") from None
    shape = (len(grid),) * n + (n,)
    alloc = _array_field(d, "allocation", shape)
    pay = _array_field(d, "payments", shape)
    try:
        mech = MechanismTable(n, grid, alloc, pay, feas)
    except DomainError as exc:
        raise MechanismFormatError(str(exc), "allocation") from None
    model = payoff_from_dict(d["payoff"]) if "payoff" in d else PayoffModel.product()
    return mech, model


def load_mechanism(path):
    """Read a mechanism file; JSON syntax errors report the offending line."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MechanismFormatError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return mechanism_from_dict(doc)


def save_mechanism(path, mech, model=None):
    Path(path).write_text(json.dumps(mechanism_to_dict(mech, model), indent=1) + "\n")


def export_csv(path, mech):
    """One row per profile: ``t1..tn, X1..Xn, P1..Pn``."""
    n = mech.n_agents
    header = [f"t{i + 1}" for i in range(n)] + [f"X{i + 1}" for i in range(n)] + \
             [f"P{i + 1}" for i in range(n)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx, types in mech.profiles():
            writer.writerow([repr(v) for v in types]
                            + [repr(float(v)) for v in mech.allocation[idx]]
                            + [repr(float(v)) for v in mech.payments[idx]])
