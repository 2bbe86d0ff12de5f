"""Gross payoff models g(x, t) and their type derivatives g2(x, t).

An agent with type ``t`` who receives physical outcome ``x`` and pays ``p``
gets ``g(x, t) - p``. Every model here is defined on the unit square and has a
bounded type derivative that is strictly increasing in ``x`` (strict
single-crossing); :func:`check_regularity` measures both properties on a
lattice.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError

UNIT_SLACK = 1e-12
SINGLE_CROSSING_THRESHOLD = 1e-12
FD_STEP = 1e-5
FD_RTOL = 1e-6
POWER_MAX_EXPONENT = 8.0

# 5-point Gauss-Legendre nodes/weights on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class PayoffFamily(str, enum.Enum):
    PRODUCT = "product"
    POWER = "power"
    QUADRATIC = "quadratic"
    TABULATED = "tabulated"


def as_unit(value, name="value"):
    """Return ``value`` as a float array inside [0, 1], clipping rounding noise."""
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < -UNIT_SLACK) or np.any(arr > 1.0 + UNIT_SLACK):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return np.clip(arr, 0.0, 1.0)


def _interp_index(lattice, v):
    """Cell index and in-cell weight of ``v`` on an ascending lattice."""
    idx = np.clip(np.searchsorted(lattice, v, side="right") - 1, 0, len(lattice) - 2)
    w = (v - lattice[idx]) / (lattice[idx + 1] - lattice[idx])
    return idx, w


@dataclass(frozen=True, eq=False)
class PayoffModel:
    """A gross payoff function on [0, 1]^2.

    Use the constructors :meth:`product`, :meth:`power`, :meth:`quadratic` and
    :meth:`tabulated` rather than instantiating directly.
    """

    family: PayoffFamily
    a: float = 1.0
    c: float = 0.0
    g2_bound: float = 1.0
    x_lattice: Optional[np.ndarray] = field(default=None, repr=False)
    t_lattice: Optional[np.ndarray] = field(default=None, repr=False)
    g2_samples: Optional[np.ndarray] = field(default=None, repr=False)
    g0_samples: Optional[np.ndarray] = field(default=None, repr=False)

    # ----------------------------------------------------------- constructors
    @classmethod
    def product(cls):
        """``g(x, t) = x t``, the single-unit auction payoff."""
        return cls(PayoffFamily.PRODUCT)

    @classmethod
    def power(cls, a):
        """``g(x, t) = x**a * t`` for ``0 < a <= 8``."""
        a = float(a)
        if not 0.0 < a <= POWER_MAX_EXPONENT:
            raise DomainError(f"power exponent must lie in (0, {POWER_MAX_EXPONENT}], got {a}")
        return cls(PayoffFamily.POWER, a=a)

    @classmethod
    def quadratic(cls, c):
        """``g(x, t) = x t - c x**2`` for ``c >= 0``."""
        c = float(c)
        if c < 0.0:
            raise DomainError(f"quadratic cost must be nonnegative, got {c}")
        return cls(PayoffFamily.QUADRATIC, c=c)

    @classmethod
    def tabulated(cls, x_lattice, t_lattice, g2_samples, g0_samples=None, g2_bound=None):
        """Payoff given by samples of g2 on a rectangular lattice.

        ``g2_samples[j, k]`` is g2(x_lattice[j], t_lattice[k]); g2 is bilinearly
        interpolated. ``g0_samples[j]`` is g(x_lattice[j], 0), linearly
        interpolated in x (zeros by default). g(x, t) is reconstructed as
        g(x, 0) plus the integral of g2(x, .) from 0 to t, which is exact for a
        piecewise-linear integrand.
        """
        xs = np.array(x_lattice, dtype=float)
        ts = np.array(t_lattice, dtype=float)
        g2s = np.array(g2_samples, dtype=float)
        g0s = np.zeros(len(xs)) if g0_samples is None else np.array(g0_samples, dtype=float)
        for name, lat in (("x_lattice", xs), ("t_lattice", ts)):
            if lat.ndim != 1 or len(lat) < 2:
                raise DomainError(f"{name} needs at least two points")
            if lat[0] != 0.0 or lat[-1] != 1.0 or np.any(np.diff(lat) <= 0):
                raise DomainError(f"{name} must ascend strictly from 0 to 1")
        if g2s.shape != (len(xs), len(ts)):
            raise DomainError(f"g2_samples shape {g2s.shape} != {(len(xs), len(ts))}")
        if g0s.shape != (len(xs),):
            raise DomainError(f"g0_samples shape {g0s.shape} != {(len(xs),)}")
        if not np.all(np.isfinite(g2s)) or not np.all(np.isfinite(g0s)):
            raise DomainError("tabulated samples must be finite")
        observed = float(np.max(np.abs(g2s)))
        if g2_bound is None:
            g2_bound = observed
        elif observed > g2_bound:
            raise DomainError(f"declared g2_bound {g2_bound} is below max |g2| sample {observed}")
        for arr in (xs, ts, g2s, g0s):
            arr.flags.writeable = False
        return cls(PayoffFamily.TABULATED, g2_bound=float(g2_bound), x_lattice=xs,
                   t_lattice=ts, g2_samples=g2s, g0_samples=g0s)

    # -------------------------------------------------------------- properties
    @property
    def g2_depends_on_type(self):
        """False when g2(x, t) does not vary with t (all builtin families)."""
        return self.family is PayoffFamily.TABULATED

    @property
    def params(self):
        if self.family is PayoffFamily.POWER:
            return {"a": self.a}
        if self.family is PayoffFamily.QUADRATIC:
            return {"c": self.c}
        if self.family is PayoffFamily.TABULATED:
            return {"g2_bound": self.g2_bound}
        return {}

    # -------------------------------------------------------------- evaluation
    def g(self, x, t):
        """Vectorised gross payoff."""
        x, t = as_unit(x, "x"), as_unit(t, "t")
        fam = self.family
        if fam is PayoffFamily.PRODUCT:
            return x * t
        if fam is PayoffFamily.POWER:
            return x ** self.a * t
        if fam is PayoffFamily.QUADRATIC:
            return x * t - self.c * x * x
        return self._tab_g(x, t)

    def g2(self, x, t):
        """Vectorised derivative of g in the type argument."""
        x, t = as_unit(x, "x"), as_unit(t, "t")
        fam = self.family
        if fam in (PayoffFamily.PRODUCT, PayoffFamily.QUADRATIC):
            return np.broadcast_to(x, np.broadcast(x, t).shape).copy()
        if fam is PayoffFamily.POWER:
            return np.broadcast_to(x ** self.a, np.broadcast(x, t).shape).copy()
        return self._tab_g2(x, t)

    def g2_mean(self, x0, x1):
        """Mean of g2(., t) over the outcome interval between ``x0`` and ``x1``.

        Only defined when g2 does not depend on t; this is the exact piece
        integral (divided by the piece length) of g2 along a linear allocation.
        """
        if self.g2_depends_on_type:
            raise DomainError("g2_mean needs a type-independent g2")
        x0, x1 = as_unit(x0, "x0"), as_unit(x1, "x1")
        if self.family is not PayoffFamily.POWER:
            return 0.5 * (x0 + x1)
        a = self.a
        x0, x1 = np.broadcast_arrays(x0, x1)
        d = x1 - x0
        close = np.abs(d) < 1e-6
        safe_d = np.where(close, 1.0, d)
        exact = (x1 ** (a + 1.0) - x0 ** (a + 1.0)) / ((a + 1.0) * safe_d)
        nodes = x0[..., None] + d[..., None] * _GL_X
        gauss = np.sum(_GL_W * nodes ** a, axis=-1)
        return np.where(close, gauss, exact)

    # ---------------------------------------------------------- tabulated core
    def _tab_columns(self, x):
        """g2 interpolated in x at every t-lattice node: shape x.shape + (nt,)."""
        j, w = _interp_index(self.x_lattice, x)
        rows = self.g2_samples
        return rows[j] + w[..., None] * (rows[j + 1] - rows[j])

    def _tab_g2(self, x, t):
        x, t = np.broadcast_arrays(x, t)
        cols = self._tab_columns(x)
        k, w = _interp_index(self.t_lattice, t)
        lo = np.take_along_axis(cols, k[..., None], axis=-1)[..., 0]
        hi = np.take_along_axis(cols, (k + 1)[..., None], axis=-1)[..., 0]
        return lo + w * (hi - lo)

    def _tab_g(self, x, t):
        x, t = np.broadcast_arrays(x, t)
        ts = self.t_lattice
        cols = self._tab_columns(x)
        h = np.diff(ts)
        cum = np.concatenate(
            [np.zeros(x.shape + (1,)),
             np.cumsum(0.5 * h * (cols[..., :-1] + cols[..., 1:]), axis=-1)], axis=-1)
        k, w = _interp_index(ts, t)
        c_lo = np.take_along_axis(cols, k[..., None], axis=-1)[..., 0]
        c_hi = np.take_along_axis(cols, (k + 1)[..., None], axis=-1)[..., 0]
        base = np.take_along_axis(cum, k[..., None], axis=-1)[..., 0]
        c_t = c_lo + w * (c_hi - c_lo)
        partial = 0.5 * (t - ts[k]) * (c_lo + c_t)
        jx, wx = _interp_index(self.x_lattice, x)
        g0 = self.g0_samples[jx] + wx * (self.g0_samples[jx + 1] - self.g0_samples[jx])
        return g0 + base + partial


def eval_g(model, x, t):
    """Scalar gross payoff ``g(x, t)``."""
    return float(model.g(x, t))


def eval_g2(model, x, t):
    """Scalar type derivative ``g2(x, t)``."""
    return float(model.g2(x, t))


@dataclass(frozen=True)
class RegularityReport:
    resolution: int
    fd_max_rel_error: float
    fd_ok: bool
    single_crossing_ok: bool
    single_crossing_margin: float
    single_crossing_witness: Optional[tuple]
    max_abs_g2: float
    bound_ok: bool
    modulus_spacing: float
    modulus_of_continuity: float

    @property
    def passed(self):
        return self.fd_ok and self.single_crossing_ok and self.bound_ok

    def to_dict(self):
        d = dict(self.__dict__)
        d["single_crossing_witness"] = (
            None if self.single_crossing_witness is None else list(self.single_crossing_witness))
        d["passed"] = self.passed
        return d


def check_regularity(model, lattice_resolution=21):
    """Check derivative consistency, strict single-crossing and boundedness.

    The finite-difference comparison is only binding for builtin families; a
    tabulated g is the integral of a piecewise-linear g2 and has slope kinks at
    the t-lattice, so its error is reported but does not fail the check.
    The modulus of continuity is the largest change of g2 between adjacent
    x-lattice points, an empirical stand-in for equi-continuity.
    """
    res = int(lattice_resolution)
    if res < 3:
        raise DomainError(f"lattice_resolution must be >= 3, got {res}")
    grid = np.linspace(0.0, 1.0, res)
    X, T = np.meshgrid(grid, grid, indexing="ij")
    G2 = model.g2(X, T)

    Tc = np.clip(T, FD_STEP, 1.0 - FD_STEP)
    fd = (model.g(X, Tc + FD_STEP) - model.g(X, Tc - FD_STEP)) / (2.0 * FD_STEP)
    g2c = model.g2(X, Tc)
    rel = np.abs(fd - g2c) / (1.0 + np.abs(g2c))
    fd_err = float(np.max(rel))
    fd_ok = fd_err <= FD_RTOL if not model.g2_depends_on_type else True

    steps = np.diff(G2, axis=0)
    margin = float(np.min(steps))
    witness = None
    if margin <= SINGLE_CROSSING_THRESHOLD:
        j, k = np.unravel_index(int(np.argmin(steps)), steps.shape)
        witness = (float(grid[j]), float(grid[j + 1]), float(grid[k]))
    max_abs = float(np.max(np.abs(G2)))
    return RegularityReport(
        resolution=res,
        fd_max_rel_error=fd_err,
        fd_ok=bool(fd_ok),
        single_crossing_ok=margin > SINGLE_CROSSING_THRESHOLD,
        single_crossing_margin=margin,
        single_crossing_witness=witness,
        max_abs_g2=max_abs,
        bound_ok=max_abs <= model.g2_bound + 1e-12,
        modulus_spacing=float(grid[1] - grid[0]),
        modulus_of_continuity=float(np.max(np.abs(steps))),
    )
