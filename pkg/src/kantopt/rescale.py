"""Strictly monotone strategy rescalings ``x = s(z)``.

``z`` is the auxiliary coordinate a Kantian reasons in; ``x`` is the
original strategy.  Every method accepts a scalar or a numpy array.  Scalars
outside the domain raise ``InfeasibleError``; arrays get NaN there instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _numerics as num
from .errors import ExprDomainError, InfeasibleError, RescalingError
from .expr import Expr, parse_expression

KINDS = ("identity", "affine", "log", "sqrt", "power", "custom")

_MONOTONE_GRID = 1024


@dataclass(frozen=True)
class Rescaling:
    kind: str
    shift: float = 0.0
    exponent: float = 1.0
    forward: Expr | None = None
    z_lo: float = -math.inf
    z_hi: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RescalingError(f"unknown rescaling kind {self.kind!r}")
        if self.kind == "power" and not (self.exponent > 0 and math.isfinite(self.exponent)):
            raise RescalingError(f"power exponent must be positive, got {self.exponent!r}")
        if self.kind == "affine" and not math.isfinite(self.shift):
            raise RescalingError("affine shift must be finite")
        if self.kind == "custom":
            self._check_custom()

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls) -> Rescaling:
        return cls("identity")

    @classmethod
    def affine(cls, shift: float) -> Rescaling:
        """``x = z + shift``."""
        return cls("affine", shift=float(shift))

    @classmethod
    def log(cls) -> Rescaling:
        """``x = ln z`` on ``z >= 1``."""
        return cls("log", z_lo=1.0)

    @classmethod
    def sqrt(cls) -> Rescaling:
        return cls("sqrt", exponent=0.5, z_lo=0.0)

    @classmethod
    def power(cls, exponent: float) -> Rescaling:
        """``x = z**exponent`` on ``z >= 0``."""
        return cls("power", exponent=float(exponent), z_lo=0.0)

    @classmethod
    def custom(cls, forward: str, z_lo: float, z_hi: float) -> Rescaling:
        return cls("custom", forward=parse_expression(forward, ("z",)), z_lo=float(z_lo), z_hi=float(z_hi))

    def _check_custom(self):
        if self.forward is None:
            raise RescalingError("custom rescaling needs a forward expression")
        if not (math.isfinite(self.z_lo) and math.isfinite(self.z_hi) and self.z_lo < self.z_hi):
            raise RescalingError("custom rescaling needs a finite z_domain with lo < hi")
        z = np.linspace(self.z_lo, self.z_hi, _MONOTONE_GRID)
        x = self.forward.evaluate_array({"z": z})
        if not np.all(np.isfinite(x)):
            bad = float(z[~np.isfinite(x)][0])
            raise RescalingError(f"custom rescaling is undefined at z = {bad:.6g}")
        d = self.forward.differentiate_array({"z": z}, {"z": 1.0})
        inner = d[1:-1]
        finite = d[np.isfinite(d)]
        if not np.all(np.isfinite(inner)) or finite.size == 0:
            raise RescalingError("custom rescaling derivative is undefined inside its domain")
        if not (np.all(finite > 0) or np.all(finite < 0)):
            raise RescalingError("custom rescaling is not strictly monotone on its domain")

    # -- properties -------------------------------------------------------

    @property
    def z_domain(self) -> tuple[float, float]:
        return (self.z_lo, self.z_hi)

    @property
    def increasing(self) -> bool:
        if self.kind != "custom":
            return True
        return self.forward.evaluate({"z": self.z_hi}) > self.forward.evaluate({"z": self.z_lo})

    @property
    def x_domain(self) -> tuple[float, float]:
        """Image of the z-domain."""
        if self.kind == "custom":
            a = self.forward.evaluate({"z": self.z_lo})
            b = self.forward.evaluate({"z": self.z_hi})
            return (min(a, b), max(a, b))
        if self.kind in ("log", "sqrt", "power"):
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    @property
    def zero_point(self) -> float | None:
        """``s(0)`` when ``z = 0`` is admissible."""
        if not self.z_lo <= 0.0 <= self.z_hi:
            return None
        return float(self.apply(0.0))

    def x_range(self, lo: float, hi: float) -> tuple[float, float]:
        """Feasible x-interval: ``[lo, hi]`` intersected with the image of the z-domain."""
        a, b = self.x_domain
        return (max(lo, a), min(hi, b))

    # -- maps -------------------------------------------------------------

    def _in_z(self, z):
        return (z >= self.z_lo) & (z <= self.z_hi)

    def _in_x(self, x):
        a, b = self.x_domain
        return (x >= a) & (x <= b)

    def apply(self, z):
        """``s(z)``."""
        if np.ndim(z) == 0:
            z = float(z)
            if not self._in_z(z):
                raise InfeasibleError(f"z = {z!r} outside the {self.kind} domain {self.z_domain}")
            return float(self._apply(np.float64(z)))
        z = np.asarray(z, dtype=float)
        with np.errstate(all="ignore"):
            return np.where(self._in_z(z), self._apply(z), np.nan)

    def invert(self, x):
        """``s^{-1}(x)``."""
        if np.ndim(x) == 0:
            x = float(x)
            if not self._in_x(x):
                raise InfeasibleError(f"x = {x!r} outside the image of the {self.kind} rescaling")
            with np.errstate(over="ignore"):
                return float(self._invert(np.float64(x)))
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return np.where(self._in_x(x), self._invert(x), np.nan)

    def deriv(self, z):
        """``s'(z)``."""
        if np.ndim(z) == 0:
            z = float(z)
            if not self._in_z(z):
                raise InfeasibleError(f"z = {z!r} outside the {self.kind} domain {self.z_domain}")
            if self.kind == "custom":
                return self.forward.differentiate("z", {"z": z})
            with np.errstate(divide="raise", invalid="raise"):
                try:
                    return float(self._deriv(np.float64(z)))
                except FloatingPointError:
                    raise ExprDomainError(f"s'(z) undefined at z = {z!r}") from None
        z = np.asarray(z, dtype=float)
        with np.errstate(all="ignore"):
            return np.where(self._in_z(z), self._deriv(z), np.nan)

    def elasticity_at_x(self, x):
        """``s'(z)·z`` evaluated at ``z = s^{-1}(x)``.

        Closed forms avoid overflow for the log rescaling, where ``z = e^x``
        is not representable on wide domains although ``s'(z)·z = 1``.
        """
        scalar = np.ndim(x) == 0
        xa = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = xa.copy()
        elif self.kind == "affine":
            out = xa - self.shift
        elif self.kind == "log":
            out = np.ones_like(xa)
        elif self.kind in ("sqrt", "power"):
            out = self.exponent * xa
        else:
            z = self.invert(xa)
            out = self.deriv(z) * z
        out = np.where(self._in_x(xa), out, np.nan)
        if scalar:
            if not np.isfinite(out):
                raise InfeasibleError(f"x = {float(x)!r} outside the image of the {self.kind} rescaling")
            return float(out)
        return out

    def _apply(self, z):
        k = self.kind
        if k == "identity":
            return z
        if k == "affine":
            return z + self.shift
        if k == "log":
            return np.log(z)
        if k in ("sqrt", "power"):
            return z**self.exponent
        return self.forward.evaluate_array({"z": z})

    def _invert(self, x):
        k = self.kind
        if k == "identity":
            return x
        if k == "affine":
            return x - self.shift
        if k == "log":
            return np.exp(x)
        if k in ("sqrt", "power"):
            return x ** (1.0 / self.exponent)
        return self._invert_custom(x)

    def _deriv(self, z):
        k = self.kind
        if k in ("identity", "affine"):
            return np.ones_like(z)
        if k == "log":
            return 1.0 / z
        if k in ("sqrt", "power"):
            return self.exponent * z ** (self.exponent - 1.0)
        return self.forward.differentiate_array({"z": z}, {"z": 1.0})

    def _invert_custom(self, x):
        x = np.asarray(x, dtype=float)
        up = self.increasing

        def g(z):
            d = self.forward.evaluate_array({"z": z}) - x
            return d if not up else -d

        # g > 0 at the left end of the bracket, g < 0 at the right end.
        a = np.full_like(x, self.z_lo)
        b = np.full_like(x, self.z_hi)
        z = num.bisect_vec(g, a, b, iters=200)
        back = self.forward.evaluate_array({"z": z})
        scale = 1e-9 * (1.0 + np.abs(x))
        if np.ndim(x) == 0:
            if not abs(back - x) <= scale:
                raise InfeasibleError(f"cannot invert custom rescaling at x = {float(x)!r}")
            return z
        return np.where(np.abs(back - x) <= scale, z, np.nan)

    # -- serialisation ----------------------------------------------------

    def to_spec(self) -> dict:
        spec: dict = {"kind": self.kind}
        if self.kind == "affine":
            spec["shift"] = self.shift
        elif self.kind == "power":
            spec["exponent"] = self.exponent
        elif self.kind == "custom":
            spec["forward"] = str(self.forward)
            spec["z_domain"] = {"lo": self.z_lo, "hi": self.z_hi}
        return spec

    def describe(self) -> str:
        if self.kind == "affine":
            return f"affine(shift={self.shift:.12g})"
        if self.kind == "power":
            return f"power({self.exponent:.12g})"
        if self.kind == "custom":
            return f"custom({self.forward})"
        return self.kind


def rescaling_from_spec(spec: dict) -> Rescaling:
    """Build a rescaling from its JSON form (see ``docs/formats.md``)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise RescalingError("rescaling spec must be an object with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "identity":
            return Rescaling.identity()
        if kind == "affine":
            return Rescaling.affine(float(spec.get("shift", 0.0)))
        if kind == "log":
            return Rescaling.log()
        if kind == "sqrt":
            return Rescaling.sqrt()
        if kind == "power":
            return Rescaling.power(float(spec["exponent"]))
        if kind == "custom":
            dom = spec["z_domain"]
            return Rescaling.custom(str(spec["forward"]), float(dom["lo"]), float(dom["hi"]))
    except (KeyError, TypeError) as exc:
        raise RescalingError(f"{kind} rescaling spec is missing or has a bad field: {exc}") from None
    raise RescalingError(f"unknown rescaling kind {kind!r}")


def is_proportional(r: Rescaling, cfg=None) -> tuple[bool, float]:
    """Test whether ``s'(z)·z / s(z)`` is constant over the z-domain.

    Returns the verdict and the relative spread of the ratio.  Unbounded
    domain ends are replaced by ``±domain_cap``.
    """
    from .game import DEFAULT_CONFIG

    cfg = cfg or DEFAULT_CONFIG
    lo = r.z_lo if math.isfinite(r.z_lo) else -cfg.domain_cap
    hi = r.z_hi if math.isfinite(r.z_hi) else cfg.domain_cap
    z = np.linspace(lo, hi, cfg.grid_points + 1)
    s = r.apply(z)
    keep = np.isfinite(s) & (np.abs(s) > 1e-12)
    if not keep.any():
        raise RescalingError(f"{r.describe()} vanishes on the whole grid")
    ratio = r.deriv(z[keep]) * z[keep] / s[keep]
    ratio = ratio[np.isfinite(ratio)]
    scale = float(np.max(np.abs(ratio)))
    spread = float((ratio.max() - ratio.min()) / scale) if scale > 0 else 0.0
    return spread <= 1e-6, spread


def efficient_rescaling(landmarks) -> Rescaling:
    """The affine rescaling ``x = z + x^N`` that puts ``z = 0`` at the Nash point."""
    return Rescaling.affine(landmarks.x_nash)
