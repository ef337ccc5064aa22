"""Symmetric two-player games with a continuous strategy interval.

A game is given by a single payoff expression ``U(own, other)``: player ``i``
receives ``U(x_i, x_j)``.  The solvers here are the standard (Nash) ones:
best responses, the symmetric Nash point and the symmetric Pareto point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _numerics as num
from .errors import (
    DerivativeUndefinedError,
    ExprDomainError,
    GameValidationError,
    NoInteriorNashError,
    SpecError,
)
from .expr import Expr, parse_expression

log = logging.getLogger(__name__)

PAYOFF_VARIABLES = ("own", "other")


@dataclass(frozen=True)
class SolverConfig:
    tol_root: float = 1e-10
    tol_opt: float = 1e-9
    grid_points: int = 512
    domain_cap: float = 1e3
    max_iter: int = 200
    a_grid_max: float = 8.0

    def __post_init__(self):
        for name in ("tol_root", "tol_opt", "domain_cap", "a_grid_max"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise SpecError(f"{name} must be positive and finite, got {value!r}")
        if int(self.grid_points) != self.grid_points or self.grid_points < 16:
            raise SpecError(f"grid_points must be an integer >= 16, got {self.grid_points!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise SpecError(f"max_iter must be a positive integer, got {self.max_iter!r}")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class Game:
    payoff: Expr
    lo: float = 0.0
    hi: float = math.inf
    name: str = ""

    def __post_init__(self):
        if not set(self.payoff.variables) <= set(PAYOFF_VARIABLES):
            raise SpecError("payoff may only use the variables own and other")
        if not (math.isfinite(self.lo) and self.lo >= 0):
            raise SpecError(f"domain lower bound must be finite and >= 0, got {self.lo!r}")
        if not self.hi > self.lo:
            raise SpecError(f"empty domain [{self.lo}, {self.hi}]")

    @classmethod
    def from_source(cls, payoff: str, lo: float = 0.0, hi: float = math.inf, name: str = "") -> Game:
        return cls(parse_expression(payoff, PAYOFF_VARIABLES), float(lo), float(hi), name)

    def upper(self, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
        """Upper end of the searched interval (``hi`` capped by ``domain_cap``)."""
        return min(self.hi, cfg.domain_cap)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def u(self, own: float, other: float) -> float:
        return self.payoff.evaluate({"own": own, "other": other})

    def u_own(self, own: float, other: float) -> float:
        return self.payoff.differentiate("own", {"own": own, "other": other})

    def u_other(self, own: float, other: float) -> float:
        return self.payoff.differentiate("other", {"own": own, "other": other})

    def u_array(self, own, other) -> np.ndarray:
        return self.payoff.evaluate_array({"own": own, "other": other})

    def grad_array(self, own, other) -> tuple[np.ndarray, np.ndarray]:
        """Partial derivatives ``(U_1, U_2)`` on arrays, NaN where undefined."""
        b = {"own": own, "other": other}
        return (
            self.payoff.differentiate_array(b, {"own": 1.0}),
            self.payoff.differentiate_array(b, {"other": 1.0}),
        )

    def to_spec(self) -> dict:
        return {
            "name": self.name,
            "payoff": str(self.payoff),
            "domain": {"lo": self.lo, "hi": "inf" if math.isinf(self.hi) else self.hi},
        }


@dataclass(frozen=True)
class Profile:
    x1: float
    x2: float


@dataclass(frozen=True)
class Landmarks:
    x_nash: float
    u_nash: float
    x_pareto: float
    u_pareto: float


@dataclass(frozen=True)
class Optimum:
    """Result of a one-dimensional maximisation over the strategy interval."""

    x: float
    value: float
    boundary: bool = False
    unique: bool = True
    at_cap: bool = False


@dataclass(frozen=True)
class NashResult:
    x: float
    u: float
    profile: Profile
    residual: float


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    location: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ValidationReport:
    game: str
    checks: tuple[Check, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def _first_nan(values: np.ndarray, *axes: np.ndarray) -> tuple[float, ...]:
    idx = np.unravel_index(int(np.flatnonzero(np.isnan(values))[0]), values.shape)
    return tuple(float(ax[i]) for ax, i in zip(axes, idx))


def _check_pareto(game: Game, grid: np.ndarray, cfg: SolverConfig) -> Check:
    name = "symmetric_unique_interior_max"
    diag = game.u_array(grid, grid)
    if np.isnan(diag).any():
        x = _first_nan(diag, grid)[0]
        return Check(name, False, f"payoff undefined at own = other = {x:.6g}", (x, x))
    idx, unique = num.grid_argmax(diag, cfg.tol_opt)
    if not unique:
        return Check(name, False, "U(x, x) has several grid maxima", (float(grid[idx]),) * 2)
    if idx in (0, len(grid) - 1):
        return Check(name, False, f"U(x, x) peaks on the boundary x = {grid[idx]:.6g}", (float(grid[idx]),) * 2)
    return Check(name, True, f"U(x, x) peaks near x = {grid[idx]:.6g}")


def _check_monotone(game: Game, axis: np.ndarray) -> Check:
    name = "monotone_in_opponent"
    own, other = np.meshgrid(axis, axis, indexing="ij")
    values = game.u_array(own, other)
    if np.isnan(values).any():
        loc = _first_nan(values, axis, axis)
        return Check(name, False, f"payoff undefined at own={loc[0]:.6g}, other={loc[1]:.6g}", loc)
    d = game.payoff.differentiate_array({"own": own, "other": other}, {"other": 1.0})
    finite = d[np.isfinite(d)]
    if finite.size == 0:
        return Check(name, False, "dU/dother is undefined everywhere on the grid")
    if np.all(finite > 0):
        return Check(name, True, "U is strictly increasing in the opponent's strategy")
    if np.all(finite < 0):
        return Check(name, True, "U is strictly decreasing in the opponent's strategy")
    bad = np.flatnonzero(np.isfinite(d.ravel()) & (np.sign(d.ravel()) != np.sign(finite[0])))
    i = np.unravel_index(int(bad[0]) if bad.size else 0, d.shape)
    loc = (float(axis[i[0]]), float(axis[i[1]]))
    return Check(name, False, f"dU/dother is not of constant strict sign (value {d[i]:.3g})", loc)


def _check_own_max(game: Game, grid: np.ndarray, cfg: SolverConfig, samples: int = 16) -> Check:
    name = "unique_max_in_own"
    for xj in np.linspace(grid[0], grid[-1], samples):
        row = game.u_array(grid, xj)
        if np.isnan(row).any():
            x = _first_nan(row, grid)[0]
            return Check(name, False, f"payoff undefined at own={x:.6g}, other={xj:.6g}", (x, float(xj)))
        idx, unique = num.grid_argmax(row, cfg.tol_opt)
        if not unique:
            return Check(name, False, f"U(., {xj:.6g}) has several grid maxima", (float(grid[idx]), float(xj)))
    return Check(name, True, f"U(., x_j) has a unique grid maximum for {samples} sampled x_j")


def _check_origin_slope(game: Game, hi: float) -> Check:
    name = "positive_own_slope_at_origin"
    lo = game.lo
    try:
        slope = game.u_own(lo, lo)
        how = "dual"
    except DerivativeUndefinedError:
        h = 1e-6 * (hi - lo)
        try:
            slope = (game.u(lo + h, lo) - game.u(lo, lo)) / h
        except ExprDomainError as exc:
            return Check(name, False, str(exc), (lo, lo))
        how = "one-sided difference"
    except ExprDomainError as exc:
        return Check(name, False, str(exc), (lo, lo))
    return Check(name, slope > 0, f"dU/down at (lo, lo) = {slope:.6g} ({how})", (lo, lo))


def validate_assumptions(game: Game, cfg: SolverConfig = DEFAULT_CONFIG) -> ValidationReport:
    """Check the regularity assumptions numerically on grids.

    (a) ``U(x, x)`` has a unique interior grid maximum; (b) ``dU/dother`` has a
    constant strict sign; (c) ``U(., x_j)`` has a unique grid maximum for
    sampled ``x_j``; (d) ``dU/down > 0`` at ``(lo, lo)``.
    """
    hi = game.upper(cfg)
    grid = num.linear_grid(game.lo, hi, cfg.grid_points)
    axis = num.linear_grid(game.lo, hi, max(16, cfg.grid_points // 4))
    checks = (
        _check_pareto(game, grid, cfg),
        _check_monotone(game, axis),
        _check_own_max(game, grid, cfg),
        _check_origin_slope(game, hi),
    )
    return ValidationReport(game.name, checks)


@lru_cache(maxsize=256)
def _cached_validation(game: Game, cfg: SolverConfig) -> ValidationReport:
    return validate_assumptions(game, cfg)


def require_valid(game: Game, cfg: SolverConfig = DEFAULT_CONFIG) -> ValidationReport:
    """Raise ``GameValidationError`` unless the game passes validation."""
    report = _cached_validation(game, cfg)
    if not report.passed:
        names = ", ".join(c.name for c in report.failures())
        detail = "; ".join(c.detail for c in report.failures())
        raise GameValidationError(f"game {game.name!r} fails {names}: {detail}", report)
    return report


# --------------------------------------------------------------------------
# Best responses


_SCALAR_CUTOFF = 4


def _refine_scalar(game: Game, opp: float, a: float, b: float, lo: float, hi: float, cfg: SolverConfig) -> float:
    def f(z):
        try:
            return game.u(z, opp)
        except ExprDomainError:
            return -math.inf

    x, _ = num.golden_max(f, a, b, tol=1e-7 * (1.0 + abs(a)), max_iter=cfg.max_iter)
    w = 1e-6 * (1.0 + abs(x))
    left, right = max(x - w, lo), min(x + w, hi)
    try:
        d_left, d_right = game.u_own(left, opp), game.u_own(right, opp)
        if d_left > 0 > d_right:
            x = num.bisect(lambda z: game.u_own(z, opp), left, right, d_left, d_right, max_iter=cfg.max_iter)
    except ExprDomainError:
        pass
    return x


def _refine_vec(game: Game, opp: np.ndarray, a: np.ndarray, b: np.ndarray, lo: float, hi: float) -> np.ndarray:
    iters = int(np.ceil(np.log(max(float(np.max(b - a)), 1e-300) / 1e-8) / np.log(1.0 / num.INVPHI)))
    _, _, x = num.golden_max_vec(lambda z: game.u_array(z, opp), a, b, iters=max(iters, 1))
    w = 1e-6 * (1.0 + np.abs(x))
    left = np.maximum(x - w, lo)
    right = np.minimum(x + w, hi)
    d_left = game.payoff.differentiate_array({"own": left, "other": opp}, {"own": 1.0})
    d_right = game.payoff.differentiate_array({"own": right, "other": opp}, {"own": 1.0})
    polish = (d_left > 0) & (d_right < 0)
    if polish.any():
        def slope(z):
            return game.payoff.differentiate_array({"own": z, "other": opp[polish]}, {"own": 1.0})
        x = x.copy()
        x[polish] = num.bisect_vec(slope, left[polish], right[polish], iters=48)
    return x


def best_responses(game: Game, opponents, cfg: SolverConfig = DEFAULT_CONFIG) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised Nash best responses.

    A coarse grid scan brackets the maximum, golden-section search narrows
    it, and bisection on ``dU/down`` polishes the argmax to full precision.

    Returns:
        ``(x, unique)`` arrays matching ``opponents``.
    """
    opp = np.atleast_1d(np.asarray(opponents, dtype=float))
    lo, hi = game.lo, game.upper(cfg)
    grid = num.linear_grid(lo, hi, cfg.grid_points)
    vals = game.u_array(grid[:, None], opp[None, :])
    vals = np.where(np.isnan(vals), -np.inf, vals)
    if not np.all(np.isfinite(vals.max(axis=0))):
        raise ExprDomainError("payoff undefined along the whole own-strategy grid")
    idx = np.argmax(vals, axis=0)
    near = vals >= vals[idx, np.arange(opp.size)] - cfg.tol_opt
    spread = np.abs(np.arange(grid.size)[:, None] - idx[None, :])
    unique = ~np.any(near & (spread > 2), axis=0)

    a = grid[np.maximum(idx - 1, 0)]
    b = grid[np.minimum(idx + 1, grid.size - 1)]
    if opp.size <= _SCALAR_CUTOFF:
        x = np.array([_refine_scalar(game, o, ai, bi, lo, hi, cfg) for o, ai, bi in zip(opp, a, b)])
    else:
        x = _refine_vec(game, opp, a, b, lo, hi)
    ux = game.u_array(x, opp)
    ulo = game.u_array(np.full_like(x, lo), opp)
    uhi = game.u_array(np.full_like(x, hi), opp)
    x = np.where(ulo >= ux, lo, x)
    ux = np.fmax(ux, ulo)
    x = np.where(uhi > ux, hi, x)
    return x, unique


def best_response(game: Game, opponent_x: float, cfg: SolverConfig = DEFAULT_CONFIG) -> Optimum:
    """Nash best response to ``opponent_x`` with boundary/uniqueness flags."""
    if not game.contains(opponent_x):
        raise SpecError(f"opponent strategy {opponent_x!r} outside [{game.lo}, {game.hi}]")
    xs, unique = best_responses(game, [opponent_x], cfg)
    x = float(xs[0])
    hi = game.upper(cfg)
    boundary = x in (game.lo, hi)
    at_cap = x == hi and hi < game.hi
    if boundary:
        log.debug("best response to %r sits on the boundary x = %r", opponent_x, x)
    return Optimum(x, game.u(x, opponent_x), boundary, bool(unique[0]), at_cap)


def nash_best_response(game: Game, opponent_x: float, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """``argmax_own U(own, opponent_x)``."""
    return best_response(game, opponent_x, cfg).x


# --------------------------------------------------------------------------
# Landmarks


def solve_nash(game: Game, cfg: SolverConfig = DEFAULT_CONFIG) -> NashResult:
    """Symmetric Nash equilibrium: the fixed point of the best response.

    Bisection on ``g(x) = BR(x) - x`` over the (capped) domain.
    """
    require_valid(game, cfg)
    lo, hi = game.lo, game.upper(cfg)

    def g(x: float) -> float:
        return float(best_responses(game, [x], cfg)[0][0]) - x

    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo > 0 > g_hi):
        raise NoInteriorNashError(
            f"no interior symmetric Nash: BR(x) - x is {g_lo:.3g} at {lo} and {g_hi:.3g} at {hi}"
        )
    x = num.bisect(g, lo, hi, g_lo, g_hi, max_iter=cfg.max_iter)
    residual = abs(g(x))
    if x == hi:
        log.warning("Nash equilibrium hit the domain cap %r", hi)
    return NashResult(x, game.u(x, x), Profile(x, x), residual)


def solve_pareto(game: Game, cfg: SolverConfig = DEFAULT_CONFIG, check: bool = True) -> Optimum:
    """Symmetric Pareto point ``argmax_x U(x, x)``.

    ``check=False`` skips game validation; only unimodality of ``U(x, x)``
    is needed for this search.
    """
    if check:
        require_valid(game, cfg)
    lo, hi = game.lo, game.upper(cfg)
    grid = num.linear_grid(lo, hi, cfg.grid_points)
    idx, unique = num.grid_argmax(game.u_array(grid, grid), cfg.tol_opt)
    a, b = grid[max(idx - 1, 0)], grid[min(idx + 1, grid.size - 1)]

    def diag(x):
        try:
            return game.u(x, x)
        except ExprDomainError:
            return -math.inf

    x, _ = num.golden_max(diag, a, b, tol=cfg.tol_opt, max_iter=cfg.max_iter)
    w = 1e-6 * (1.0 + abs(x))
    left, right = max(x - w, lo), min(x + w, hi)

    def slope(z):
        return game.payoff.derivative_along({"own": z, "other": z}, {"own": 1.0, "other": 1.0})

    try:
        s_left, s_right = slope(left), slope(right)
        if s_left > 0 > s_right:
            x = num.bisect(slope, left, right, s_left, s_right, max_iter=cfg.max_iter)
    except ExprDomainError:
        pass
    for edge in (lo, hi):
        if diag(edge) > diag(x):
            x = edge
    boundary = x in (lo, hi)
    at_cap = x == hi and hi < game.hi
    if boundary:
        log.warning("Pareto point of %r sits on the boundary x = %r", game.name, x)
    return Optimum(x, game.u(x, x), boundary, unique, at_cap)


def landmarks(game: Game, cfg: SolverConfig = DEFAULT_CONFIG) -> Landmarks:
    nash = solve_nash(game, cfg)
    pareto = solve_pareto(game, cfg)
    return Landmarks(float(nash.x), float(nash.u), float(pareto.x), float(pareto.value))


@lru_cache(maxsize=256)
def cached_landmarks(game: Game, cfg: SolverConfig = DEFAULT_CONFIG) -> Landmarks:
    return landmarks(game, cfg)


# --------------------------------------------------------------------------
# Registry and spec files


BUILTIN_GAMES: dict[str, Game] = {
    "linear-quadratic": Game.from_source("own + other - own^2/2", 0.0, math.inf, "linear-quadratic"),
    "sqrt-public-good": Game.from_source("sqrt(1 - own) + sqrt(own + other)", 0.0, 1.0, "sqrt-public-good"),
}


def builtin_game(name: str) -> Game:
    key = name.removeprefix("builtin:")
    try:
        return BUILTIN_GAMES[key]
    except KeyError:
        known = ", ".join(f"builtin:{k}" for k in BUILTIN_GAMES)
        raise SpecError(f"unknown builtin game {name!r} (known: {known})") from None


def game_from_spec(spec: dict) -> Game:
    """Build a game from the JSON spec ``{"name", "payoff", "domain": {"lo", "hi"}}``."""
    if not isinstance(spec, dict):
        raise SpecError("game spec must be a JSON object")
    try:
        payoff = spec["payoff"]
        domain = spec.get("domain", {})
    except KeyError as exc:
        raise SpecError(f"game spec is missing {exc.args[0]!r}") from None
    if not isinstance(payoff, str):
        raise SpecError("game spec 'payoff' must be a string")
    lo = domain.get("lo", 0.0)
    hi = domain.get("hi", "inf")
    if isinstance(hi, str):
        if hi.lower() not in ("inf", "+inf", "infinity"):
            raise SpecError(f"domain.hi must be a number or 'inf', got {hi!r}")
        hi = math.inf
    if not isinstance(lo, (int, float)) or not isinstance(hi, (int, float)):
        raise SpecError("domain bounds must be numbers")
    return Game.from_source(payoff, float(lo), float(hi), str(spec.get("name", "")))
