"""Kantian optimisation under a strategy rescaling.

A Kantian at profile ``(z1, z2)`` asks whether scaling *both* strategies by
a common factor ``a`` would help.  For strategies of opposite sign the
comparison profiles are ``(a·z1, (2 - a)·z2)`` instead, with the factor
``a`` always attached to the non-negative coordinate.

Root scans run in original units ``x`` over the feasible interval, using
``s'(z)·z`` expressed as a function of ``x`` (see
:meth:`Rescaling.elasticity_at_x`); roots are mapped back to ``z`` at the
end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _numerics as num
from .errors import ExprDomainError, InfeasibleError
from .game import DEFAULT_CONFIG, Game, Profile, SolverConfig, cached_landmarks, require_valid
from .rescale import Rescaling

SAME = "same_sign"
OPPOSITE = "opposite_sign"

VERIFY_GRID = 4096
VERIFY_SLACK = 1e-8
LOCAL_HALF_WIDTH = 0.25
LOCAL_POINTS = 65
FOC_TOL = 1e-8
ZERO_TOL = 1e-9
MERGE_TOL = 1e-6


@dataclass(frozen=True)
class ZProfile:
    z1: float
    z2: float


@dataclass(frozen=True)
class KbrRoot:
    """One root of the Kantian first-order condition against a fixed ``z2``."""

    z1: float
    x1: float
    branch: str
    foc_residual: float
    sufficient: bool


@dataclass(frozen=True)
class MkeResult:
    profile: ZProfile
    x_profile: Profile
    payoffs: tuple[float, float]
    branch: str
    foc_residual: float
    verified: bool
    efficient: bool


@dataclass(frozen=True)
class Verdict:
    verified: bool
    worst_violation: float
    worst_a: float | None
    branch: str
    players: tuple[int, ...]


def branch_of(z1: float, z2: float) -> str:
    return SAME if (z1 >= 0) == (z2 >= 0) else OPPOSITE


def _branch_allows(branch: str, z1: float, z2: float, tol: float = ZERO_TOL) -> bool:
    """Whether the signs of ``(z1, z2)`` fit ``branch`` once near-zeros may take either sign."""
    pos1, neg1 = z1 > tol, z1 < -tol
    pos2, neg2 = z2 > tol, z2 < -tol
    if branch == SAME:
        return not ((pos1 and neg2) or (neg1 and pos2))
    return not ((pos1 and pos2) or (neg1 and neg2))


def _scaled(z1, z2, a, branch: str):
    if branch == SAME:
        return a * z1, a * z2
    if z1 >= 0:
        return a * z1, (2.0 - a) * z2
    return (2.0 - a) * z1, a * z2


def kantian_objective(
    game: Game, r: Rescaling, p: ZProfile, a: float, player: int = 1, branch: str | None = None
) -> float:
    """Payoff of ``player`` after the Kantian scaling by ``a``.

    Raises:
        InfeasibleError: the scaled profile leaves the rescaling's domain or
            the game's strategy interval.
    """
    branch = branch or branch_of(p.z1, p.z2)
    za, zb = _scaled(p.z1, p.z2, a, branch)
    x1, x2 = r.apply(za), r.apply(zb)
    for x in (x1, x2):
        if not game.contains(x):
            raise InfeasibleError(f"scaled strategy {x!r} outside [{game.lo}, {game.hi}]")
    return game.u(x1, x2) if player == 1 else game.u(x2, x1)


def _objective_grid(game: Game, r: Rescaling, p: ZProfile, a: np.ndarray, player: int, branch: str) -> np.ndarray:
    za, zb = _scaled(p.z1, p.z2, a, branch)
    x1 = r.apply(np.broadcast_to(za, a.shape))
    x2 = r.apply(np.broadcast_to(zb, a.shape))
    ok = (x1 >= game.lo) & (x1 <= game.hi) & (x2 >= game.lo) & (x2 <= game.hi)
    vals = game.u_array(x1, x2) if player == 1 else game.u_array(x2, x1)
    return np.where(ok, vals, np.nan)


def _elasticity_z(r: Rescaling, z: float) -> float:
    return 0.0 if z == 0 else r.deriv(z) * z


def kantian_foc(
    game: Game, r: Rescaling, p: ZProfile, player: int = 1, branch: str | None = None
) -> float:
    """``d/da`` of the Kantian objective at ``a = 1``.

    Same sign: ``U_1·s'(z1)·z1 + U_2·s'(z2)·z2``.  Opposite sign with
    ``z1 >= 0 > z2``: ``U_1·s'(z1)·z1 - U_2·s'(z2)·z2`` (negated when the
    roles are mirrored).  For ``player=2`` the roles of the coordinates swap.
    """
    branch = branch or branch_of(p.z1, p.z2)
    x1, x2 = r.apply(p.z1), r.apply(p.z2)
    t1, t2 = _elasticity_z(r, p.z1), _elasticity_z(r, p.z2)
    own_x, other_x, t_own, t_other = (x1, x2, t1, t2) if player == 1 else (x2, x1, t2, t1)
    d_own = game.u_own(own_x, other_x) * t_own if t_own else 0.0
    d_other = game.u_other(own_x, other_x) * t_other if t_other else 0.0
    if player == 1:
        d1, d2 = d_own, d_other
    else:
        d1, d2 = d_other, d_own
    if branch == SAME:
        return d1 + d2
    if p.z1 >= 0:
        return d1 - d2
    return d2 - d1


def verify_mke(
    game: Game,
    r: Rescaling,
    p: ZProfile,
    cfg: SolverConfig = DEFAULT_CONFIG,
    players: tuple[int, ...] | None = None,
) -> Verdict:
    """Brute-force check of the MKE inequality on a dense grid of factors.

    Same-sign profiles are compared against ``a`` in ``[0, a_grid_max]`` for
    both players; opposite-sign profiles against ``a`` in ``(0, 2]`` for
    Player 1.  Infeasible factors are skipped.
    """
    branch = branch_of(p.z1, p.z2)
    if branch == SAME:
        a = np.linspace(0.0, cfg.a_grid_max, VERIFY_GRID)
        players = players or (1, 2)
    else:
        a = 2.0 * np.arange(1, VERIFY_GRID + 1) / VERIFY_GRID
        players = players or (1,)
    worst, worst_a = -math.inf, None
    for player in players:
        base = kantian_objective(game, r, p, 1.0, player, branch)
        gain = _objective_grid(game, r, p, a, player, branch) - base
        if np.all(np.isnan(gain)):
            continue
        i = int(np.nanargmax(gain))
        if gain[i] > worst:
            worst, worst_a = float(gain[i]), float(a[i])
    return Verdict(worst <= VERIFY_SLACK, worst, worst_a, branch, tuple(players))


def locally_sufficient(
    game: Game, r: Rescaling, p: ZProfile, players: tuple[int, ...] = (1,), branch: str | None = None
) -> bool:
    """Objective at ``a = 1`` is at least as large as on a local grid of factors."""
    branch = branch or branch_of(p.z1, p.z2)
    a = np.linspace(1.0 - LOCAL_HALF_WIDTH, 1.0 + LOCAL_HALF_WIDTH, LOCAL_POINTS)
    for player in players:
        try:
            base = kantian_objective(game, r, p, 1.0, player, branch)
        except (InfeasibleError, ExprDomainError):
            return False
        vals = _objective_grid(game, r, p, a, player, branch)
        if np.nanmax(vals, initial=-np.inf) > base + VERIFY_SLACK:
            return False
    return True


# --------------------------------------------------------------------------
# Root scans


def _find_roots(h_grid: np.ndarray, xs: np.ndarray, h_scalar, cfg: SolverConfig) -> list[float]:
    """Sign changes of ``h`` refined by bisection, plus grid points where ``|h|`` is tiny."""
    roots = [float(xs[i]) for i in num.near_zero_runs(h_grid, FOC_TOL)]
    for i in num.sign_changes(h_grid):
        try:
            roots.append(
                num.bracketed_root(h_scalar, float(xs[i]), float(xs[i + 1]), float(h_grid[i]), float(h_grid[i + 1]), cfg.max_iter)
            )
        except (ExprDomainError, InfeasibleError, ValueError, RuntimeError):
            continue
    return sorted(roots)


def _merge(items: list, key, tol: float = MERGE_TOL) -> list:
    """Drop items whose ``key`` is within ``tol`` of an earlier item."""
    kept: list = []
    for item in items:
        if all(abs(key(item) - key(k)) > tol for k in kept):
            kept.append(item)
    return kept


def _terms(game: Game, r: Rescaling, x1, x2):
    """``(U_1·t1, U_2·t2)`` on arrays where ``t = s'(z)·z``; a zero ``t`` kills its term."""
    t1 = r.elasticity_at_x(x1)
    t2 = r.elasticity_at_x(x2)
    u1, u2 = game.grad_array(x1, x2)
    with np.errstate(invalid="ignore"):
        return np.where(t1 == 0, 0.0, u1 * t1), np.where(t2 == 0, 0.0, u2 * t2)


def _scalar_terms(game: Game, r: Rescaling, x1: float, x2: float) -> tuple[float, float]:
    t1, t2 = r.elasticity_at_x(x1), r.elasticity_at_x(x2)
    a = game.u_own(x1, x2) * t1 if t1 else 0.0
    b = game.u_other(x1, x2) * t2 if t2 else 0.0
    return a, b


def snap_zero(r: Rescaling, x: float) -> tuple[float, float]:
    """Map ``x`` to ``(x, z)``, snapping ``z`` to exactly 0 when it is within rounding of it."""
    z = r.invert(x)
    if abs(z) <= ZERO_TOL and r.zero_point is not None:
        return r.zero_point, 0.0
    return x, z


def scan_interval(game: Game, r: Rescaling, cfg: SolverConfig, anchors=()) -> np.ndarray:
    lo, hi = r.x_range(game.lo, game.upper(cfg))
    if not lo < hi:
        raise InfeasibleError(f"{r.describe()} leaves no feasible strategies in [{game.lo}, {game.hi}]")
    return num.scan_grid(lo, hi, cfg.grid_points, [r.zero_point, *anchors])


def kantian_best_response(
    game: Game, r: Rescaling, z2: float, cfg: SolverConfig = DEFAULT_CONFIG
) -> list[KbrRoot]:
    """All roots ``z1`` of the Kantian first-order condition against ``z2``.

    Both sign branches are scanned; each root carries its branch label and
    a local sufficiency verdict.
    """
    x2 = r.apply(z2)
    if not game.contains(x2):
        raise InfeasibleError(f"s(z2) = {x2!r} outside [{game.lo}, {game.hi}]")
    xs = scan_interval(game, r, cfg)
    a, b = _terms(game, r, xs, np.full_like(xs, x2))

    found: list[KbrRoot] = []
    for branch, sign in ((SAME, 1.0), (OPPOSITE, -1.0)):
        def h(x1, sign=sign):
            ta, tb = _scalar_terms(game, r, x1, x2)
            return ta + sign * tb

        for x1 in _find_roots(a + sign * b, xs, h, cfg):
            x1, z1 = snap_zero(r, x1)
            if not _branch_allows(branch, z1, z2):
                continue
            p = ZProfile(z1, z2)
            try:
                res = abs(kantian_foc(game, r, p, branch=branch))
            except ExprDomainError:
                continue
            found.append(KbrRoot(z1, x1, branch, res, locally_sufficient(game, r, p, (1,), branch)))
    found.sort(key=lambda k: (k.x1, k.branch != SAME))
    return _merge(found, key=lambda k: k.x1)


def solve_symmetric_mke(game: Game, r: Rescaling, cfg: SolverConfig = DEFAULT_CONFIG) -> list[MkeResult]:
    """Symmetric MKEs ``z1 = z2 = z`` under the rescaling ``r``.

    Candidates are ``z = 0`` (when admissible) and every root of
    ``U_1(x, x) + U_2(x, x)``.  Candidates that are local maxima of the
    scaling objective for both players are returned, each checked by
    :func:`verify_mke`; the one paying ``U^P`` is flagged efficient.
    """
    require_valid(game, cfg)
    marks = cached_landmarks(game, cfg)
    xs = scan_interval(game, r, cfg)
    seeds = {"own": 1.0, "other": 1.0}
    total = game.payoff.differentiate_array({"own": xs, "other": xs}, seeds)

    def h(x):
        return game.payoff.derivative_along({"own": x, "other": x}, seeds)

    xcands = _find_roots(total, xs, h, cfg)
    zero = r.zero_point
    if zero is not None and game.contains(zero):
        xcands.append(zero)

    results = []
    for x in sorted(xcands):
        z = 0.0 if x == zero else r.invert(x)
        p = ZProfile(z, z)
        if not locally_sufficient(game, r, p, (1, 2), SAME):
            continue
        foc = abs(kantian_foc(game, r, p, branch=SAME))
        verdict = verify_mke(game, r, p, cfg)
        u = game.u(x, x)
        results.append(
            MkeResult(
                profile=p,
                x_profile=Profile(x, x),
                payoffs=(u, u),
                branch=SAME,
                foc_residual=foc,
                verified=verdict.verified and foc <= FOC_TOL,
                efficient=abs(u - marks.u_pareto) <= 1e-6,
            )
        )
    return _merge(results, key=lambda m: m.x_profile.x1)


def efficient_mke(results: list[MkeResult]) -> MkeResult | None:
    eff = [m for m in results if m.efficient and m.verified]
    return eff[0] if eff else None
