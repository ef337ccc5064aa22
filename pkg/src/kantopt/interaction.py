"""The Kantian-Nasher game and the type-versus-type payoff matrix.

Player 1 is a Kantian who reasons in auxiliary units ``z`` through a
rescaling; Player 2 is a Nasher who best-responds in original units.  An
equilibrium is a pair ``(z1, x2)`` where ``z1`` solves the Kantian
first-order condition against ``z2 = s^{-1}(x2)`` and ``x2`` is the Nash best
response to ``s(z1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _numerics as num
from .errors import AmbiguousFocalError, ExprDomainError, InfeasibleError, NoSymmetricEquilibriumError, SolverError
from .game import (
    DEFAULT_CONFIG,
    Game,
    SolverConfig,
    best_responses,
    cached_landmarks,
    nash_best_response,
    require_valid,
)
from .kantian import (
    OPPOSITE,
    SAME,
    ZProfile,
    _branch_allows,
    _find_roots,
    _merge,
    _scalar_terms,
    _terms,
    efficient_mke,
    kantian_foc,
    locally_sufficient,
    scan_interval,
    snap_zero,
    solve_symmetric_mke,
    verify_mke,
)
from .rescale import Rescaling

SYMMETRY_TOL = 1e-6


@dataclass(frozen=True)
class KnEquilibrium:
    z1: float
    x1: float
    z2: float
    x2: float
    u_kantian: float
    u_nasher: float
    symmetric: bool
    branch: str
    foc_residual: float
    nash_residual: float
    sufficient: bool
    verified: bool

    @property
    def payoffs(self) -> tuple[float, float]:
        return (self.u_kantian, self.u_nasher)


@dataclass(frozen=True)
class TypeGameMatrix:
    """Payoffs by type pairing: ``u_kn`` is the Kantian's payoff against a Nasher."""

    u_kk: float
    u_kn: float
    u_nk: float
    u_nn: float


def _equilibrium(game: Game, r: Rescaling, x1: float, branch: str, cfg: SolverConfig) -> KnEquilibrium | None:
    x1, z1 = snap_zero(r, x1)
    x2 = nash_best_response(game, x1, cfg)
    try:
        x2, z2 = snap_zero(r, x2)
    except InfeasibleError:
        return None
    if not _branch_allows(branch, z1, z2):
        return None
    p = ZProfile(z1, z2)
    try:
        foc = abs(kantian_foc(game, r, p, branch=branch))
    except ExprDomainError:
        return None
    nash_res = abs(x2 - nash_best_response(game, r.apply(z1), cfg))
    sufficient = locally_sufficient(game, r, p, (1,), branch)
    verified = verify_mke(game, r, p, cfg, players=(1,)).verified
    return KnEquilibrium(
        z1=z1,
        x1=x1,
        z2=z2,
        x2=x2,
        u_kantian=game.u(x1, x2),
        u_nasher=game.u(x2, x1),
        symmetric=abs(x1 - x2) <= SYMMETRY_TOL,
        branch=branch,
        foc_residual=foc,
        nash_residual=nash_res,
        sufficient=sufficient,
        verified=verified,
    )


def solve_kantian_nasher(game: Game, r: Rescaling, cfg: SolverConfig = DEFAULT_CONFIG) -> list[KnEquilibrium]:
    """Enumerate second-stage equilibria of the Kantian-Nasher game.

    Substituting the Nasher's response into the Kantian first-order
    condition leaves a scalar equation in ``x1 = s(z1)``; it is scanned on
    both sign branches and refined by bisection.  The Nash point is added
    to the scan grid because the symmetric equilibrium can be a double root.
    """
    require_valid(game, cfg)
    marks = cached_landmarks(game, cfg)
    xs = scan_interval(game, r, cfg, anchors=[marks.x_nash])
    x2s, _ = best_responses(game, xs, cfg)
    a, b = _terms(game, r, xs, x2s)

    found: list[KnEquilibrium] = []
    for branch, sign in ((SAME, 1.0), (OPPOSITE, -1.0)):
        def h(x1, sign=sign):
            ta, tb = _scalar_terms(game, r, x1, nash_best_response(game, x1, cfg))
            return ta + sign * tb

        for x1 in _find_roots(a + sign * b, xs, h, cfg):
            eq = _equilibrium(game, r, x1, branch, cfg)
            if eq is not None:
                found.append(eq)
    found.sort(key=lambda e: (e.x1, e.branch != SAME))
    return _merge(found, key=lambda e: e.x1)


def select_focal(equilibria: list[KnEquilibrium]) -> KnEquilibrium:
    """The unique symmetric equilibrium, which players coordinate on."""
    sym = [e for e in equilibria if e.symmetric]
    if not sym:
        raise NoSymmetricEquilibriumError("no symmetric equilibrium among the Kantian-Nasher equilibria")
    distinct = _merge(sym, key=lambda e: e.x1, tol=SYMMETRY_TOL)
    if len(distinct) > 1:
        xs = ", ".join(f"{e.x1:.6g}" for e in distinct)
        raise AmbiguousFocalError(f"several symmetric equilibria at x = {xs}")
    return distinct[0]


def kantian_nasher_outcome(equilibria: list[KnEquilibrium]) -> KnEquilibrium:
    """A unique equilibrium is the outcome; among several, the focal one."""
    if len(equilibria) == 1:
        return equilibria[0]
    if not equilibria:
        raise SolverError("the Kantian-Nasher game has no equilibrium")
    return select_focal(equilibria)


def build_type_matrix(game: Game, r: Rescaling, cfg: SolverConfig = DEFAULT_CONFIG) -> TypeGameMatrix:
    marks = cached_landmarks(game, cfg)
    kk = efficient_mke(solve_symmetric_mke(game, r, cfg))
    if kk is None:
        raise SolverError(f"no verified efficient symmetric MKE under {r.describe()}")
    kn = kantian_nasher_outcome(solve_kantian_nasher(game, r, cfg))
    return TypeGameMatrix(kk.payoffs[0], kn.u_kantian, kn.u_nasher, marks.u_nash)


def nash_best_response_z(game: Game, r: Rescaling, x2: float, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """``argmax_z U(s(z), x2)``: the Nash best response searched in auxiliary units.

    The seed grid is the image of a uniform x-grid; golden-section search
    and the derivative polish then run on ``z`` itself.
    """
    lo, hi = r.x_range(game.lo, game.upper(cfg))
    with np.errstate(over="ignore"):
        zs = r.invert(num.linear_grid(lo, hi, cfg.grid_points))
    vals = game.u_array(r.apply(zs), x2)
    keep = np.isfinite(zs)
    idx, _ = num.grid_argmax(np.where(keep, vals, np.nan), cfg.tol_opt)
    za, zb = zs[max(idx - 1, 0)], zs[min(idx + 1, zs.size - 1)]
    if not math.isfinite(zb):
        zb = zs[idx]

    def f(z):
        try:
            return game.u(r.apply(z), x2)
        except (ExprDomainError, InfeasibleError):
            return -math.inf

    z, _ = num.golden_max(f, float(za), float(zb), tol=1e-9 * (1.0 + abs(za)), max_iter=cfg.max_iter)

    def slope(v):
        return game.u_own(r.apply(v), x2) * r.deriv(v)

    w = 1e-6 * (1.0 + abs(z))
    left, right = max(z - w, r.z_lo), min(z + w, r.z_hi)
    try:
        s_left, s_right = slope(left), slope(right)
        if s_left > 0 > s_right:
            z = num.bisect(slope, left, right, s_left, s_right, max_iter=cfg.max_iter)
    except (ExprDomainError, InfeasibleError):
        pass
    for edge in (float(za), float(zb)):
        if f(edge) > f(z):
            z = edge
    return z


def best_response_curves(game: Game, r: Rescaling, cfg: SolverConfig = DEFAULT_CONFIG, points: int = 101) -> list[dict]:
    """Rows for plotting both best-response curves against a common grid.

    Each grid value ``z`` (with ``x = s(z)``) is used as the opponent's
    strategy.  Kantian roots produce one row each; a grid value without a
    Kantian root produces a single row with empty Kantian columns.
    """
    lo, hi = r.x_range(game.lo, game.upper(cfg))
    rows = []
    for x in np.linspace(lo, hi, points):
        x = float(x)
        z = r.invert(x)
        brn_x = nash_best_response(game, x, cfg)
        try:
            brn_z = r.invert(brn_x)
        except InfeasibleError:
            brn_z = math.nan
        roots = [k for k in kantian_best_response_safe(game, r, z, cfg) if k.sufficient]
        base = {"z": z, "x": x, "brn_x": brn_x, "brn_z": brn_z}
        if not roots:
            rows.append({**base, "brk_z": None, "brk_x": None, "branch": None})
        for k in roots:
            rows.append({**base, "brk_z": k.z1, "brk_x": k.x1, "branch": k.branch})
    return rows


def kantian_best_response_safe(game, r, z, cfg):
    from .kantian import kantian_best_response

    try:
        return kantian_best_response(game, r, z, cfg)
    except (InfeasibleError, ExprDomainError):
        return []
