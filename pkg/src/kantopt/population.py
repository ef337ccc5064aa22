"""Population models built on the type-versus-type payoff matrix.

Two settings share the matrix: a finite group where every pair plays the
stage game once and players pick a type beforehand, and a continuum where
types are randomly matched and shares evolve by replicator dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _numerics as num
from .errors import SpecError, UndefinedRoleError
from .game import DEFAULT_CONFIG, Game, SolverConfig, cached_landmarks
from .interaction import TypeGameMatrix, kantian_nasher_outcome, solve_kantian_nasher
from .kantian import efficient_mke, solve_symmetric_mke
from .rescale import Rescaling

FIXATION_TOL = 1e-6

KANTIAN = "kantian"
NASHER = "nasher"


@dataclass(frozen=True)
class StagePlan:
    """Second-stage actions by pairing.  Kantian actions are in auxiliary units."""

    z_kk: float
    z_kn: float
    x_nk: float
    x_nn: float


def stage_plan(game: Game, r: Rescaling, cfg: SolverConfig = DEFAULT_CONFIG) -> StagePlan:
    kk = efficient_mke(solve_symmetric_mke(game, r, cfg))
    if kk is None:
        raise SpecError(f"no verified efficient symmetric MKE under {r.describe()}")
    kn = kantian_nasher_outcome(solve_kantian_nasher(game, r, cfg))
    return StagePlan(kk.profile.z1, kn.z1, kn.x2, cached_landmarks(game, cfg).x_nash)


@dataclass(frozen=True)
class PopulationState:
    k: float

    def __post_init__(self):
        if not 0.0 <= self.k <= 1.0:
            raise ValueError(f"Kantian share must lie in [0, 1], got {self.k!r}")

    @property
    def n(self) -> float:
        return 1.0 - self.k


def _check_group(n_total: int, n_kantian: int):
    if n_total < 2:
        raise ValueError(f"group size must be at least 2, got {n_total}")
    if not 0 <= n_kantian <= n_total:
        raise ValueError(f"Kantian count {n_kantian} outside [0, {n_total}]")


def stage_payoffs(n_total: int, n_kantian: int, m: TypeGameMatrix) -> tuple[float | None, float | None]:
    """Total payoff of one Kantian and of one Nasher; ``None`` where the type is absent."""
    _check_group(n_total, n_kantian)
    n_nasher = n_total - n_kantian
    pi_k = (n_kantian - 1) * m.u_kk + n_nasher * m.u_kn if n_kantian >= 1 else None
    pi_n = n_kantian * m.u_nk + (n_nasher - 1) * m.u_nn if n_nasher >= 1 else None
    return pi_k, pi_n


def stage_payoff(n_total: int, n_kantian: int, m: TypeGameMatrix, role: str) -> float:
    pi_k, pi_n = stage_payoffs(n_total, n_kantian, m)
    value = {KANTIAN: pi_k, NASHER: pi_n}[role]
    if value is None:
        raise UndefinedRoleError(f"no {role} in a group of {n_total} with {n_kantian} Kantians")
    return value


@dataclass(frozen=True)
class SpneReport:
    all_kantian_equilibrium: bool
    kantian_weakly_dominant: bool
    strict_gain: bool
    all_nasher_equilibrium: bool
    all_nasher_coalition_proof: bool


def _payoff_as(n_total: int, others_kantian: int, m: TypeGameMatrix, role: str) -> float:
    """One player's payoff when ``others_kantian`` of the other players are Kantians."""
    if role == KANTIAN:
        return stage_payoff(n_total, others_kantian + 1, m, KANTIAN)
    return stage_payoff(n_total, others_kantian, m, NASHER)


def check_spne(n_total: int, m: TypeGameMatrix) -> SpneReport:
    """Type-choice checks in the first stage of the group game.

    ``strict_gain`` records whether choosing Kantian is strictly better
    against at least one composition of the others; without it weak
    dominance holds only trivially.
    """
    _check_group(n_total, 0)
    gaps = [_payoff_as(n_total, j, m, KANTIAN) - _payoff_as(n_total, j, m, NASHER) for j in range(n_total)]
    weakly_dominant = all(g >= 0 for g in gaps)
    strict = any(g > 0 for g in gaps)
    # All Kantian: a lone deviator to Nasher faces n-1 Kantians.
    all_k = gaps[n_total - 1] >= 0
    # All Nasher: a lone deviator to Kantian faces n-1 Nashers.
    all_n = gaps[0] <= 0
    # A pair of Nashers switching together to Kantian, everyone else Nasher.
    pair_gain = stage_payoff(n_total, 2, m, KANTIAN) - stage_payoff(n_total, 0, m, NASHER)
    coalition_proof = all_n and not pair_gain > 0
    return SpneReport(all_k, weakly_dominant, strict, all_n, coalition_proof)


def mean_payoffs(m: TypeGameMatrix, k):
    """Mean payoffs ``(U^K(k), U^N(k))`` under uniform random matching."""
    return k * m.u_kk + (1 - k) * m.u_kn, k * m.u_nk + (1 - k) * m.u_nn


@dataclass(frozen=True)
class EssReport:
    kantian_ess: bool
    nasher_ess: bool
    payoff_gap_at_k_high: float
    payoff_gap_at_k_low: float


def ess_check(m: TypeGameMatrix, epsilon: float) -> EssReport:
    """Invasion tests at ``k = 1 - epsilon`` (Nashers invading) and ``k = epsilon``.

    Gaps are ``U^K - U^N`` at the respective share.
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    uk, un = mean_payoffs(m, 1.0 - epsilon)
    high = uk - un
    uk, un = mean_payoffs(m, epsilon)
    low = uk - un
    return EssReport(high > 0, low < 0, high, low)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    k: np.ndarray
    terminal: str

    def rows(self):
        return zip(self.t.tolist(), self.k.tolist())


def classify(k: float) -> str:
    if abs(k - 1.0) < FIXATION_TOL:
        return "fixation_kantian"
    if abs(k) < FIXATION_TOL:
        return "fixation_nasher"
    return "interior"


def replicator_simulate(
    m: TypeGameMatrix, k0: float, dt: float, steps: int, stop_on_fixation: bool = False
) -> Trajectory:
    """Integrate ``k' = k(1-k)(U^K(k) - U^N(k))`` with fixed-step RK4.

    ``k`` is clamped to ``[0, 1]`` after every step.  With
    ``stop_on_fixation`` the run ends at the first sample that counts as
    fixation.
    """
    if not 0.0 <= k0 <= 1.0:
        raise ValueError(f"k0 must lie in [0, 1], got {k0!r}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps!r}")

    slope = m.u_kk - m.u_kn - m.u_nk + m.u_nn
    base = m.u_kn - m.u_nn

    def rate(k):
        return k * (1.0 - k) * (base + slope * k)

    ks = [float(k0)]
    k = float(k0)
    for _ in range(steps):
        k = min(1.0, max(0.0, num.rk4_step(rate, k, dt)))
        ks.append(k)
        if stop_on_fixation and classify(k) != "interior":
            break
    k_arr = np.array(ks)
    t_arr = dt * np.arange(k_arr.size)
    return Trajectory(t_arr, k_arr, classify(k))
