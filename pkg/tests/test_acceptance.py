"""Acceptance criteria, one test each.

Every test records a one-line verdict that the terminal summary prints
under "acceptance criteria".  The checks run at the stated tolerances;
nothing is loosened to make a line pass.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from kantopt.errors import InfeasibleError
from kantopt.expr import parse_expression
from kantopt.game import builtin_game, cached_landmarks, nash_best_response
from kantopt.interaction import (
    build_type_matrix,
    kantian_nasher_outcome,
    nash_best_response_z,
    select_focal,
    solve_kantian_nasher,
)
from kantopt.kantian import ZProfile, efficient_mke, kantian_best_response, solve_symmetric_mke, verify_mke
from kantopt.population import check_spne, ess_check, replicator_simulate
from kantopt.rescale import Rescaling, efficient_rescaling

from conftest import ACCEPTANCE_LINES, GOLDEN

LQ = builtin_game("linear-quadratic")
SPG = builtin_game("sqrt-public-good")
GAMES = (LQ, SPG)


class Criterion:
    """Collects named checks and records a single verdict line."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.failures: list[str] = []
        self.count = 0

    def check(self, ok: bool, what: str):
        self.count += 1
        if not ok:
            self.failures.append(what)

    def finish(self):
        status = "PASS" if not self.failures else "FAIL"
        detail = f"{self.count} checks" if not self.failures else "; ".join(self.failures[:3])
        ACCEPTANCE_LINES.append(f"criterion {self.number}: {status}  {self.title}  ({detail})")
        print(ACCEPTANCE_LINES[-1])
        assert not self.failures, self.failures


def efficient(game):
    return efficient_rescaling(cached_landmarks(game))


def sufficient_roots(game, r, z2):
    return [k for k in kantian_best_response(game, r, z2) if k.sufficient]


# --------------------------------------------------------------------------


def test_criterion_1_identity_regression():
    c = Criterion(1, "identity Kantian BR to x2 = 2 is (1+sqrt5)/2; symmetric MKE at x = 2 pays 2")
    roots = sufficient_roots(LQ, Rescaling.identity(), 2.0)
    c.check(
        any(abs(k.x1 - GOLDEN) <= 1e-8 for k in roots),
        f"BR to x2 = 2 is {[round(k.x1, 12) for k in roots]}, not {GOLDEN:.12f}",
    )
    eff = efficient_mke(solve_symmetric_mke(LQ, Rescaling.identity()))
    c.check(eff is not None and abs(eff.x_profile.x1 - 2.0) <= 1e-8, "efficient symmetric MKE not at x = 2")
    c.check(eff is not None and abs(eff.payoffs[0] - 2.0) <= 1e-8, "efficient symmetric MKE payoff is not 2")
    c.finish()


def test_criterion_2_log_and_sqrt():
    c = Criterion(2, "log BR is e^2, sqrt BR follows its closed form, both MKEs map to x = 2")
    log, sqrt = Rescaling.log(), Rescaling.sqrt()
    for z2 in np.linspace(1.0, 60.0, 50):
        roots = sufficient_roots(LQ, log, z2)
        c.check(len(roots) == 1 and abs(roots[0].z1 - math.e**2) <= 1e-6, f"log BR at z2={z2:.4g}: {roots}")
    for z2 in np.linspace(0.02, 60.0, 50):
        expected = ((1 + math.sqrt(1 + 4 * math.sqrt(z2))) / 2) ** 2
        roots = sufficient_roots(LQ, sqrt, z2)
        c.check(len(roots) == 1 and abs(roots[0].z1 - expected) <= 1e-8, f"sqrt BR at z2={z2:.4g}: {roots}")
    for r in (log, sqrt):
        eff = efficient_mke(solve_symmetric_mke(LQ, r))
        c.check(eff is not None and abs(eff.x_profile.x1 - 2.0) <= 1e-8, f"{r.describe()} MKE not at x = 2")
    c.finish()


def test_criterion_3_kantian_nasher_table():
    c = Criterion(3, "Kantian-Nasher payoffs for the four rescalings of the linear-quadratic game")
    a = ((3 + math.sqrt(5)) / 4, (2 + math.sqrt(5)) / 2)
    cases = [
        ("a identity", Rescaling.identity(), a),
        ("b log", Rescaling.log(), (1.0, 2.5)),
        ("c sqrt", Rescaling.sqrt(), a),
        ("d efficient", efficient(LQ), (1.5, 1.5)),
    ]
    for label, r, expected in cases:
        e = kantian_nasher_outcome(solve_kantian_nasher(LQ, r))
        ok = abs(e.u_kantian - expected[0]) <= 1e-6 and abs(e.u_nasher - expected[1]) <= 1e-6
        c.check(ok, f"case {label}: {e.payoffs} vs {expected}")
    c.finish()


def test_criterion_4_sqrt_public_good():
    c = Criterion(4, "sqrt public good landmarks and its two Kantian-Nasher equilibria")
    m = cached_landmarks(SPG)
    c.check(abs(m.x_nash - 1 / 3) <= 1e-8, f"x^N = {m.x_nash}")
    c.check(abs(m.u_nash - 2 * math.sqrt(2 / 3)) <= 1e-8, f"U^N = {m.u_nash}")
    c.check(abs(m.x_pareto - 2 / 3) <= 1e-8, f"x^P = {m.x_pareto}")
    c.check(abs(m.u_pareto - math.sqrt(3)) <= 1e-8, f"U^P = {m.u_pareto}")
    r = Rescaling.affine(1 / 3)
    eqs = solve_kantian_nasher(SPG, r)
    c.check(len(eqs) == 2, f"{len(eqs)} equilibria")
    sym = [e for e in eqs if abs(e.z1) <= 1e-6 and abs(e.z2) <= 1e-6]
    asym = [e for e in eqs if abs(e.z1 - 10 / 33) <= 1e-6 and abs(e.z2 + 5 / 33) <= 1e-6]
    c.check(len(sym) == 1, "symmetric (0, 0) missing")
    c.check(len(asym) == 1, "asymmetric (10/33, -5/33) missing")
    if asym:
        e = asym[0]
        c.check(abs(e.u_kantian - 5 / math.sqrt(11)) <= 1e-6, f"Kantian payoff {e.u_kantian}")
        c.check(abs(e.u_nasher - 6 / math.sqrt(11)) <= 1e-6, f"Nasher payoff {e.u_nasher}")
    for e in sym + asym:
        c.check(verify_mke(SPG, r, ZProfile(e.z1, e.z2)).verified, f"oracle rejects ({e.z1}, {e.z2})")
    c.finish()


def test_criterion_5_efficient_rescaling_payoffs():
    c = Criterion(5, "efficient rescaling: focal KN pays (U^N, U^N), KK pays U^P")
    for g in GAMES:
        m = cached_landmarks(g)
        r = efficient(g)
        focal = select_focal(solve_kantian_nasher(g, r))
        c.check(abs(focal.u_kantian - m.u_nash) <= 1e-6, f"{g.name} focal Kantian {focal.u_kantian}")
        c.check(abs(focal.u_nasher - m.u_nash) <= 1e-6, f"{g.name} focal Nasher {focal.u_nasher}")
        kk = efficient_mke(solve_symmetric_mke(g, r))
        c.check(kk is not None and abs(kk.payoffs[0] - m.u_pareto) <= 1e-6, f"{g.name} KK payoff")
    c.finish()


def test_criterion_6_group_type_choice():
    c = Criterion(6, "Kantian weakly dominant, all-Nasher is an equilibrium but not coalition-proof")
    for g in GAMES:
        mat = build_type_matrix(g, efficient(g))
        for n in range(2, 13):
            rep = check_spne(n, mat)
            c.check(rep.kantian_weakly_dominant, f"{g.name} n={n}: not weakly dominant")
            c.check(rep.all_nasher_equilibrium, f"{g.name} n={n}: all-Nasher not an equilibrium")
            c.check(not rep.all_nasher_coalition_proof, f"{g.name} n={n}: all-Nasher coalition-proof")
    c.finish()


def test_criterion_7_evolutionary_stability():
    c = Criterion(7, "Kantian ESS, Nasher not; replicator fixation at k = 1 from 0.1, 0.5, 0.9")
    start = time.perf_counter()
    for g in GAMES:
        mat = build_type_matrix(g, efficient(g))
        for eps in (0.001, 0.01, 0.1):
            rep = ess_check(mat, eps)
            c.check(rep.kantian_ess and not rep.nasher_ess, f"{g.name} eps={eps}: {rep}")
        for k0 in (0.1, 0.5, 0.9):
            traj = replicator_simulate(mat, k0, 0.01, 10**6, stop_on_fixation=True)
            c.check(traj.terminal == "fixation_kantian", f"{g.name} k0={k0}: {traj.terminal}")
            c.check(abs(traj.k[-1] - 1) < 1e-6, f"{g.name} k0={k0}: final k {traj.k[-1]}")
    elapsed = time.perf_counter() - start
    c.check(elapsed < 5.0, f"took {elapsed:.2f} s")
    c.finish()


# -- criterion 8 ----------------------------------------------------------

RESCALINGS = {
    "identity": lambda g: Rescaling.identity(),
    "efficient": efficient,
    "log": lambda g: Rescaling.log(),
    "sqrt": lambda g: Rescaling.sqrt(),
    "power2": lambda g: Rescaling.power(2.0),
    "power0.7": lambda g: Rescaling.power(0.7),
}


@lru_cache(maxsize=None)
def _claims(game_name: str, rescaling: str):
    """MKE claims that do not depend on a random opponent: symmetric MKEs and KN Kantian sides."""
    g = builtin_game(game_name)
    r = RESCALINGS[rescaling](g)
    sym = [(m.profile, (1, 2)) for m in solve_symmetric_mke(g, r) if m.verified]
    kn = [(ZProfile(e.z1, e.z2), (1,)) for e in solve_kantian_nasher(g, r) if e.verified]
    return g, r, sym, kn


def _feasible(g, r, p: ZProfile) -> bool:
    try:
        return g.contains(r.apply(p.z1)) and g.contains(r.apply(p.z2))
    except InfeasibleError:
        return False


def _perturbations(g, r, p: ZProfile, players):
    """Shift the claimed root by 0.05 in each direction (both coordinates for symmetric claims)."""
    out = []
    for d in (0.05, -0.05):
        q = ZProfile(p.z1 + d, p.z2 + d) if players == (1, 2) else ZProfile(p.z1 + d, p.z2)
        if _feasible(g, r, q):
            out.append(q)
    return out


def test_criterion_8_oracle_consistency():
    c = Criterion(8, "200 random claimed MKEs pass the oracle and their 0.05 perturbations fail it")
    rng = np.random.default_rng(20240601)
    names = list(RESCALINGS)
    triples = 0
    perturbed = 0
    while triples < 200:
        game_name = ("linear-quadratic", "sqrt-public-good")[rng.integers(2)]
        rname = names[rng.integers(len(names))]
        g, r, sym, kn = _claims(game_name, rname)
        source = ("symmetric", "kn", "kbr")[rng.integers(3)]
        if source == "kbr":
            lo, hi = r.x_range(g.lo, min(g.upper(), 5.0))
            z2 = r.invert(rng.uniform(lo, hi))
            claims = [(ZProfile(k.z1, z2), (1,)) for k in sufficient_roots(g, r, z2)]
        else:
            claims = sym if source == "symmetric" else kn
        if not claims:
            continue
        p, players = claims[rng.integers(len(claims))]
        triples += 1
        label = f"{game_name}/{rname}/{source} ({p.z1:.6g}, {p.z2:.6g})"
        c.check(verify_mke(g, r, p, players=players).verified, f"claim rejected: {label}")
        for q in _perturbations(g, r, p, players):
            perturbed += 1
            c.check(not verify_mke(g, r, q, players=players).verified, f"perturbation accepted: {label} -> {q}")
    c.check(perturbed >= 200, f"only {perturbed} feasible perturbations")
    c.finish()


# -- criterion 9 ----------------------------------------------------------


def _random_expression(rng, depth: int) -> str:
    """Random well-conditioned expression in own and other (smooth on [0.1, 2]^2)."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.7:
            return ("own", "other")[rng.integers(2)]
        return repr(round(float(rng.uniform(0.2, 3.0)), 3))
    a = _random_expression(rng, depth - 1)
    b = _random_expression(rng, depth - 1)
    kind = rng.integers(9)
    return [
        f"({a} + {b})",
        f"({a} - {b})",
        f"({a} * {b})",
        f"({a} / (1 + ({b})^2))",
        f"sqrt(1 + ({a})^2)",
        f"ln(1 + ({a})^2)",
        f"exp(-({a})^2)",
        f"({a})^{int(rng.integers(2, 4))}",
        f"-{a}",
    ][kind]


def test_criterion_9_numerical_hygiene():
    c = Criterion(9, "dual derivatives match central differences; Nash BR is rescaling-invariant")
    rng = np.random.default_rng(7)
    h = 1e-6
    for i in range(100):
        src = _random_expression(rng, 4)
        e = parse_expression(src, ("own", "other"))
        own, other = rng.uniform(0.1, 2.0, 2)
        var = ("own", "other")[i % 2]
        b = {"own": own, "other": other}
        up, dn = dict(b), dict(b)
        up[var] += h
        dn[var] -= h
        fd = (e.evaluate(up) - e.evaluate(dn)) / (2 * h)
        d = e.differentiate(var, b)
        c.check(abs(d - fd) <= 1e-5 * max(1.0, abs(d)), f"{src} at {b}: dual {d} vs fd {fd}")
    for r in (Rescaling.log(), Rescaling.sqrt(), Rescaling.affine(1.0), Rescaling.power(2.0)):
        lo, hi = r.x_range(LQ.lo, 6.0)
        for x2 in np.linspace(lo, hi, 25):
            direct = nash_best_response(LQ, x2)
            via_z = r.apply(nash_best_response_z(LQ, r, x2))
            c.check(abs(direct - via_z) <= 1e-6, f"{r.describe()} x2={x2:.4g}: {via_z} vs {direct}")
    c.finish()
