import math

import numpy as np
import pytest

from kantopt.errors import GameValidationError, NoInteriorNashError, SpecError
from kantopt.game import (
    Game,
    SolverConfig,
    best_response,
    builtin_game,
    game_from_spec,
    landmarks,
    nash_best_response,
    require_valid,
    solve_nash,
    solve_pareto,
    validate_assumptions,
)


def _checks(report):
    return {c.name: c.passed for c in report.checks}


def test_builtins_pass_validation(lq, spg):
    for g in (lq, spg):
        rep = validate_assumptions(g)
        assert rep.passed, rep.failures()
        assert len(rep.checks) == 4


def test_no_interaction_fails_monotonicity():
    g = Game.from_source("own - own^2")
    rep = validate_assumptions(g)
    assert not _checks(rep)["monotone_in_opponent"]
    with pytest.raises(GameValidationError) as info:
        require_valid(g)
    assert info.value.report is rep or not info.value.report.passed


def test_decreasing_in_opponent_is_accepted():
    g = Game.from_source("own - own^2/2 - other/4", 0, 4)
    assert _checks(validate_assumptions(g))["monotone_in_opponent"]


def test_domain_error_reports_location():
    g = Game.from_source("sqrt(1 - own) + other", 0, 2)
    rep = validate_assumptions(g)
    assert not rep.passed
    failed = rep.failures()[0]
    assert failed.location is not None


def test_negative_origin_slope_fails():
    g = Game.from_source("-own + other - own^2", 0, 3)
    assert not _checks(validate_assumptions(g))["positive_own_slope_at_origin"]


def test_nash_best_response_examples(lq, spg):
    assert nash_best_response(lq, 0.7) == pytest.approx(1.0, abs=1e-12)
    assert nash_best_response(spg, 1 / 3) == pytest.approx(1 / 3, abs=1e-12)
    assert nash_best_response(spg, 0.0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("x", np.linspace(0, 1, 11))
def test_spg_best_response_closed_form(spg, x):
    assert nash_best_response(spg, x) == pytest.approx((1 - x) / 2, abs=1e-10)


def test_best_response_boundary_flag():
    g = Game.from_source("own + other - own^2/2", 0, 0.5)
    opt = best_response(g, 0.2)
    assert opt.boundary and opt.x == 0.5


def test_solve_nash_examples(lq, spg):
    n = solve_nash(lq)
    assert n.x == pytest.approx(1.0, abs=1e-10) and n.u == pytest.approx(1.5, abs=1e-10)
    assert n.residual <= 1e-10
    n3 = solve_nash(spg)
    assert n3.x == pytest.approx(1 / 3, abs=1e-10)
    assert n3.u == pytest.approx(2 * math.sqrt(2 / 3), abs=1e-10)


def test_nash_first_order_condition(lq, spg):
    for g in (lq, spg):
        x = solve_nash(g).x
        assert abs(g.u_own(x, x)) <= 1e-6


def test_degenerate_game_fails_validation_before_nash():
    g = Game.from_source("own*0 + other*0")
    with pytest.raises(GameValidationError):
        solve_nash(g)


def test_no_interior_nash():
    # best response is always the upper bound, so BR(x) - x never changes sign
    g = Game.from_source("own + other - own^2/2", 0, 0.5)
    with pytest.raises((NoInteriorNashError, GameValidationError)):
        solve_nash(g)


def test_solve_pareto_examples(lq, spg):
    p = solve_pareto(lq)
    assert p.x == pytest.approx(2.0, abs=1e-10) and p.value == pytest.approx(2.0, abs=1e-12)
    p3 = solve_pareto(spg)
    assert p3.x == pytest.approx(2 / 3, abs=1e-10) and p3.value == pytest.approx(math.sqrt(3), abs=1e-12)

def test_pareto_without_validation():
    # not monotone in the opponent, so only the diagonal search applies
    g = Game.from_source("-(own-1)^2 - (other-1)^2", 0, 3)
    assert not _checks(validate_assumptions(g))["monotone_in_opponent"]
    with pytest.raises(GameValidationError):
        solve_pareto(g)
    q = solve_pareto(g, check=False)
    assert q.x == pytest.approx(1.0, abs=1e-9) and q.value == 0.0


def test_pareto_dominates_nash(lq, spg):
    for g in (lq, spg):
        m = landmarks(g)
        assert m.u_pareto > m.u_nash


def test_doubling_grid_is_stable(lq, spg):
    fine = SolverConfig(grid_points=1024)
    for g in (lq, spg):
        for x in (0.0, 0.3, 0.8):
            assert abs(nash_best_response(g, x) - nash_best_response(g, x, fine)) <= 1e-7


def test_solver_config_validation():
    with pytest.raises(SpecError):
        SolverConfig(grid_points=8)
    with pytest.raises(SpecError):
        SolverConfig(tol_root=-1)


def test_game_spec_round_trip(spg):
    g = game_from_spec(spg.to_spec())
    assert g.payoff.root == spg.payoff.root and (g.lo, g.hi) == (spg.lo, spg.hi)
    assert game_from_spec({"payoff": "own + other - own^2/2", "domain": {"lo": 0, "hi": "inf"}}).hi == math.inf


@pytest.mark.parametrize(
    "spec",
    [[], {"domain": {}}, {"payoff": 3}, {"payoff": "own", "domain": {"hi": "big"}}, {"payoff": "own + z"}],
)
def test_bad_game_specs(spec):
    with pytest.raises(SpecError):
        game_from_spec(spec)


def test_builtin_registry():
    assert builtin_game("builtin:linear-quadratic") is builtin_game("linear-quadratic")
    with pytest.raises(SpecError):
        builtin_game("builtin:nope")
