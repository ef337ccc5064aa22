import numpy as np
import pytest

from kantopt.errors import UndefinedRoleError
from kantopt.interaction import TypeGameMatrix, build_type_matrix
from kantopt.population import (
    PopulationState,
    check_spne,
    ess_check,
    replicator_simulate,
    stage_payoff,
    stage_payoffs,
    stage_plan,
)
from kantopt.rescale import Rescaling

LQ = TypeGameMatrix(2.0, 1.5, 1.5, 1.5)
FLAT = TypeGameMatrix(1.0, 1.0, 1.0, 1.0)


def test_stage_payoff_examples():
    assert stage_payoffs(3, 2, LQ) == (3.5, 3.0)
    assert stage_payoffs(2, 2, LQ)[0] == 2.0
    assert stage_payoffs(5, 1, LQ) == (6.0, 6.0)


def test_undefined_roles():
    assert stage_payoffs(4, 0, LQ)[0] is None
    assert stage_payoffs(4, 4, LQ)[1] is None
    with pytest.raises(UndefinedRoleError):
        stage_payoff(4, 0, LQ, "kantian")
    with pytest.raises(UndefinedRoleError):
        stage_payoff(4, 4, LQ, "nasher")
    with pytest.raises(ValueError):
        stage_payoffs(1, 1, LQ)
    with pytest.raises(ValueError):
        stage_payoffs(3, 4, LQ)


@pytest.mark.parametrize("n", range(2, 21))
def test_group_formulas_under_efficient_matrix(n):
    up, un = LQ.u_kk, LQ.u_nn
    for nk in range(1, n + 1):
        assert stage_payoff(n, nk, LQ, "kantian") == (nk - 1) * up + (n - nk) * un
    for nk in range(0, n):
        assert stage_payoff(n, nk, LQ, "nasher") == (n - 1) * un


def test_spne_examples(spg, spg_efficient):
    rep = check_spne(4, LQ)
    assert (rep.all_kantian_equilibrium, rep.kantian_weakly_dominant, rep.all_nasher_equilibrium) == (True, True, True)
    assert not rep.all_nasher_coalition_proof and rep.strict_gain
    flat = check_spne(4, FLAT)
    assert flat.kantian_weakly_dominant and not flat.strict_gain
    m3 = build_type_matrix(spg, spg_efficient)
    rep3 = check_spne(10, m3)
    assert (rep3.all_kantian_equilibrium, rep3.kantian_weakly_dominant, rep3.all_nasher_equilibrium) == (True, True, True)
    assert not rep3.all_nasher_coalition_proof


def test_identity_rescaling_reverses_incentives(lq):
    m = build_type_matrix(lq, Rescaling.identity())
    rep = check_spne(4, m)
    assert not rep.kantian_weakly_dominant
    assert not ess_check(m, 0.01).kantian_ess or ess_check(m, 0.01).nasher_ess


def test_ess_examples():
    rep = ess_check(LQ, 0.01)
    assert rep.kantian_ess and not rep.nasher_ess
    assert rep.payoff_gap_at_k_high == pytest.approx(0.495, abs=1e-12)
    flat = ess_check(FLAT, 0.01)
    assert not flat.kantian_ess and not flat.nasher_ess
    with pytest.raises(ValueError):
        ess_check(LQ, 0.6)


def test_replicator_examples():
    traj = replicator_simulate(LQ, 0.5, 0.01, 20000)
    assert traj.terminal == "fixation_kantian"
    for k0 in (0.0, 1.0):
        t = replicator_simulate(LQ, k0, 0.01, 100)
        assert np.all(t.k == k0)
    assert replicator_simulate(LQ, 0.0, 0.01, 10).terminal == "fixation_nasher"


@pytest.mark.parametrize("k0", [0.1, 0.5, 0.9])
def test_replicator_monotone(k0):
    traj = replicator_simulate(LQ, k0, 0.01, 10**6, stop_on_fixation=True)
    assert np.all(np.diff(traj.k) >= 0)
    assert traj.terminal == "fixation_kantian"


def test_replicator_stays_in_unit_interval():
    wild = TypeGameMatrix(40.0, -30.0, 25.0, -10.0)
    for k0 in np.linspace(0, 1, 11):
        traj = replicator_simulate(wild, k0, 0.1, 2000)
        assert np.all((traj.k >= 0) & (traj.k <= 1))


def test_replicator_bad_input():
    for args in ((1.5, 0.01, 10), (0.5, 0.0, 10), (0.5, 0.01, 0)):
        with pytest.raises(ValueError):
            replicator_simulate(LQ, *args)


def test_population_state():
    assert PopulationState(0.25).n == 0.75
    with pytest.raises(ValueError):
        PopulationState(1.2)


def test_stage_plan(lq, spg, lq_efficient, spg_efficient):
    p = stage_plan(lq, lq_efficient)
    assert (p.z_kk, p.z_kn, p.x_nk, p.x_nn) == pytest.approx((1.0, 0.0, 1.0, 1.0), abs=1e-9)
    p3 = stage_plan(spg, spg_efficient)
    assert (p3.z_kk, p3.z_kn, p3.x_nk, p3.x_nn) == pytest.approx((1 / 3, 0.0, 1 / 3, 1 / 3), abs=1e-9)
