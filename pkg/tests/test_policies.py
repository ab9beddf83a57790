import math

import numpy as np
import pytest

from aoimarkov.core import InvalidParameterError, NetworkConfig, params_from_rs
from aoimarkov.optimize import optimize_theorem3
from aoimarkov.policies import (
    AGE_THRESHOLD_ALOHA,
    IDLE,
    OPTIMAL_ALOHA,
    SECOND_ORDER_OPTIMAL,
    SLOTTED_ALOHA,
    TX,
    AtaUserState,
    PolicySpec,
    aloha_policy,
    aloha_sweep_grid,
    decide_transmit,
    make_policy,
    pick_optimal_aloha,
    select_optimal_aloha,
)
from aoimarkov.sim import SimParams, simulate

CFG = NetworkConfig(N=7, C=2, z=1, w=0.5)


def test_make_policy_slotted_aloha():
    p = make_policy(SLOTTED_ALOHA, CFG)
    assert p.chain.r == pytest.approx(1 / 7)
    assert p.chain.s == pytest.approx(6 / 7)
    assert p.chain.is_iid


def test_make_policy_ata():
    p = make_policy(AGE_THRESHOLD_ALOHA, CFG)
    assert p.ata_r == pytest.approx(0.67)
    assert p.ata_threshold == pytest.approx(15.4)
    assert p.ata_initial_max == 17
    with pytest.raises(InvalidParameterError):
        make_policy(AGE_THRESHOLD_ALOHA, NetworkConfig(N=4, C=1))


def test_make_policy_second_order_optimal():
    p = make_policy(SECOND_ORDER_OPTIMAL, CFG)
    res = optimize_theorem3(CFG)
    assert p.chain.s == 1.0
    assert p.chain.lam == res.lambda_star
    assert p.chain.r == pytest.approx(res.lambda_star / (1 - res.lambda_star))


def test_optimal_aloha_placeholder_is_not_ready():
    p = make_policy(OPTIMAL_ALOHA, CFG)
    assert not p.ready
    with pytest.raises(InvalidParameterError):
        decide_transmit(p, IDLE, None, 0.5)


def test_policy_spec_invariants():
    with pytest.raises(InvalidParameterError):
        PolicySpec(SECOND_ORDER_OPTIMAL, chain=params_from_rs(0.2, 0.5))
    with pytest.raises(InvalidParameterError):
        PolicySpec(SLOTTED_ALOHA, chain=params_from_rs(0.2, 0.5))
    with pytest.raises(InvalidParameterError):
        PolicySpec(AGE_THRESHOLD_ALOHA, ata_r=0.0, ata_threshold=3.0)
    with pytest.raises(InvalidParameterError):
        PolicySpec(AGE_THRESHOLD_ALOHA, ata_r=0.5, ata_threshold=0.0)
    with pytest.raises(InvalidParameterError):
        PolicySpec("csma")


def test_decide_transmit_examples():
    aloha = aloha_policy(1 / 7)
    transmit, nxt, _ = decide_transmit(aloha, IDLE, None, 0.10)
    assert not transmit and nxt == TX
    best = make_policy(SECOND_ORDER_OPTIMAL, CFG)
    for draw in (0.0, 0.5, 0.999999):
        transmit, nxt, _ = decide_transmit(best, TX, None, draw)
        assert transmit and nxt == IDLE
    ata = make_policy(AGE_THRESHOLD_ALOHA, CFG)
    for draw in (0.0, 0.3, 0.99):
        transmit, _, state = decide_transmit(ata, IDLE, AtaUserState(10), draw)
        assert not transmit and state.believed_aoi == 11


def test_ata_strict_threshold_and_reset():
    ata = PolicySpec(AGE_THRESHOLD_ALOHA, ata_r=1.0, ata_threshold=3.0)
    transmit, _, state = decide_transmit(ata, IDLE, AtaUserState(3), 0.0)
    assert not transmit and state.believed_aoi == 4
    transmit, _, state = decide_transmit(ata, IDLE, state, 0.0)
    assert transmit and state.believed_aoi == 1


def test_ata_believed_age_tracks_own_transmissions():
    ata = make_policy(AGE_THRESHOLD_ALOHA, CFG)
    rng = np.random.default_rng(3)
    state, since = AtaUserState(1), 0
    for _ in range(5000):
        transmit, _, state = decide_transmit(ata, IDLE, state, rng.random())
        since = 0 if transmit else since + 1
        assert state.believed_aoi >= 1
        assert state.believed_aoi == since + 1


def test_chain_step_frequencies():
    p = PolicySpec(SLOTTED_ALOHA, chain=params_from_rs(0.3, 0.7))
    draws = np.random.default_rng(0).random(20000)
    state, tx = IDLE, 0
    for d in draws:
        transmit, state, _ = decide_transmit(p, state, None, d)
        tx += transmit
    assert tx / draws.size == pytest.approx(0.3, abs=0.015)


def test_sweep_grid():
    grid = aloha_sweep_grid(0.01)
    assert len(grid) == 99
    assert grid[0] == pytest.approx(0.01) and grid[-1] == pytest.approx(0.99)
    with pytest.raises(InvalidParameterError):
        aloha_sweep_grid(0.6)
    with pytest.raises(InvalidParameterError):
        aloha_sweep_grid(0.0)


def test_pick_optimal_aloha_argmin_and_ties():
    sweep = [(0.1, 10.0, 2.0), (0.2, 8.0, 4.0), (0.3, 8.0, 4.0)]
    assert pick_optimal_aloha(sweep, 1.0).chain.lam == pytest.approx(0.2)
    assert pick_optimal_aloha(sweep, 0.0).chain.lam == pytest.approx(0.1)
    assert pick_optimal_aloha(sweep, 1.0).kind == OPTIMAL_ALOHA


def test_select_optimal_aloha_small_scale():
    sim = SimParams(slots=4000, runs=2, warmup_slots=500, batch_length=500, base_seed=11)
    cfg = NetworkConfig(N=7, C=2, z=1, w=1.0)
    chosen = select_optimal_aloha(cfg, sim, 0.05)
    f_best = simulate(cfg, chosen, sim).empirical_objective
    for lam in aloha_sweep_grid(0.05):
        f = simulate(cfg, aloha_policy(lam, OPTIMAL_ALOHA), sim).empirical_objective
        assert f_best <= f or math.isnan(f)
    passive = select_optimal_aloha(NetworkConfig(N=7, C=2, z=1, w=0.0), sim, 0.05)
    assert passive.chain.lam == pytest.approx(0.05)


def test_describe():
    assert "unselected" in make_policy(OPTIMAL_ALOHA, CFG).describe()
    assert "threshold=15.4" in make_policy(AGE_THRESHOLD_ALOHA, CFG).describe()
