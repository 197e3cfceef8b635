import math

import numpy as np
import pytest

from jamsec import analytics
from jamsec.actors import ABSENT, HARVEST_ONLY, JAM, SPLIT_DECODE, AliceState, EveBattery
from jamsec.params import AttackerPolicy, ConfigError, SystemConfig, derive
from jamsec.sensing import detector_spec
from jamsec.sim import (RandomStreams, SimFlags, SimState, _param_vectors, _slot_core,
                        batch_means, run, slot_step)
from jamsec.validation import trace_violations

CFG = SystemConfig(alpha_A=1.0, lambda_A=1.0)
D = derive(CFG)


def slot(level, g_AB=1.0, g_AE=0.05, g_EB=0.0, policy=AttackerPolicy(), flags=SimFlags(),
         q=1, u_jam=0.0, det_factor=1.0):
    spec = detector_spec(CFG, policy, D) if policy.sensing_enabled else None
    par, flg = _param_vectors(CFG, D, policy, flags, spec)
    out = _slot_core(q, level, 0.0, 0.0, u_jam, g_AB, g_AE, g_EB, det_factor, par, flg)
    names = ("arrival", "I_A", "action", "I_MD", "I_D", "I_FA", "delivered", "service",
             "credit", "E_H", "E_out", "level", "q", "breach")
    return dict(zip(names, out))


def test_jam_with_strong_interference_blocks_delivery():
    s = slot(D.E_J, g_EB=1e6, policy=AttackerPolicy(alpha_E=1.0))
    assert s["action"] == JAM and s["I_A"]
    assert not s["delivered"] and not s["credit"] and not s["service"]
    assert s["E_out"] == D.E_J and s["q"] == 2


def test_jam_survived_earns_credit_but_packet_stays():
    s = slot(D.E_J, g_EB=0.0, policy=AttackerPolicy(alpha_E=1.0))
    assert s["credit"] and not s["delivered"] and s["q"] == 2
    s = slot(D.E_J, g_EB=0.0, policy=AttackerPolicy(alpha_E=1.0),
             flags=SimFlags(jam_success_departs=True))
    assert s["credit"] and s["delivered"] and s["q"] == 1


def test_decode_without_split_is_secure_iff_delivered():
    s = slot(D.E_d, g_AE=100.0, policy=AttackerPolicy(rho=0.0))
    assert s["action"] == SPLIT_DECODE and s["delivered"] and s["credit"]
    s = slot(D.E_d, g_AB=0.01, policy=AttackerPolicy(rho=0.0))
    assert not s["delivered"] and not s["credit"]


def test_decode_with_split_uses_secrecy_rate():
    s = slot(D.E_d, g_AB=1.0, g_AE=1.0, policy=AttackerPolicy(rho=1.0))
    assert s["delivered"] and not s["credit"]


def test_starved_semantics():
    # weak Alice-Eve link: log2(1 + 10 * 0.05) < 1
    s = slot(0.0, g_AE=0.05)
    assert s["action"] == HARVEST_ONLY and s["delivered"] and not s["credit"]
    s = slot(0.0, g_AE=1.0)
    assert s["credit"]
    s = slot(0.0, g_AE=0.05, flags=SimFlags(eve_starved_secrecy="link-based"))
    assert s["credit"]


def test_absent_eve():
    s = slot(1.0, g_AE=100.0, policy=AttackerPolicy(rho=1.0, alpha_E=1.0),
             flags=SimFlags(eve_present=False))
    assert s["action"] == ABSENT and s["credit"] and s["E_out"] == 0 and s["E_H"] == 0


def test_sensing_miss_and_false_alarm():
    pol = AttackerPolicy(rho=1.0, sensing_enabled=True)
    miss = slot(D.E_d, g_AE=1.0, policy=pol, det_factor=0.0)
    assert miss["I_MD"] and not miss["I_D"] and miss["credit"]   # starved-branch rule
    assert miss["E_out"] == pytest.approx(0.1 * D.E_d)
    hit = slot(D.E_d, g_AE=1.0, policy=pol, det_factor=1.0)
    assert hit["I_D"] and not hit["credit"] and hit["E_out"] == D.E_d
    fa = slot(D.E_d, g_AB=0.0, policy=pol, det_factor=10.0)
    assert not fa["I_A"] and fa["I_FA"] and fa["E_out"] == D.E_d


def test_run_silent_alice():
    cfg = SystemConfig(alpha_A=0.0, E_const=1e-6)
    r = run(cfg, AttackerPolicy(alpha_E=0.5, rho=0.5), seed=3, n_slots=5000, keep_trace=True)
    assert r.mu_A_hat == 0 and r.mu_sec_hat == 0 and r.departures == 0
    assert r.trace.battery[-1] == pytest.approx(5000 * 1e-6)
    assert np.all(np.diff(r.trace.battery) >= 0)


def test_never_spending_eve_accumulates():
    # free decoding and an unreachable jam threshold: Eve never spends
    cfg = SystemConfig(lambda_A=0.6, P_d=0.0, P_J=1e9)
    r = run(cfg, AttackerPolicy(alpha_E=1.0, rho=0.3), seed=1, n_slots=20_000, keep_trace=True)
    assert np.all(r.trace.e_out == 0)
    assert np.all(np.diff(r.trace.battery) >= 0)


def test_run_starved_eve_matches_link_events():
    cfg = SystemConfig(lambda_A=1.0, alpha_A=1.0, P_d=1e6, P_J=1e6)
    n = 200_000
    d = derive(cfg)
    p3 = math.exp(-(2 ** d.R_target - 1) / d.gamma_A)
    r = run(cfg, AttackerPolicy(), seed=5, n_slots=n)
    assert abs(r.mu_sec_hat - d.P1 * p3) <= 3 * r.se["mu_sec"] + 1e-12
    r = run(cfg, AttackerPolicy(), seed=5, n_slots=n,
            flags=SimFlags(eve_starved_secrecy="link-based"))
    assert abs(r.mu_sec_hat - d.P1) <= 3 * r.se["mu_sec"] + 1e-12


def test_run_is_deterministic():
    pol = AttackerPolicy(alpha_E=0.4, rho=0.6, sensing_enabled=True)
    a = run(SystemConfig(lambda_A=0.4), pol, seed=11, n_slots=20_000).to_dict()
    b = run(SystemConfig(lambda_A=0.4), pol, seed=11, n_slots=20_000).to_dict()
    assert a == b
    c = run(SystemConfig(lambda_A=0.4), pol, seed=12, n_slots=20_000).to_dict()
    assert a != c


def test_shared_streams_reproduce_seeded_run():
    s = RandomStreams.draw((4, 2), 10_000)
    pol = AttackerPolicy(alpha_E=0.2, rho=0.3)
    assert (run(SystemConfig(), pol, n_slots=10_000, streams=s).to_dict()
            == run(SystemConfig(), pol, seed=(4, 2), n_slots=10_000).to_dict())
    with pytest.raises(ConfigError):
        run(SystemConfig(), pol, n_slots=5000, streams=s)


def test_trace_accounting_exact():
    cfg = SystemConfig(lambda_A=0.6, E_const=2e-6)
    pol = AttackerPolicy(alpha_E=0.5, rho=0.4, sensing_enabled=True)
    r = run(cfg, pol, seed=9, n_slots=50_000, keep_trace=True,
            flags=SimFlags(initial_queue=3, detector="exact"))
    assert all(v == 0 for v in trace_violations(r.trace, cfg.E_const, 3).values())
    assert r.arrivals - r.departures + 3 == r.queue_final


def test_state_probs_are_consistent():
    r = run(SystemConfig(lambda_A=0.5), AttackerPolicy(alpha_E=0.3, rho=0.5), seed=2,
            n_slots=50_000)
    p = r.state_probs
    p.validate()
    assert p.b_high + p.b_low == pytest.approx(1.0)
    assert p.p_high <= p.b_high + 1e-12


def test_service_rate_matches_eq1():
    cfg = SystemConfig(lambda_A=0.6)
    r = run(cfg, AttackerPolicy(alpha_E=0.5, rho=0.5), seed=8, n_slots=100_000)
    d = derive(cfg)
    p = r.state_probs
    expected = analytics.eq1_service_rate(d.alpha_A, 0.5, p.b_high, p.b_low, d.P1)
    assert abs(r.mu_A_hat - expected) <= 3 * r.se["mu_A"]


def test_sensing_converges_to_no_sensing():
    cfg = SystemConfig(lambda_A=0.5)
    s = RandomStreams.draw(3, 100_000)
    base = run(cfg, AttackerPolicy(rho=0.5, alpha_E=0.3), n_slots=100_000, streams=s)
    sensed = run(cfg, AttackerPolicy(rho=0.5, alpha_E=0.3, sensing_enabled=True, tau=1e-3,
                                     P_FA_target=1e-6), n_slots=100_000, streams=s)
    assert abs(base.mu_sec_hat - sensed.mu_sec_hat) <= 0.01


def test_slot_step_single_slots():
    rng = np.random.default_rng(0)
    state = SimState(AliceState(0, 1.0), EveBattery(0.0))
    cfg = SystemConfig(lambda_A=0.7, E_const=1e-5)
    pol = AttackerPolicy(alpha_E=0.5, rho=0.5, sensing_enabled=True)
    q = 0
    for _ in range(2000):
        before = state.battery.level
        out = slot_step(state, rng, cfg, pol)
        assert state.battery.level == before - out.E_out + out.E_H + cfg.E_const
        q += out.arrival - int(out.delivered)
        assert state.alice.queue_len == q >= 0


def test_batch_means():
    x = np.repeat(np.arange(4.0), 5)
    mean, se = batch_means(x, 4)
    assert mean == 1.5
    assert se == pytest.approx(np.std(np.arange(4.0), ddof=1) / 2)
    assert math.isnan(batch_means(np.ones(3), 5)[1])


@pytest.mark.parametrize("kw", [{"burn_in": 1.0}, {"n_batches": 1}, {"detector": "x"},
                                {"eve_starved_secrecy": "x"}, {"initial_queue": -1}])
def test_flag_validation(kw):
    with pytest.raises(ConfigError):
        SimFlags(**kw).validate()
