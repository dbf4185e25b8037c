import numpy as np
import pytest
from conftest import blank_plan, make_env, mission, open_link, seed_buffer, toy_scenario

from crossdom.netenv import (
    build_bms_jsi,
    build_network,
    build_tms_jsi,
    feasible_bms,
    feasible_tms,
    sat_state,
)
from crossdom.netenv.observe import (
    bms_masks,
    flat_masks,
    normalize,
    process_survival,
    tms_masks,
)
from crossdom.scenario import StateScales

UNIT = StateScales(1.0, 1.0, 1.0, 1.0)


def test_sat_state_examples():
    s = sat_state([], 50e3, 60e9, 25e3, 500.0, [])
    assert s.b_rel == 60.0  # capacity in Gbit for an empty buffer
    assert s.ce_avg == 0.0 and s.rs_avg == 0.0
    assert sat_state([], 25.5e3, 60e9, 25e3, 500.0, []).e_rel == 1.0
    full = sat_state([mission(0, 20.0, survival=4), mission(1, 10.0, survival=8)], 0.0, 60e9, 25e3, 500.0,
                     [60e6, 30e6])
    assert full.b_rel == pytest.approx(2.0, rel=1e-15)
    assert full.ce_avg == 45e6 and full.rs_avg == 6.0
    assert full.as_array().tolist() == [full.b_rel, 0.0, 45e6, 6.0]


def test_process_survival_zero_cases():
    self_hat, relay_hat = process_survival(np.array([0.0, 4.0, 4.0]), np.array([[3.0], [0.0], [2.0]]))
    assert self_hat.tolist() == [0.0, 1.0, 1.0]
    assert relay_hat[:, 0].tolist() == [0.0, 4.0, 2.0]


def test_bms_jsi_identical_raw_states():
    own = np.array([1.5, 0.8, 0.5, 3.0])
    jsi = build_bms_jsi(own, np.tile(own, (4, 1)), UNIT)
    assert jsi.shape == (4, 5)
    # every relay is the self ratio 1 on survival, same as the self entry
    assert np.array_equal(jsi[:3], np.tile(own[:3, None], (1, 5)))
    assert jsi[3].tolist() == [1.0] * 5


def test_bms_jsi_survival_cases_and_clip():
    own = np.array([1.0, 1.0, 0.0, 0.0])
    relays = np.array([[9.0, 0.5, 0.0, 2.0]] * 4)
    jsi = build_bms_jsi(own, relays, UNIT)
    assert jsi[3, 0] == 0.0  # self mean 0
    assert (jsi[3, 1:] == 0.0).all()  # 0 / 2
    assert (jsi[0, 1:] == 2.0).all()  # clipped storage value
    jsi = build_bms_jsi(np.array([1.0, 1.0, 0.0, 3.0]), np.array([[1.0, 1.0, 0.0, 0.0]] * 4), UNIT)
    assert (jsi[3, 1:] == 2.0).all()  # relay 0 -> self value 3, clipped


def test_normalize_scales_and_clips():
    got = normalize(np.array([[4.0, 1.0, 30e6, 0.5], [-1.0, 9.0, 200e6, 1.0]]), StateScales())
    assert got.tolist() == [[2.0, 0.5, 0.5, 0.5], [0.0, 2.0, 2.0, 1.0]]


def test_tms_jsi_structure():
    rng = np.random.default_rng(0)
    bms = rng.uniform(0, 2, (4, 5))
    own = rng.uniform(0, 3, 4)
    tms = build_tms_jsi(own, bms, rng.uniform(0, 3, (2, 4)))
    assert tms.shape == (4, 3)
    oracle = np.array([sum(bms[f, e] for e in range(5)) / 5 for f in range(4)])
    assert np.abs(tms[:, 0] - oracle).max() <= 1e-12
    same = np.full((4, 5), 0.7)
    assert np.allclose(build_tms_jsi(own, same, np.zeros((1, 4)))[:, 0], 0.7, atol=1e-15)
    with pytest.raises(ValueError):
        build_tms_jsi(own, bms, np.zeros((2, 4)), is_cs=False)


def _two_domain_toy():
    cfg = toy_scenario(domains=((1, 4), (1, 4)), slots=2, stations=2)
    net = build_network(cfg)
    return cfg, net, blank_plan(net, 2, stations=2)


def test_masks_and_feasible_sets():
    cfg, net, plan = _two_domain_toy()
    # satellite 0: all four intra relays visible (cross-orbit slots of a 1-orbit domain point at itself)
    assert net.intra[0, 2] == -1
    open_link(plan, net, 1, 0, 1, 100e6)
    open_link(plan, net, 1, 0, 3, 100e6)
    plan.sgl_vis[0, 0, 1] = True
    plan.sgl_rate[0, 0, 1] = 60e6
    bms = bms_masks(net, plan, 1)
    assert feasible_bms(bms[0]) == [0, 1, 2]
    assert feasible_bms(bms[2]) == []
    tms = tms_masks(net, plan, 1, bms)
    assert feasible_tms(tms[0], True) == [0]
    assert feasible_tms(tms[2], True) == []
    # only an IDL visible
    partner = int(net.inter[2, 0])
    open_link(plan, net, 1, 2, partner, 120e6, kind="idl")
    tms = tms_masks(net, plan, 1, bms_masks(net, plan, 1))
    assert feasible_tms(tms[2], True) == [1]
    flat = flat_masks(net, plan, 1, bms_masks(net, plan, 1))
    assert flat.shape == (net.size, 5 + net.n_aux)
    assert flat[2].tolist() == [False] * 5 + [True]
    with pytest.raises(ValueError):
        feasible_tms(tms[0], False)


def test_full_bms_set():
    cfg = toy_scenario(domains=((3, 4),), slots=1)
    net = build_network(cfg)
    plan = blank_plan(net, 1)
    for b in net.intra[0]:
        open_link(plan, net, 1, 0, int(b), 100e6)
    plan.sgl_vis[0, 0, 0] = True
    assert feasible_bms(bms_masks(net, plan, 1)[0]) == [0, 1, 2, 3, 4]


def test_observation_matches_single_satellite_builders():
    cfg, net, plan = _two_domain_toy()
    open_link(plan, net, 1, 0, 1, 100e6)
    plan.sgl_vis[0, 0, :] = True
    plan.sgl_rate[0, 0, :] = (60e6, 30e6)
    env = make_env(cfg, plan)
    env.reset()
    seed_buffer(env, 0, [mission(0, 4.0, survival=6), mission(1, 2.0, survival=2)])
    seed_buffer(env, 1, [mission(2, 1.0, survival=2)])
    obs = env.observe()
    assert obs.raw[0].tolist() == pytest.approx([10.0, env.energy[0] / (net.e_min[0] + 500.0), 45e6, 4.0])
    relays = np.array([obs.raw[m] if m >= 0 else np.zeros(4) for m in net.intra[0]])
    expect = build_bms_jsi(obs.raw[0], relays, cfg.scales)
    present = [0] + [c + 1 for c, m in enumerate(net.intra[0]) if m >= 0]
    assert np.allclose(obs.bms_jsi[0][:, present], expect[:, present], atol=1e-15)
    # relay slots that point back at the satellite itself carry an all-zero state
    assert (obs.bms_jsi[0][:, [c + 1 for c, m in enumerate(net.intra[0]) if m < 0]] == 0).all()
    inter = np.array([obs.raw[m] for m in net.inter[0]])
    assert np.allclose(obs.tms_jsi[0], build_tms_jsi(obs.raw[0], obs.bms_jsi[0], inter, cfg.scales), atol=1e-15)
    assert (obs.bms_jsi >= 0).all() and (obs.bms_jsi <= 2).all()
