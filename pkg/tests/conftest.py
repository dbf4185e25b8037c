"""Shared builders for small hand-controlled scenarios."""
from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from crossdom.harness import load_scenario
from crossdom.ids import SatelliteId
from crossdom.missions import AttributeProfile, DomainMissionSpec, Mission, MissionKind
from crossdom.netenv import CrossDomainEnv, build_network
from crossdom.netenv.topology import ContactPlan
from crossdom.orbitals import GroundStation
from crossdom.scenario import DomainConfig, NodeClass, ScenarioConfig

FLAT = AttributeProfile(("volume", "arrival", "delay"), {"volume": 1.0, "arrival": 1.0, "delay": 1.0})

# acceptance results, printed once at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def desk() -> ScenarioConfig:
    return load_scenario("desk_2dom")


@pytest.fixture(scope="session")
def desk_env(desk) -> CrossDomainEnv:
    return CrossDomainEnv(desk)


def toy_scenario(domains=((1, 2),), slots=3, tau=100.0, storage_gbit=60.0, battery_kj=100.0,
                 stations=1, **kw) -> ScenarioConfig:
    """Domains given as (orbits, sats_per_orbit); no generated missions."""
    doms = tuple(
        DomainConfig(f"d{k}", i, j, 780.0, 60.0, missions=DomainMissionSpec(0), attributes=FLAT)
        for k, (i, j) in enumerate(domains, start=1)
    )
    st = tuple(GroundStation(g + 1, 0.0, 60.0 * g) for g in range(stations))
    return ScenarioConfig("toy", doms, st, tau=tau, slots=slots,
                          ncs=NodeClass(storage_gbit * 1e9, battery_kj * 1e3),
                          cs=NodeClass(storage_gbit * 1e9, battery_kj * 1e3), **kw)


def link_pair(kind="isl", slots=3, **kw):
    """Two satellites joined by one link: same orbit (isl) or two single-satellite domains (idl)."""
    doms = ((1, 2),) if kind == "isl" else ((1, 1), (1, 1))
    cfg = toy_scenario(domains=doms, slots=slots, **kw)
    net = build_network(cfg)
    return cfg, net, blank_plan(net, slots, len(cfg.stations))


def blank_plan(network, slots, stations=1, sunlit=0.0) -> ContactPlan:
    N, A = network.size, network.n_aux
    return ContactPlan(
        isl_vis=np.zeros((slots, N, 4), dtype=bool), isl_rate=np.zeros((slots, N, 4)),
        idl_vis=np.zeros((slots, N, A), dtype=bool), idl_rate=np.zeros((slots, N, A)),
        sgl_vis=np.zeros((slots, N, stations), dtype=bool), sgl_rate=np.zeros((slots, N, stations)),
        sunlit=np.full((slots, N), sunlit),
    )


def open_link(plan: ContactPlan, network, t: int, a: int, b: int, rate: float, kind="isl"):
    """Make the relay column of a pointing at b visible in slot t (both directions)."""
    cols = network.intra if kind == "isl" else network.inter
    vis = plan.isl_vis if kind == "isl" else plan.idl_vis
    rt = plan.isl_rate if kind == "isl" else plan.idl_rate
    for x, y in ((a, b), (b, a)):
        for c in np.flatnonzero(cols[x] == y):
            vis[t - 1, x, c] = True
            rt[t - 1, x, c] = rate


def make_env(scenario, plan=None, **kw) -> CrossDomainEnv:
    net = build_network(scenario)
    plan = plan if plan is not None else blank_plan(net, scenario.slots, len(scenario.stations))
    return CrossDomainEnv(scenario, network=net, plan=plan, **kw)


def seed_buffer(env: CrossDomainEnv, sat: int, missions):
    """Place hand-made missions in a buffer and count them as generated."""
    env.buffers[sat].extend(missions)
    env.ledger.generated += len(missions)
    for m in missions:
        env.ledger.generated_by_kind[m.kind.value] += 1
        env.ledger.generated_by_domain[m.domain - 1] += 1


def mission(uid, gbit=1.0, survival=5, origin=SatelliteId(1, 1, 1), priority=1.0, burst=False, birth=1):
    return Mission(uid, priority, gbit * 1e9, birth, survival, origin,
                   MissionKind.BURST if burst else MissionKind.COMMON)


def replace_missions(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    doms = tuple(dataclasses.replace(d, missions=dataclasses.replace(d.missions, **kw)) for d in cfg.domains)
    return dataclasses.replace(cfg, domains=doms)
