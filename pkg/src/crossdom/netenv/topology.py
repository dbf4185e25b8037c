"""Static network layout (cross-domain satellites, relay sets) and the per-slot contact plan."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from crossdom.ids import SatelliteId
from crossdom.linkbudget import LinkKind, RateModel, RfParams, band_draw, isl_rate, sgl_rate
from crossdom.orbitals import (
    EarthFrame,
    GroundStation,
    domain_positions,
    domain_sunlit_seconds,
    ELEVATION_TOL_DEG,
    elevation_deg,
    los_visible,
)
from crossdom.scenario import ScenarioConfig

N_INTRA = 4
NO_SAT = -1


class ConfigurationError(ValueError):
    pass


def select_cross_domain_satellites(domain_sats: Mapping[int, Sequence[SatelliteId]]) -> dict[int, list[SatelliteId]]:
    """Pick equally spaced CSs per domain; every domain gets as many as the smallest domain has satellites."""
    if len(domain_sats) < 2:
        raise ConfigurationError("cross-domain satellites need at least 2 domains")
    count = min(len(s) for s in domain_sats.values())
    out = {}
    for k, sats in domain_sats.items():
        n = len(sats)
        out[k] = [sats[(m * n) // count] for m in range(count)]
    return out


def choose_aux_domains(domains: Sequence[int], mean_distance: Mapping[tuple[int, int], float]) -> dict[int, tuple[int, ...]]:
    """All other domains when K <= 3, else the two nearest by mean inter-constellation distance."""
    out = {}
    for k in domains:
        others = [d for d in domains if d != k]
        if len(domains) > 3:
            others = sorted(others, key=lambda d: (mean_distance[(min(k, d), max(k, d))], d))[:2]
        out[k] = tuple(sorted(others))
    return out


def assign_inter_domain_relays(
    css: Mapping[int, Sequence[SatelliteId]],
    positions: Mapping[SatelliteId, np.ndarray],
    aux: Mapping[int, Sequence[int]],
) -> dict[tuple[SatelliteId, int], SatelliteId]:
    """Greedy proximity matching between the CS sets of every linked domain pair.

    The closest still-unmatched pair is fixed first, so each CS gets exactly one
    partner per auxiliary domain and no partner is used twice. Links are
    bidirectional: the pair (a, b) serves both a -> domain(b) and b -> domain(a).
    """
    counts = {len(v) for v in css.values()}
    if len(counts) != 1:
        raise ConfigurationError(f"CS counts differ across domains: {sorted(counts)}")
    relays: dict[tuple[SatelliteId, int], SatelliteId] = {}
    pairs = sorted({(min(k, d), max(k, d)) for k in aux for d in aux[k]})
    for ka, kb in pairs:
        a_set, b_set = list(css[ka]), list(css[kb])
        pa = np.array([positions[s] for s in a_set])
        pb = np.array([positions[s] for s in b_set])
        dist = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=-1)
        order = sorted((dist[i, j], i, j) for i in range(len(a_set)) for j in range(len(b_set)))
        used_a, used_b = set(), set()
        for _, i, j in order:
            if i in used_a or j in used_b:
                continue
            used_a.add(i)
            used_b.add(j)
            if kb in aux[ka]:
                relays[(a_set[i], kb)] = b_set[j]
            if ka in aux[kb]:
                relays[(b_set[j], ka)] = a_set[i]
    return relays


def intra_relays(sat: SatelliteId, orbits: int, per_orbit: int) -> tuple[SatelliteId, ...]:
    """Four-neighbour grid: previous/next in the orbit, same slot in the previous/next orbit."""
    k, i, j = sat.domain, sat.orbit, sat.index
    wrap_j = lambda x: (x - 1) % per_orbit + 1  # noqa: E731
    wrap_i = lambda x: (x - 1) % orbits + 1  # noqa: E731
    return (
        SatelliteId(k, i, wrap_j(j - 1)),
        SatelliteId(k, i, wrap_j(j + 1)),
        SatelliteId(k, wrap_i(i - 1), j),
        SatelliteId(k, wrap_i(i + 1), j),
    )


@dataclass
class Network:
    """Index-based layout of every satellite. Satellites are ordered (domain, orbit, index)."""

    sats: list[SatelliteId]
    domain_ids: list[int]
    is_cs: np.ndarray
    intra: np.ndarray  # (N, 4) relay satellite index, NO_SAT when the slot points back at itself
    inter: np.ndarray  # (N, A) inter-domain relay index, NO_SAT for NCSs / unused columns
    inter_domain: np.ndarray  # (N, A) auxiliary domain id of each inter column, NO_SAT if unused
    aux_domains: dict[int, tuple[int, ...]]
    storage_cap: np.ndarray
    e_max: np.ndarray
    e_min: np.ndarray
    index: dict[SatelliteId, int] = field(default_factory=dict)

    def __post_init__(self):
        self.index = {s: n for n, s in enumerate(self.sats)}
        self.domain_of = np.array([s.domain for s in self.sats])

    @property
    def size(self) -> int:
        return len(self.sats)

    @property
    def n_aux(self) -> int:
        return self.inter.shape[1]

    def domain_members(self, k: int) -> list[int]:
        return [n for n, s in enumerate(self.sats) if s.domain == k]


def build_network(scenario: ScenarioConfig, epoch_positions: np.ndarray | None = None) -> Network:
    domain_sats: dict[int, list[SatelliteId]] = {}
    sats: list[SatelliteId] = []
    for k, d in enumerate(scenario.domains, start=1):
        members = [SatelliteId(k, i, j) for i in range(1, d.orbits + 1) for j in range(1, d.sats_per_orbit + 1)]
        domain_sats[k] = members
        sats.extend(members)
    index = {s: n for n, s in enumerate(sats)}
    n_sat = len(sats)
    if epoch_positions is None:
        epoch_positions = np.concatenate(
            [domain_positions(d.sofm(), [0.0])[0] for d in scenario.domains], axis=0
        )
    pos = {s: epoch_positions[index[s]] for s in sats}

    intra = np.full((n_sat, N_INTRA), NO_SAT, dtype=np.int64)
    for n, s in enumerate(sats):
        d = scenario.domains[s.domain - 1]
        for r, m in enumerate(intra_relays(s, d.orbits, d.sats_per_orbit)):
            if m != s:
                intra[n, r] = index[m]

    is_cs = np.zeros(n_sat, dtype=bool)
    domain_ids = sorted(domain_sats)
    aux: dict[int, tuple[int, ...]] = {k: () for k in domain_ids}
    relays: dict[tuple[SatelliteId, int], SatelliteId] = {}
    if len(domain_ids) >= 2:
        css = select_cross_domain_satellites(domain_sats)
        for members in css.values():
            for s in members:
                is_cs[index[s]] = True
        mean_dist = {}
        for a in domain_ids:
            for b in domain_ids:
                if a < b:
                    pa = np.array([pos[s] for s in domain_sats[a]])
                    pb = np.array([pos[s] for s in domain_sats[b]])
                    mean_dist[(a, b)] = float(np.linalg.norm(pa[:, None] - pb[None], axis=-1).mean())
        aux = choose_aux_domains(domain_ids, mean_dist)
        relays = assign_inter_domain_relays(css, pos, aux)

    n_aux = max((len(v) for v in aux.values()), default=0)
    inter = np.full((n_sat, n_aux), NO_SAT, dtype=np.int64)
    inter_domain = np.full((n_sat, n_aux), NO_SAT, dtype=np.int64)
    for n, s in enumerate(sats):
        for a, kd in enumerate(aux[s.domain]):
            inter_domain[n, a] = kd
            if is_cs[n]:
                inter[n, a] = index[relays[(s, kd)]]

    storage = np.where(is_cs, scenario.cs.storage_bits, scenario.ncs.storage_bits).astype(float)
    e_max = np.where(is_cs, scenario.cs.battery_j, scenario.ncs.battery_j).astype(float)
    e_min = e_max - scenario.power.eta * e_max
    return Network(sats, domain_ids, is_cs, intra, inter, inter_domain, aux, storage, e_max, e_min)


@dataclass
class ContactPlan:
    """Link availability and rates for slots 1..T; arrays are indexed [slot - 1]."""

    isl_vis: np.ndarray  # (T, N, 4)
    isl_rate: np.ndarray
    idl_vis: np.ndarray  # (T, N, A)
    idl_rate: np.ndarray
    sgl_vis: np.ndarray  # (T, N, G)
    sgl_rate: np.ndarray
    sunlit: np.ndarray  # (T, N) seconds

    @property
    def slots(self) -> int:
        return self.isl_vis.shape[0]

    def snapshot(self, network: Network, slot: int) -> "LinkSnapshot":
        t = slot - 1
        isl_idl = {}
        for n, s in enumerate(network.sats):
            for r in range(N_INTRA):
                m = network.intra[n, r]
                if m != NO_SAT:
                    isl_idl[(s, network.sats[m])] = (bool(self.isl_vis[t, n, r]), float(self.isl_rate[t, n, r]))
            for a in range(network.n_aux):
                m = network.inter[n, a]
                if m != NO_SAT:
                    isl_idl[(s, network.sats[m])] = (bool(self.idl_vis[t, n, a]), float(self.idl_rate[t, n, a]))
        sgl = {
            (s, g + 1): (bool(self.sgl_vis[t, n, g]), float(self.sgl_rate[t, n, g]))
            for n, s in enumerate(network.sats)
            for g in range(self.sgl_vis.shape[2])
        }
        return LinkSnapshot(slot, isl_idl, sgl)


@dataclass(frozen=True)
class LinkSnapshot:
    slot: int
    isl_idl: dict[tuple[SatelliteId, SatelliteId], tuple[bool, float]]
    sgl: dict[tuple[SatelliteId, int], tuple[bool, float]]


def _edge_key(a: SatelliteId, b: SatelliteId) -> tuple[int, ...]:
    return (a.domain, a.orbit, a.index, b.domain, b.orbit, b.index)


def constellation_positions(scenario: ScenarioConfig, elapsed_s: np.ndarray) -> np.ndarray:
    """(len(t), N, 3) positions of all satellites in network order."""
    return np.concatenate([domain_positions(d.sofm(), elapsed_s) for d in scenario.domains], axis=1)


def build_contact_plan(
    scenario: ScenarioConfig,
    network: Network,
    *,
    seed: int | None = None,
    stations: Sequence[GroundStation] | None = None,
) -> ContactPlan:
    seed = scenario.seed if seed is None else seed
    stations = scenario.stations if stations is None else stations
    T, N, A, G = scenario.slots, network.size, network.n_aux, len(stations)
    tau = scenario.tau
    frame: EarthFrame = scenario.frame
    t_s = np.arange(T) * tau
    pos = constellation_positions(scenario, t_s)
    model: RateModel = scenario.rate_model
    rf: RfParams = scenario.rf
    rate_cache: dict[tuple, float] = {}

    def link_rates(targets: np.ndarray):
        vis = np.zeros((T, N, targets.shape[1]), dtype=bool)
        rate = np.zeros_like(vis, dtype=float)
        for n in range(N):
            for c in range(targets.shape[1]):
                m = targets[n, c]
                if m == NO_SAT:
                    continue
                v = los_visible(pos[:, n], pos[:, m], scenario.isl_margin_km)
                vis[:, n, c] = v
                dist = np.linalg.norm(pos[:, n] - pos[:, m], axis=-1)
                a, b = network.sats[n], network.sats[m]
                key = _edge_key(min(a, b), max(a, b))
                for t in np.flatnonzero(v):
                    if model.mode == "table":
                        ck = (key, t)
                        if ck not in rate_cache:
                            rate_cache[ck] = band_draw(seed, key, int(t) + 1, model.table_isl_band)
                        rate[t, n, c] = rate_cache[ck]
                    else:
                        rate[t, n, c] = isl_rate(rf, float(dist[t]))
        return vis, rate

    isl_vis, isl_r = link_rates(network.intra)
    idl_vis, idl_r = link_rates(network.inter) if A else (
        np.zeros((T, N, 0), dtype=bool), np.zeros((T, N, 0)))

    sgl_vis = np.zeros((T, N, G), dtype=bool)
    sgl_r = np.zeros((T, N, G))
    for g, gs in enumerate(stations):
        st = frame.station_eci(gs, t_s)  # (T, 3)
        elev = elevation_deg(pos, st[:, None, :])
        vis = elev >= gs.min_elevation - ELEVATION_TOL_DEG
        sgl_vis[:, :, g] = vis
        if model.mode == "table":
            sgl_r[:, :, g] = np.where(vis, model.table_sgl_rate, 0.0)
        else:
            dist = np.linalg.norm(pos - st[:, None, :], axis=-1)
            for t, n in zip(*np.nonzero(vis)):
                sgl_r[t, n, g] = sgl_rate(rf, float(dist[t, n]))

    sunlit = np.concatenate(
        [domain_sunlit_seconds(d.sofm(), T, tau, frame, scenario.sunlit_substeps) for d in scenario.domains],
        axis=1,
    )
    return ContactPlan(isl_vis, isl_r, idl_vis, idl_r, sgl_vis, sgl_r, sunlit)


def snapshot_links(scenario: ScenarioConfig, slot: int, network: Network | None = None,
                   plan: ContactPlan | None = None) -> LinkSnapshot:
    if not 1 <= slot <= scenario.slots:
        raise ValueError(f"slot {slot} outside 1..{scenario.slots}")
    network = network or build_network(scenario)
    plan = plan or build_contact_plan(scenario, network)
    return plan.snapshot(network, slot)


def visibility_rows(scenario: ScenarioConfig, network: Network, plan: ContactPlan):
    """Rows (slot, from, to, kind, visible) for every ISL, IDL and SGL of every slot."""
    for t in range(plan.slots):
        for n, s in enumerate(network.sats):
            for r in range(N_INTRA):
                m = network.intra[n, r]
                if m != NO_SAT:
                    yield t + 1, str(s), str(network.sats[m]), LinkKind.ISL.value, int(plan.isl_vis[t, n, r])
            for a in range(network.n_aux):
                m = network.inter[n, a]
                if m != NO_SAT:
                    yield t + 1, str(s), str(network.sats[m]), LinkKind.IDL.value, int(plan.idl_vis[t, n, a])
            for g in range(plan.sgl_vis.shape[2]):
                yield t + 1, str(s), f"ES{g + 1}", LinkKind.SGL.value, int(plan.sgl_vis[t, n, g])
