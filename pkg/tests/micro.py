"""Two-satellite, one-station, three-slot scenario with an independent rule oracle."""
from conftest import link_pair, mission, open_link, seed_buffer

from crossdom.energetics import PowerParams
from crossdom.ids import SatelliteId
from crossdom.netenv import IDLE

A1 = SatelliteId(1, 1, 1)
A2 = SatelliteId(1, 1, 2)

TAU = 100.0
CAP = 4e9
E_MAX = 6e3
PW = PowerParams(e_max=E_MAX)
E_MIN, E_O = PW.e_min, PW.p_o * TAU
# per slot: link rate between the two satellites, ground rate per satellite, sunlit seconds per satellite
LINKS = {1: (10e6, (None, 20e6), (0.0, 50.0)),
         2: (20e6, (20e6, None), (0.0, 0.0)),
         3: (None, (None, 30e6), (30.0, 0.0))}
# (uid, gbit, survival, priority, burst, holder)
SEED = [(0, 1.0, 3, 1.0, False, 0), (1, 1.0, 1, 5.0, True, 0), (2, 2.0, 3, 1.0, False, 0),
        (3, 1.0, 2, 1.0, False, 1), (4, 2.0, 3, 1.0, False, 1)]


def micro_setup(kind):
    cfg, net, plan = link_pair(kind, slots=3, storage_gbit=CAP / 1e9, battery_kj=E_MAX / 1e3)
    for t, (link, ground, sun) in LINKS.items():
        if link:
            open_link(plan, net, t, 0, 1, link, kind=kind)
        for n, g in enumerate(ground):
            if g:
                plan.sgl_vis[t - 1, n, 0], plan.sgl_rate[t - 1, n, 0] = True, g
        plan.sunlit[t - 1] = sun
    relay_actions = [1, 2] if kind == "isl" else [5]
    return cfg, net, plan, relay_actions


def fresh_missions():
    origins = (A1, A2)
    return [(h, mission(u, g, s, origins[h], p, b)) for u, g, s, p, b, h in SEED]


def seed_micro(env):
    for h, m in fresh_missions():
        seed_buffer(env, h, [m])


def oracle(actions, relay_actions):
    """Straight re-statement of the slot rules on plain tuples.

    actions[t][n] is a flat action; returns (delivered uids in order, final buffers).
    """
    bufs = {0: [], 1: []}
    for u, g, s, p, b, h in SEED:
        bufs[h].append([u, g * 1e9, s, p])
    energy = [E_MAX, E_MAX]
    delivered = []
    for t in (1, 2, 3):
        link, ground, sun = LINKS[t]
        start_used = [sum(m[1] for m in bufs[n]) for n in (0, 1)]
        plans = []
        for n in (0, 1):
            a = actions[t - 1][n]
            if a == IDLE:
                plans.append(None)
                continue
            to_ground = a == 0
            rate, power = (ground[n], PW.p_set) if to_ground else (link, PW.p_sst)
            assert rate, "oracle asked to use a closed link"
            take, bits = [], 0.0
            for m in sorted(bufs[n], key=lambda m: (-m[3], m[2], m[0])):
                if bits + m[1] > rate * TAU * (1 + 1e-12):
                    break
                if energy[n] - (bits + m[1]) / rate * power < E_MIN + E_O:
                    break
                take.append(m)
                bits += m[1]
            plans.append((to_ground, rate, take, bits / rate * power))
        e_tx = [p[3] if p else 0.0 for p in plans]
        e_rx = [0.0, 0.0]
        admitted = [0.0, 0.0]
        closed = [False, False]
        incoming = {0: [], 1: []}
        for n in (0, 1):
            if not plans[n] or not plans[n][2]:
                continue
            to_ground, rate, take, _ = plans[n]
            for m in take:
                bufs[n].remove(m)
            if to_ground:
                delivered += [m[0] for m in take]
                continue
            r = 1 - n
            for m in take:
                rx = e_rx[r] + m[1] / rate * PW.p_sr
                fits = start_used[r] + admitted[r] + m[1] <= CAP
                if closed[r] or not fits or energy[r] - (E_O + e_tx[r] + rx) < E_MIN:
                    closed[r] = True
                    bufs[n].append(m)
                    continue
                e_rx[r] = rx
                admitted[r] += m[1]
                incoming[r].append(m)
        for r in (0, 1):
            bufs[r] += incoming[r]
            for m in bufs[r]:
                m[2] -= 1
            bufs[r] = [m for m in bufs[r] if m[2] > 0]
            energy[r] = min(E_MAX, energy[r] - E_O - e_tx[r] - e_rx[r] + PW.p_h * sun[r])
    return delivered, {n: sorted(m[0] for m in bufs[n]) for n in (0, 1)}


def slot_options(t, n, relay_actions):
    link, ground, _ = LINKS[t]
    return [IDLE] + ([0] if ground[n] else []) + (relay_actions if link else [])


def env_run(env, actions):
    env.reset()
    seed_micro(env)
    for acts in actions:
        env.step(list(acts))
    got = [u for _, u, _ in env.ledger.delivery_log]
    return got, {n: sorted(m.uid for m in env.buffers[n]) for n in (0, 1)}
