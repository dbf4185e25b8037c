"""Command line entry point: ``crossdom <subcommand> --scenario ...``.

Log verbosity comes from the CROSSDOM_LOG_LEVEL environment variable
(DEBUG, INFO, WARNING; default WARNING).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from crossdom.missions import MissionGenerator, burst_priority, mission_priority
from crossdom.netenv import build_contact_plan, build_network
from crossdom.netenv.topology import visibility_rows
from crossdom.policies import SCHEDULERS

from .config import ScenarioError, load_scenario
from .runner import EXPORTS, run_experiment, sweep

LOG_ENV = "CROSSDOM_LOG_LEVEL"


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer, got {v}")
    return v


def _common(p: argparse.ArgumentParser, out_required=False):
    p.add_argument("--scenario", required=True, help="scenario file or shipped name (desk_2dom, table1_3dom, ...)")
    p.add_argument("--seed", type=_u64, help="run seed (default: the scenario's seed)")
    p.add_argument("--out", required=out_required, help="output directory")


def _run_args(p: argparse.ArgumentParser):
    _common(p)
    p.add_argument("--episodes", type=int, help="episode count (default from the scenario)")
    p.add_argument("--save-policy", help="write the learned policy container here")
    p.add_argument("--load-policy", help="start from this policy container")
    p.add_argument("--export", action="append", choices=EXPORTS, default=None,
                   help="extra per-slot exports (repeatable); metrics are always written")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crossdom", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    _run_args(sub.add_parser("train", help="train the hierarchical scheduler"))
    _run_args(sub.add_parser("eval", help="greedy evaluation of a (loaded) hierarchical policy"))
    b = sub.add_parser("baseline", help="run a baseline scheduler")
    _run_args(b)
    b.add_argument("--kind", required=True, choices=[k for k in SCHEDULERS if k != "hicms"])
    s = sub.add_parser("sweep", help="one run per value of a scenario parameter")
    _run_args(s)
    s.add_argument("--axis", required=True, help="sweep axis, e.g. sgl_rate_mbps or power.p_h")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--mode", default="baseline:ncms", help="train, eval or baseline:<kind>")
    t = sub.add_parser("inspect-topology", help="dump per-slot link visibility as CSV")
    _common(t)
    t.add_argument("--slots", type=int, help="only the first N slots")
    m = sub.add_parser("dump-missions", help="dump the generated mission stream as CSV")
    _common(m)
    m.add_argument("--episode", type=int, default=0)
    return ap


def _open_out(out: str | None, default_name: str):
    if out is None:
        return sys.stdout, False
    p = Path(out)
    if p.suffix != ".csv":
        p.mkdir(parents=True, exist_ok=True)
        p = p / default_name
    else:
        p.parent.mkdir(parents=True, exist_ok=True)
    return p.open("w", newline=""), True


def _inspect(cfg, args):
    if args.slots is not None:
        cfg = dataclasses.replace(cfg, slots=min(cfg.slots, args.slots))
    net = build_network(cfg)
    plan = build_contact_plan(cfg, net)
    fh, close = _open_out(args.out, "topology.csv")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "from", "to", "kind", "visible"])
        w.writerows(visibility_rows(cfg, net, plan))
    finally:
        if close:
            fh.close()


def _dump_missions(cfg, args):
    net = build_network(cfg)
    commons = [mission_priority(d.attributes) for d in cfg.domains]
    fh, close = _open_out(args.out, "missions.csv")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["uid", "slot", "domain", "origin", "kind", "priority", "volume_bits", "survival_slots"])
        gens = [MissionGenerator(k, [net.sats[n] for n in net.domain_members(k)], d.missions, cfg.slots,
                                 commons[k - 1], burst_priority(commons), cfg.seed, args.episode)
                for k, d in enumerate(cfg.domains, start=1)]
        uid = 0
        for t in range(1, cfg.slots + 1):
            for g in gens:
                for m in g.generate(t, uid):
                    w.writerow([m.uid, t, m.domain, str(m.origin), m.kind.value, repr(m.priority),
                                repr(m.volume_bits), m.survival_slots])
                    uid += 1
    finally:
        if close:
            fh.close()


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_scenario(args.scenario)
    except (ScenarioError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)

    if args.command == "inspect-topology":
        _inspect(cfg, args)
        return 0
    if args.command == "dump-missions":
        _dump_missions(cfg, args)
        return 0

    exports = ["metrics"] + [e for e in (args.export or []) if e != "metrics"]
    if args.command == "sweep":
        values = [float(v) if any(c in v for c in ".e") else int(v) for v in args.values.split(",")]
        try:
            reports = sweep(cfg, args.axis, values, args.mode, args.out, episodes=args.episodes,
                            exports=exports)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        print(json.dumps({str(r.extra["sweep_value"]): r.final_mcr for r in reports}, indent=2))
        return 0

    mode = {"train": "train", "eval": "eval"}.get(args.command) or f"baseline:{args.kind}"
    report = run_experiment(cfg, mode, args.out, episodes=args.episodes, load_policy_path=args.load_policy,
                            save_policy_path=args.save_policy, exports=exports)
    summary = report.summary()
    summary.pop("columns")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
