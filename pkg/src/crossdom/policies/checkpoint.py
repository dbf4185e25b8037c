"""Binary policy container.

Layout (all integers little-endian):

    8 bytes   magic b"XDOMPOL\\0"
    u16       format version (1)
    u32       header length H
    H bytes   UTF-8 JSON header: {"scheduler", "banks": {name: {"agents", "entries",
              "actions", "shared", "blocks": [{"net", "param", "shape"}]}}}
    ...       float64 little-endian arrays, concatenated in header block order
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .schedulers import Scheduler

MAGIC = b"XDOMPOL\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_policy(sched: Scheduler, path: str | Path) -> Path:
    banks = sched.banks()
    header = {"scheduler": sched.name, "banks": {}}
    blobs = []
    for name, bank in banks.items():
        blocks = []
        for net_name, net in (("actor", bank.actor), ("critic", bank.critic)):
            for k in sorted(net.params):
                arr = np.ascontiguousarray(net.params[k], dtype="<f8")
                blocks.append({"net": net_name, "param": k, "shape": list(arr.shape)})
                blobs.append(arr.tobytes())
        header["banks"][name] = {"agents": bank.agents, "entries": bank.cfg.entries,
                                 "actions": bank.cfg.actions, "shared": bank.cfg.shared, "blocks": blocks}
    text = json.dumps(header, sort_keys=True).encode()
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("wb") as fh:
        fh.write(MAGIC + struct.pack("<HI", VERSION, len(text)) + text)
        for b in blobs:
            fh.write(b)
    return p


def read_policy(path: str | Path) -> tuple[dict, dict[tuple[str, str, str], np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC or len(raw) < 14:
        raise CheckpointError(f"{path}: not a policy container")
    version, hlen = struct.unpack_from("<HI", raw, 8)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    off = 14
    try:
        header = json.loads(raw[off:off + hlen])
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header ({e})") from None
    off += hlen
    arrays = {}
    for bank, meta in header["banks"].items():
        for blk in meta["blocks"]:
            n = int(np.prod(blk["shape"]))
            if off + 8 * n > len(raw):
                raise CheckpointError(f"{path}: truncated at {bank}.{blk['net']}.{blk['param']}")
            arr = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(blk["shape"]).copy()
            arrays[(bank, blk["net"], blk["param"])] = arr
            off += 8 * n
    if off != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - off} trailing bytes")
    return header, arrays


def load_policy(sched: Scheduler, path: str | Path) -> Scheduler:
    header, arrays = read_policy(path)
    if header["scheduler"] != sched.name:
        raise CheckpointError(f"{path}: holds a {header['scheduler']} policy, not {sched.name}")
    banks = sched.banks()
    if set(header["banks"]) != set(banks):
        raise CheckpointError(f"{path}: layers {sorted(header['banks'])} != {sorted(banks)}")
    for (bank, net_name, param), arr in arrays.items():
        net = getattr(banks[bank], net_name)
        if net.params[param].shape != arr.shape:
            raise CheckpointError(f"{path}: {bank}.{net_name}.{param} shape {arr.shape} "
                                  f"does not fit {net.params[param].shape}")
        net.params[param] = arr
    return sched
