"""Scenario files: YAML in, validated ScenarioConfig out, plus canonical hashing.

Units in files are the human ones (Gbit, kJ, Mbps, GHz); they are converted
to bits, J, bps and Hz here and nowhere else.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
import enum
import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from crossdom.energetics import PowerParams
from crossdom.linkbudget import RateModel, RfParams, db_to_linear
from crossdom.missions import AttributeProfile, DomainMissionSpec
from crossdom.orbitals import DEFAULT_EPOCH, GroundStation, OrbitRow
from crossdom.scenario import DomainConfig, NodeClass, ScenarioConfig, StateScales, TrainConfig

BUILTIN = ("desk_2dom", "table1_3dom", "table1_6dom")


class ScenarioError(ValueError):
    """Malformed or invalid scenario file; the message names the offending field."""


class _Section:
    """Dict reader that tracks its location and rejects unknown keys."""

    def __init__(self, data: Any, where: str):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ScenarioError(f"{where}: expected a mapping, got {type(data).__name__}")
        self.data, self.where, self.used = data, where, set()

    def path(self, key) -> str:
        return f"{self.where}.{key}" if self.where else str(key)

    def get(self, key, default=None, kind=None, required=False):
        self.used.add(key)
        if key not in self.data:
            if required:
                raise ScenarioError(f"{self.path(key)}: required field missing")
            return default
        v = self.data[key]
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ScenarioError(f"{self.path(key)}: expected a number, got {v!r}")
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioError(f"{self.path(key)}: expected an integer, got {v!r}")
            return v
        if kind is str and not isinstance(v, str):
            raise ScenarioError(f"{self.path(key)}: expected a string, got {v!r}")
        if kind is bool and not isinstance(v, bool):
            raise ScenarioError(f"{self.path(key)}: expected true/false, got {v!r}")
        return v

    def sub(self, key) -> "_Section":
        return _Section(self.get(key, {}), self.path(key))

    def items(self, key) -> list["_Section"]:
        v = self.get(key, [])
        if not isinstance(v, list):
            raise ScenarioError(f"{self.path(key)}: expected a list")
        return [_Section(x, f"{self.path(key)}[{i}]") for i, x in enumerate(v)]

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ScenarioError(f"{self.where or 'scenario'}: unknown field(s) {', '.join(map(str, extra))}")


def _build(where: str, fn, *args, **kwargs):
    """Run a constructor, re-raising its validation error with the field location."""
    try:
        return fn(*args, **kwargs)
    except (ValueError, TypeError) as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError(f"{where}: {e}") from None


def _positive(sec: _Section, key, default=None, kind=float, required=False):
    v = sec.get(key, default, kind, required)
    if v is not None and not v > 0:
        raise ScenarioError(f"{sec.path(key)}: must be positive, got {v}")
    return v


def _epoch(v, where) -> dt.datetime:
    if v is None:
        return DEFAULT_EPOCH
    if isinstance(v, dt.datetime):
        when = v
    else:
        try:
            when = dt.datetime.fromisoformat(str(v).replace("Z", "+00:00"))
        except ValueError:
            raise ScenarioError(f"{where}: not an ISO-8601 timestamp: {v!r}") from None
    return when if when.tzinfo else when.replace(tzinfo=dt.timezone.utc)


def _station(sec: _Section, idx: int) -> GroundStation:
    gs = _build(sec.where, GroundStation,
                id=sec.get("id", idx + 1, int),
                latitude=sec.get("latitude", kind=float, required=True),
                longitude=sec.get("longitude", kind=float, required=True),
                min_elevation=sec.get("min_elevation", 10.0, float),
                name=sec.get("name", "", str))
    sec.finish()
    return gs


def _missions(sec: _Section) -> DomainMissionSpec:
    spec = _build(sec.where, DomainMissionSpec,
                  common_total=sec.get("common_total", 0, int),
                  common_volume_bits=sec.get("common_volume_gbit", 1.0, float) * 1e9,
                  common_survival=sec.get("common_survival", 18, int),
                  burst_rate=sec.get("burst_rate", 0.0, float),
                  burst_survival=sec.get("burst_survival", 3, int),
                  burst_volume_bits=sec.get("burst_volume_gbit", 1.0, float) * 1e9)
    sec.finish()
    return spec


def _attributes(sec: _Section) -> AttributeProfile:
    ranking = sec.get("ranking", required=True)
    values = sec.get("values", required=True)
    if not isinstance(ranking, list) or not isinstance(values, dict):
        raise ScenarioError(f"{sec.where}: ranking must be a list and values a mapping")
    prof = _build(sec.where, AttributeProfile, tuple(ranking), {k: float(v) for k, v in values.items()})
    sec.finish()
    return prof


def _rows(items: list[_Section]) -> tuple[OrbitRow, ...]:
    rows = []
    for sec in items:
        rows.append(_build(sec.where, OrbitRow,
                           altitude_km=sec.get("altitude_km", kind=float, required=True),
                           eccentricity=sec.get("eccentricity", 0.0, float),
                           inclination_deg=sec.get("inclination_deg", kind=float, required=True),
                           arg_perigee_deg=sec.get("arg_perigee_deg", 0.0, float),
                           raan_deg=sec.get("raan_deg", kind=float, required=True),
                           mean_anomalies_deg=tuple(float(x) for x in sec.get("mean_anomalies_deg", required=True))))
        sec.finish()
    return tuple(rows)


def _domain(sec: _Section) -> DomainConfig:
    rows = _rows(sec.items("rows")) if "rows" in sec.data else None
    kw = dict(
        name=sec.get("name", required=True, kind=str),
        orbits=_positive(sec, "orbits", kind=int, required=rows is None) or (len(rows) if rows else 0),
        sats_per_orbit=_positive(sec, "sats_per_orbit", kind=int, required=rows is None)
        or (len(rows[0].mean_anomalies_deg) if rows else 0),
        altitude_km=_positive(sec, "altitude_km", required=rows is None) or (rows[0].altitude_km if rows else 0.0),
        inclination_deg=sec.get("inclination_deg", 0.0, float),
        mission_type=sec.get("mission_type", "CM", str),
        eccentricity=sec.get("eccentricity", 0.0, float),
        arg_perigee_deg=sec.get("arg_perigee_deg", 0.0, float),
        raan_spread_deg=sec.get("raan_spread_deg", 360.0, float),
        raan_offset_deg=sec.get("raan_offset_deg", 0.0, float),
        phasing=sec.get("phasing", 0, int),
        anomaly_offset_deg=sec.get("anomaly_offset_deg", 0.0, float),
        rows=rows,
    )
    kw["missions"] = _missions(sec.sub("missions"))
    kw["attributes"] = _attributes(sec.sub("attributes"))
    sec.finish()
    dom = _build(sec.where, DomainConfig, **kw)
    _build(sec.where, dom.sofm)  # orbit validation surfaces here
    return dom


def _rf(sec: _Section) -> RfParams:
    kw = {}
    for key, name, scale in (("p_sst_w", "p_sst", 1.0), ("p_set_w", "p_set", 1.0), ("freq_ghz", "freq_hz", 1e9),
                             ("t_noise_k", "t_noise", 1.0), ("bandwidth_mhz", "bandwidth_hz", 1e6)):
        v = sec.get(key, kind=float)
        if v is not None:
            kw[name] = v * scale
    for key, name in (("ebn0_req_db", "ebn0_req"), ("margin_db", "margin"), ("prop_loss_db", "prop_loss")):
        v = sec.get(key, kind=float)
        if v is not None:
            kw[name] = db_to_linear(v if name != "prop_loss" else -v)
    cal = sec.sub("calibration")
    ref = dict(isl_rate_bps=cal.get("isl_rate_mbps", 160.0, float) * 1e6,
               isl_ref_km=cal.get("isl_ref_km", 2000.0, float),
               sgl_rate_bps=cal.get("sgl_rate_mbps", 60.0, float) * 1e6,
               sgl_ref_km=cal.get("sgl_ref_km", 1500.0, float))
    cal.finish()
    sec.finish()
    return _build(sec.where, lambda: RfParams(**kw).calibrated(**ref))


def _train(sec: _Section) -> TrainConfig:
    base = TrainConfig()
    kw = {}
    for f in dataclasses.fields(TrainConfig):
        kind = type(getattr(base, f.name))
        v = sec.get(f.name, kind=float if kind is float else kind)
        if v is not None:
            kw[f.name] = v
    sec.finish()
    return _build(sec.where, TrainConfig, **kw)


def parse_scenario(data: dict, source: str = "<memory>") -> ScenarioConfig:
    root = _Section(data, "")
    name = root.get("name", Path(source).stem, str)
    tau = _positive(root, "tau", 100.0)
    slots = _positive(root, "slots", 216, int)

    rm = root.sub("rate_model")
    band = rm.get("isl_band_mbps", [80.0, 160.0])
    if not isinstance(band, list) or len(band) != 2:
        raise ScenarioError(f"{rm.path('isl_band_mbps')}: expected [low, high]")
    rate_model = _build(rm.where, RateModel, mode=rm.get("mode", "table", str),
                        table_sgl_rate=rm.get("sgl_rate_mbps", 60.0, float) * 1e6,
                        table_isl_band=(float(band[0]) * 1e6, float(band[1]) * 1e6))
    rm.finish()

    pw = root.sub("power")
    power = _build(pw.where, PowerParams, **{k: pw.get(k, getattr(PowerParams(), k), float)
                                             for k in ("p_sst", "p_set", "p_sr", "p_o", "p_h", "eta")})
    pw.finish()

    nodes = root.sub("node_classes")
    classes = {}
    for cls, defaults in (("ncs", (60.0, 100.0)), ("cs", (120.0, 200.0))):
        s = nodes.sub(cls)
        classes[cls] = NodeClass(_positive(s, "storage_gbit", defaults[0]) * 1e9,
                                 _positive(s, "battery_kj", defaults[1]) * 1e3)
        s.finish()
    nodes.finish()

    sc = root.sub("scales")
    scales = StateScales(**{k: _positive(sc, k, getattr(StateScales(), k))
                            for k in ("storage", "energy", "ground_rate", "survival")})
    sc.finish()

    domains = tuple(_domain(s) for s in root.items("domains"))
    if not domains:
        raise ScenarioError("domains: at least one domain is required")
    stations = tuple(_station(s, i) for i, s in enumerate(root.items("stations")))
    reward_scale = root.get("reward_scale_gbit", kind=float)
    seed = root.get("seed", 0, int)
    if seed < 0:
        raise ScenarioError(f"seed: must be non-negative, got {seed}")

    cfg = ScenarioConfig(
        name=name, domains=domains, stations=stations, tau=tau, slots=slots,
        rf=_rf(root.sub("rf")), rate_model=rate_model, power=power,
        ncs=classes["ncs"], cs=classes["cs"], epoch=_epoch(root.get("epoch"), "epoch"),
        isl_margin_km=root.get("isl_margin_km", 0.0, float),
        sunlit_substeps=_positive(root, "sunlit_substeps", 20, int),
        seed=seed, scales=scales, train=_train(root.sub("train")),
        reward_scale_bits=None if reward_scale is None else reward_scale * 1e9,
        description=root.get("description", "", str),
    )
    root.finish()
    return cfg


def resolve_scenario_path(ref: str | Path) -> Path:
    """Accept a path or the name of a shipped scenario."""
    p = Path(ref)
    if p.exists():
        return p
    if str(ref) in BUILTIN:
        return Path(str(resources.files("crossdom") / "scenarios" / f"{ref}.yaml"))
    raise FileNotFoundError(f"scenario {ref!r} is neither a file nor one of {', '.join(BUILTIN)}")


def load_scenario(path: str | Path) -> ScenarioConfig:
    p = resolve_scenario_path(path)
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        loc = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown location"
        raise ScenarioError(f"{p}: parse error at {loc}: {getattr(e, 'problem', e)}") from None
    return parse_scenario(data, str(p))


def to_plain(obj) -> Any:
    """JSON-ready view of a config tree, stable across runs."""
    if dataclasses.is_dataclass(obj):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if f.compare}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dt.datetime):
        return obj.isoformat()
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, float):
        return repr(obj)
    return obj


def config_hash(cfg: ScenarioConfig) -> str:
    text = json.dumps(to_plain(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()
