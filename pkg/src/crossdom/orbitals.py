"""Satellite positions from orbit feature matrices, line-of-sight and eclipse tests.

Positions are Earth-centered inertial, in km. Link state is evaluated once at
the start of each slot (quasi-static topology); eclipse time is integrated
across the slot by sub-sampling.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from crossdom.ids import SatelliteId

EARTH_RADIUS_KM = 6371.0
MU_EARTH_KM3_S2 = 398600.4418
EARTH_ROTATION_RAD_S = 7.2921159e-5
OBLIQUITY_DEG = 23.4393
SUN_RATE_DEG_PER_DAY = 0.9856

DEFAULT_EPOCH = dt.datetime(2022, 10, 15, 4, 0, 0, tzinfo=dt.timezone.utc)


class DegenerateGeometryError(ValueError):
    pass


class InvalidOrbitError(ValueError):
    pass


@dataclass(frozen=True)
class OrbitRow:
    """One orbital plane: shape/orientation plus per-satellite mean anomaly at slot 1."""

    altitude_km: float
    eccentricity: float
    inclination_deg: float
    arg_perigee_deg: float
    raan_deg: float
    mean_anomalies_deg: tuple[float, ...]

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise InvalidOrbitError(f"altitude must be positive, got {self.altitude_km}")
        if not 0.0 <= self.eccentricity < 1.0:
            raise InvalidOrbitError(f"eccentricity must be in [0, 1), got {self.eccentricity}")
        object.__setattr__(self, "inclination_deg", float(self.inclination_deg) % 360.0)
        object.__setattr__(self, "arg_perigee_deg", float(self.arg_perigee_deg) % 360.0)
        object.__setattr__(self, "raan_deg", float(self.raan_deg) % 360.0)
        object.__setattr__(
            self, "mean_anomalies_deg", tuple(float(m) % 360.0 for m in self.mean_anomalies_deg)
        )

    @property
    def semi_major_axis_km(self) -> float:
        return EARTH_RADIUS_KM + self.altitude_km


@dataclass(frozen=True)
class Sofm:
    """Orbit feature matrix of one domain: I_k rows, each carrying J_k mean anomalies."""

    rows: tuple[OrbitRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        if not self.rows:
            raise InvalidOrbitError("a domain needs at least one orbit")
        n = len(self.rows[0].mean_anomalies_deg)
        if n == 0 or any(len(r.mean_anomalies_deg) != n for r in self.rows):
            raise InvalidOrbitError("every orbit must carry the same number of satellites")

    @property
    def orbit_count(self) -> int:
        return len(self.rows)

    @property
    def sats_per_orbit(self) -> int:
        return len(self.rows[0].mean_anomalies_deg)

    @classmethod
    def walker(
        cls,
        orbits: int,
        sats_per_orbit: int,
        altitude_km: float,
        inclination_deg: float,
        *,
        eccentricity: float = 0.0,
        arg_perigee_deg: float = 0.0,
        raan_spread_deg: float = 360.0,
        raan_offset_deg: float = 0.0,
        phasing: int = 0,
        anomaly_offset_deg: float = 0.0,
    ) -> "Sofm":
        """Walker-style layout: planes spread over ``raan_spread_deg``, satellites evenly phased."""
        total = orbits * sats_per_orbit
        rows = []
        for i in range(orbits):
            raan = raan_offset_deg + i * raan_spread_deg / orbits
            shift = i * phasing * 360.0 / total
            anomalies = tuple(
                anomaly_offset_deg + shift + j * 360.0 / sats_per_orbit for j in range(sats_per_orbit)
            )
            rows.append(
                OrbitRow(altitude_km, eccentricity, inclination_deg, arg_perigee_deg, raan, anomalies)
            )
        return cls(tuple(rows))


@dataclass(frozen=True)
class EciPosition:
    x: float
    y: float
    z: float
    slot: int

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def radius(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class GroundStation:
    id: int
    latitude: float
    longitude: float
    min_elevation: float = 10.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if abs(self.latitude) > 90.0:
            raise ValueError(f"station {self.id}: |latitude| must be <= 90, got {self.latitude}")


def orbital_period_s(semi_major_axis_km: float) -> float:
    return 2.0 * math.pi * math.sqrt(semi_major_axis_km**3 / MU_EARTH_KM3_S2)


def solve_kepler(mean_anomaly: np.ndarray, e: float, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    """Eccentric anomaly from mean anomaly (radians) by Newton iteration."""
    m = np.mod(np.asarray(mean_anomaly, dtype=float), 2.0 * np.pi)
    if e == 0.0:
        return m
    ecc = m.copy() if e < 0.8 else np.full_like(m, np.pi)
    for _ in range(max_iter):
        step = (ecc - e * np.sin(ecc) - m) / (1.0 - e * np.cos(ecc))
        ecc = ecc - step
        if np.max(np.abs(step)) < tol:
            break
    return ecc


def _plane_positions(row: OrbitRow, elapsed_s: np.ndarray) -> np.ndarray:
    """Positions of every satellite of ``row`` at each elapsed time. Shape (len(t), J, 3)."""
    a = row.semi_major_axis_km
    e = row.eccentricity
    n = math.sqrt(MU_EARTH_KM3_S2 / a**3)
    m0 = np.radians(np.asarray(row.mean_anomalies_deg))
    t = np.asarray(elapsed_s, dtype=float).reshape(-1, 1)
    mean = m0[None, :] + n * t
    if e == 0.0:
        nu = np.mod(mean, 2.0 * np.pi)
        r = np.full_like(nu, a)
    else:
        ecc = solve_kepler(mean, e)
        nu = 2.0 * np.arctan2(math.sqrt(1 + e) * np.sin(ecc / 2), math.sqrt(1 - e) * np.cos(ecc / 2))
        r = a * (1.0 - e * np.cos(ecc))
    u = nu + math.radians(row.arg_perigee_deg)
    raan = math.radians(row.raan_deg)
    inc = math.radians(row.inclination_deg)
    cu, su = np.cos(u), np.sin(u)
    co, so = math.cos(raan), math.sin(raan)
    ci, si = math.cos(inc), math.sin(inc)
    x = r * (co * cu - so * su * ci)
    y = r * (so * cu + co * su * ci)
    z = r * (su * si)
    return np.stack([x, y, z], axis=-1)


def slot_start_s(slot: int, tau: float) -> float:
    return (slot - 1) * tau


def propagate(sofm: Sofm, sat: SatelliteId, slot: int, tau: float) -> EciPosition:
    if not (1 <= sat.orbit <= sofm.orbit_count and 1 <= sat.index <= sofm.sats_per_orbit):
        raise IndexError(f"{sat} outside {sofm.orbit_count}x{sofm.sats_per_orbit} orbit matrix")
    if slot < 1:
        raise IndexError(f"slot must be >= 1, got {slot}")
    row = sofm.rows[sat.orbit - 1]
    p = _plane_positions(row, np.array([slot_start_s(slot, tau)]))[0, sat.index - 1]
    return EciPosition(float(p[0]), float(p[1]), float(p[2]), slot)


def domain_positions(sofm: Sofm, elapsed_s: Sequence[float] | np.ndarray) -> np.ndarray:
    """All satellites of a domain, orbit-major, at each elapsed time. Shape (len(t), I*J, 3)."""
    t = np.asarray(elapsed_s, dtype=float)
    planes = [_plane_positions(row, t) for row in sofm.rows]
    return np.concatenate(planes, axis=1)


def _as_vec(p) -> np.ndarray:
    return p.vector if isinstance(p, EciPosition) else np.asarray(p, dtype=float)


def geocentric_angle(a, b) -> float:
    """Angle between two position vectors, degrees in [0, 180]."""
    va, vb = _as_vec(a), _as_vec(b)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise DegenerateGeometryError("zero-length position vector")
    # atan2 form stays accurate near 0 and 180 degrees
    return math.degrees(math.atan2(np.linalg.norm(np.cross(va, vb)), float(np.dot(va, vb))))


def max_geocentric_angle(r_a: float, r_b: float, margin_km: float = 0.0) -> float:
    """Largest separation angle for which the chord between the two radii clears the Earth."""
    limit = EARTH_RADIUS_KM + margin_km
    if r_a < limit or r_b < limit:
        raise InvalidOrbitError(f"radius below grazing limit {limit} km: {r_a}, {r_b}")
    return math.degrees(math.acos(limit / r_a) + math.acos(limit / r_b))


def los_visible(pa: np.ndarray, pb: np.ndarray, margin_km: float = 0.0) -> np.ndarray:
    """Vectorized geocentric-angle test over trailing xyz axes."""
    na = np.linalg.norm(pa, axis=-1)
    nb = np.linalg.norm(pb, axis=-1)
    cross = np.linalg.norm(np.cross(pa, pb), axis=-1)
    theta = np.arctan2(cross, np.sum(pa * pb, axis=-1))
    limit = EARTH_RADIUS_KM + margin_km
    theta_max = np.arccos(np.minimum(limit / na, 1.0)) + np.arccos(np.minimum(limit / nb, 1.0))
    return theta <= theta_max


def isl_visible(
    sofms: Mapping[int, Sofm],
    a: SatelliteId,
    b: SatelliteId,
    slot: int,
    tau: float,
    margin_km: float = 0.0,
) -> bool:
    if a == b:
        raise ValueError("link endpoints must differ")
    pa = propagate(sofms[a.domain], a, slot, tau)
    pb = propagate(sofms[b.domain], b, slot, tau)
    return bool(los_visible(pa.vector, pb.vector, margin_km))


def gmst_deg(when: dt.datetime) -> float:
    """Greenwich mean sidereal angle (low-precision formula), degrees."""
    jd = when.timestamp() / 86400.0 + 2440587.5
    return (280.46061837 + 360.98564736629 * (jd - 2451545.0)) % 360.0


def sun_longitude_deg(when: dt.datetime) -> float:
    """Apparent ecliptic longitude of the Sun (low-precision almanac formula), degrees."""
    d = when.timestamp() / 86400.0 + 2440587.5 - 2451545.0
    mean_lon = 280.460 + 0.9856474 * d
    g = math.radians(357.528 + 0.9856003 * d)
    return (mean_lon + 1.915 * math.sin(g) + 0.020 * math.sin(2 * g)) % 360.0


@dataclass(frozen=True)
class EarthFrame:
    """Epoch-dependent rotation of the Earth and direction of the Sun."""

    gmst0_deg: float = 0.0
    sun_lon0_deg: float = 0.0

    @classmethod
    def at(cls, epoch: dt.datetime) -> "EarthFrame":
        return cls(gmst_deg(epoch), sun_longitude_deg(epoch))

    def earth_angle(self, elapsed_s) -> np.ndarray:
        return np.radians(self.gmst0_deg) + EARTH_ROTATION_RAD_S * np.asarray(elapsed_s, dtype=float)

    def sun_direction(self, elapsed_s) -> np.ndarray:
        lam = np.radians(self.sun_lon0_deg + SUN_RATE_DEG_PER_DAY * np.asarray(elapsed_s, dtype=float) / 86400.0)
        eps = math.radians(OBLIQUITY_DEG)
        return np.stack([np.cos(lam), np.sin(lam) * math.cos(eps), np.sin(lam) * math.sin(eps)], axis=-1)

    def station_eci(self, gs: GroundStation, elapsed_s) -> np.ndarray:
        lat = math.radians(gs.latitude)
        lon = math.radians(gs.longitude) + self.earth_angle(elapsed_s)
        return EARTH_RADIUS_KM * np.stack(
            [math.cos(lat) * np.cos(lon), math.cos(lat) * np.sin(lon), np.full_like(lon, math.sin(lat))],
            axis=-1,
        )


def elevation_deg(sat_xyz: np.ndarray, station_xyz: np.ndarray) -> np.ndarray:
    """Elevation of the satellite above the local horizon of a spherical-Earth station."""
    rel = sat_xyz - station_xyz
    up = station_xyz / np.linalg.norm(station_xyz, axis=-1, keepdims=True)
    s = np.sum(rel * up, axis=-1) / np.linalg.norm(rel, axis=-1)
    return np.degrees(np.arcsin(np.clip(s, -1.0, 1.0)))


# closed threshold, tolerant to round-off of analytically constructed boundary cases
ELEVATION_TOL_DEG = 1e-9


def sgl_visible(pos: EciPosition, gs: GroundStation, tau: float, frame: EarthFrame = EarthFrame()) -> bool:
    station = frame.station_eci(gs, slot_start_s(pos.slot, tau))
    return bool(elevation_deg(pos.vector, station) >= gs.min_elevation - ELEVATION_TOL_DEG)


def in_shadow(pos: np.ndarray, sun_dir: np.ndarray) -> np.ndarray:
    """Cylindrical Earth shadow test over trailing xyz axes."""
    along = np.sum(pos * sun_dir, axis=-1)
    perp = np.linalg.norm(pos - along[..., None] * sun_dir, axis=-1)
    return (along < 0.0) & (perp < EARTH_RADIUS_KM)


def sunlit_seconds(
    sofm: Sofm,
    sat: SatelliteId,
    slot: int,
    tau: float,
    frame: EarthFrame = EarthFrame(),
    substeps: int = 20,
) -> float:
    """Sunlit time of one satellite within a slot, midpoint-sampled ``substeps`` times."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    propagate(sofm, sat, slot, tau)  # index validation
    row = sofm.rows[sat.orbit - 1]
    t = slot_start_s(slot, tau) + (np.arange(substeps) + 0.5) * tau / substeps
    pos = _plane_positions(row, t)[:, sat.index - 1]
    lit = ~in_shadow(pos, frame.sun_direction(t))
    return float(tau * (np.count_nonzero(lit) / substeps))


def domain_sunlit_seconds(sofm: Sofm, slots: int, tau: float, frame: EarthFrame, substeps: int = 20) -> np.ndarray:
    """Sunlit seconds for every (slot, satellite) of a domain. Shape (slots, I*J)."""
    offsets = (np.arange(substeps) + 0.5) * tau / substeps
    t = (np.arange(slots)[:, None] * tau + offsets[None, :]).ravel()
    pos = domain_positions(sofm, t)
    lit = ~in_shadow(pos, frame.sun_direction(t)[:, None, :])
    return tau * (lit.reshape(slots, substeps, -1).sum(axis=1) / substeps)
