from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class SatelliteId:
    """Address of a satellite node: domain k, orbit i, in-orbit index j (all 1-based)."""

    domain: int
    orbit: int
    index: int

    def __str__(self) -> str:
        return f"D{self.domain}-{self.orbit}-{self.index}"

    @classmethod
    def parse(cls, text: str) -> "SatelliteId":
        d, i, j = text.lstrip("D").split("-")
        return cls(int(d), int(i), int(j))
