"""DiscoveryResult and its JSON form."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..cooktoom import PointConfiguration, config_from_dict
from ..errors import InvalidInputError

MODES = ("pipeline", "es", "symmetric", "dtype_aware")


def canonical_order(points) -> tuple:
    """0 first, then by magnitude with the positive member of a pair first."""
    return tuple(sorted((Fraction(p) for p in points), key=lambda q: (abs(q), q < 0)))


@dataclass
class DiscoveryResult:
    config: PointConfiguration
    kappa2_v: float
    verified: bool
    mode: str
    seed: int
    runtime: float = 0.0
    provenance: list = field(default_factory=list)
    dtype: str | None = None

    @property
    def points(self) -> tuple:
        return self.config.finite_points

    def to_dict(self) -> dict:
        out = {
            "tile": {"m": self.config.m, "r": self.config.r},
            "points": self.config.point_strings(),
            "kappa2_v": self.kappa2_v,
            "verified": self.verified,
            "mode": self.mode,
            "seed": self.seed,
            "runtime_s": self.runtime,
            "provenance": list(self.provenance),
        }
        if self.dtype is not None:
            out["dtype"] = self.dtype
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DiscoveryResult":
        try:
            mode = data["mode"]
            if mode not in MODES:
                raise InvalidInputError(f"unknown mode {mode!r}")
            return cls(
                config=config_from_dict(data),
                kappa2_v=float(data["kappa2_v"]),
                verified=bool(data["verified"]),
                mode=mode,
                seed=int(data["seed"]),
                runtime=float(data.get("runtime_s", 0.0)),
                provenance=list(data.get("provenance", [])),
                dtype=data.get("dtype"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed discovery result: {exc}") from exc

    def outcome(self) -> dict:
        """Everything except wall-clock runtime; equal for reproducible runs."""
        d = self.to_dict()
        d.pop("runtime_s")
        return d


def float_points(config: PointConfiguration) -> np.ndarray:
    return np.array([float(p) for p in config.finite_points])
