"""CGS physical constants used by the hydrogen calculations."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Electron charge (esu), electron mass (g), hbar (erg s), alpha, c (cm/s).

    The electron charge defaults to ``sqrt(alpha * hbar * c)`` so that the
    fine-structure relation holds exactly for the chosen alpha.
    """

    m: float = 9.10938e-28
    hbar: float = 1.05457e-27
    c_light: float = 2.99792e10
    alpha: float = 1 / 137
    e: float | None = None

    def __post_init__(self):
        if self.e is None:
            object.__setattr__(self, "e", math.sqrt(self.alpha * self.hbar * self.c_light))
        for name in ("m", "hbar", "c_light", "alpha", "e"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def reproduction(cls) -> "PhysicalConstants":
        """Snapshot with alpha = 1/137, for reproducing the published estimate."""
        return cls()

    @classmethod
    def modern(cls) -> "PhysicalConstants":
        return cls(
            m=9.1093837015e-28,
            hbar=1.054571817e-27,
            c_light=2.99792458e10,
            alpha=7.2973525693e-3,
            e=4.80320471e-10,
        )

    @property
    def h(self) -> float:
        return 2 * math.pi * self.hbar

    @property
    def e2(self) -> float:
        return self.e**2

    @property
    def bohr_radius(self) -> float:
        return self.hbar**2 / (self.m * self.e2)

    def alpha_consistency(self) -> float:
        """Relative mismatch of alpha against e^2 / (hbar c)."""
        return abs(self.e2 / (self.hbar * self.c_light) - self.alpha) / self.alpha

    def to_dict(self) -> dict:
        return asdict(self)
