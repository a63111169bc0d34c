"""Physical constants, loaded from a JSON table.

The bundled table can be replaced by pointing ``SPINSCOPE_CONSTANTS`` at
another file with the same layout.
"""

import json
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

ENV_VAR = "SPINSCOPE_CONSTANTS"
ANGSTROM = 1e-10
GAUSS = 1e-4


@dataclass(frozen=True)
class PhysicalConstants:
    mu0: float
    hbar: float
    gamma_e: float
    gamma_n: dict
    source: str = ""

    def gamma(self, species):
        try:
            return self.gamma_n[species]
        except KeyError:
            raise KeyError(f"no gyromagnetic ratio for species {species!r}; known: {sorted(self.gamma_n)}") from None

    def dipolar_prefactor(self, species):
        """``mu0 hbar gamma_e |gamma_n| / 4 pi`` in rad s^-1 m^3."""
        return self.mu0 / (4.0 * math.pi) * self.hbar * self.gamma_e * abs(self.gamma(species))

    def nuclear_dipolar_prefactor(self, species):
        """``mu0 hbar gamma_n^2 / 4 pi`` for two like nuclei, in rad s^-1 m^3."""
        return self.mu0 / (4.0 * math.pi) * self.hbar * self.gamma(species) ** 2


def load_constants(path=None):
    path = path or os.environ.get(ENV_VAR)
    if path:
        raw = json.loads(Path(path).read_text())
    else:
        raw = json.loads(resources.files("spinscope").joinpath("data/constants.json").read_text())
    return PhysicalConstants(
        mu0=float(raw["mu0"]),
        hbar=float(raw["hbar"]),
        gamma_e=float(raw["gamma_e"]),
        gamma_n={k: float(v) for k, v in raw["gamma_n"].items()},
        source=raw.get("source", ""),
    )
