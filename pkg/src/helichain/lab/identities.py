"""Exact identities behind the lower bound, checked on seeded random data."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..spin import (
    IncrementField,
    ModelParams,
    SpinChain,
    energy_E,
    energy_Ehf,
    energy_H,
    energy_Hhf,
    bond_weight,
    hf_offset,
    lattice_size,
    reduced_Hhf,
)

EXACT_TOL = 1e-12


def quartic_residual(x) -> np.ndarray:
    """``4 sin^2 x - sin^2(2x) - 4 sin^4 x``."""
    x = np.asarray(x, dtype=float)
    s = np.sin(x)
    return 4.0 * s * s - np.sin(2.0 * x) ** 2 - 4.0 * s**4


def cross_residual(x, y) -> np.ndarray:
    """``sin^2 x + sin^2 y - (1 - cos(x+y))`` minus
    ``(sin x - sin y)^2 - (1 - cos(x-y))``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lhs = np.sin(x) ** 2 + np.sin(y) ** 2 - (1.0 - np.cos(x + y))
    rhs = (np.sin(x) - np.sin(y)) ** 2 - (1.0 - np.cos(x - y))
    return lhs - rhs


def limit_ratio(x, y) -> np.ndarray:
    """``[sin^2 x + sin^2 y - (1 - cos(x+y))] / (sin(x/2) - sin(y/2))^2``;
    tends to 2 as ``(x, y) -> 0`` with ``x != y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    num = np.sin(x) ** 2 + np.sin(y) ** 2 - (1.0 - np.cos(x + y))
    return num / (np.sin(0.5 * x) - np.sin(0.5 * y)) ** 2


def half_angle_residual(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return (1.0 - np.cos(theta)) - 2.0 * np.sin(0.5 * theta) ** 2


def boundary_chain(rng: np.random.Generator, spacing: float, scale: float = math.pi) -> SpinChain:
    """Random chain whose last increment repeats the first up to sign, so
    ``cos theta^0 = cos theta^{M-1}`` holds exactly."""
    m = lattice_size(spacing)
    th = rng.uniform(-scale, scale, m)
    th[-1] = th[0] if rng.random() < 0.5 else -th[0]
    return SpinChain.from_increments(IncrementField.wrapped(th, spacing), rng.uniform(-math.pi, math.pi))


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def identity_suite(seed: int = 0, samples: int = 100, spacing: float = 0.05) -> list[IdentityCheck]:
    """Worst residual of each identity over ``samples`` seeded draws.

    Energy identities are compared relative to the bond weight so the
    tolerance does not depend on the chain length.
    """
    rng = np.random.default_rng(seed)
    worst = {k: 0.0 for k in ("E-H", "Ehf-Hhf", "reduced-direct", "quartic", "cross", "half-angle", "limit")}
    scale = bond_weight(spacing)
    for _ in range(samples):
        chain = boundary_chain(rng, spacing)
        j1 = rng.uniform(0.1, 5.0)
        delta = rng.uniform(1e-4, 0.5)
        p = ModelParams(j1, spacing)
        gap = energy_E(chain, p) - (energy_H(chain, p) - (1.0 + j1 * j1 / 8.0) * scale)
        worst["E-H"] = max(worst["E-H"], abs(gap) / scale)
        gap = energy_Ehf(chain, delta) + hf_offset(delta, spacing) - energy_Hhf(chain, delta)
        worst["Ehf-Hhf"] = max(worst["Ehf-Hhf"], abs(gap) / scale)

        small = boundary_chain(rng, spacing, scale=2.0 * math.sqrt(2.0 * delta))
        direct = energy_Hhf(small, delta)
        reduced = reduced_Hhf(small.increments(), delta)
        worst["reduced-direct"] = max(worst["reduced-direct"], abs(direct - reduced) / scale)

        x, y = rng.uniform(-math.pi, math.pi, 2)
        worst["quartic"] = max(worst["quartic"], float(abs(quartic_residual(x))))
        worst["cross"] = max(worst["cross"], float(abs(cross_residual(x, y))))
        worst["half-angle"] = max(worst["half-angle"], float(abs(half_angle_residual(x))))

        y = rng.uniform(-1e-3, 1e-3)
        worst["limit"] = max(worst["limit"], float(abs(limit_ratio(y + 1e-4, y) - 2.0)))
    tol = {k: EXACT_TOL for k in worst}
    tol["limit"] = 1e-2
    return [IdentityCheck(k, v, tol[k]) for k, v in worst.items()]
