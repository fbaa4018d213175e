"""Lattice energies of the F-AF chain, ground states and symmetry operations.

A chain lives on the sites ``i = 0..M`` with ``M = [1/spacing]``; the
next-nearest-neighbour coupling is fixed to one and every energy is a sum
over the bonds ``i = 0..M-2`` weighted by the lattice spacing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

UNIT_TOL = 1e-12
FSUM_THRESHOLD = 100_000


def lattice_size(spacing: float) -> int:
    """Integer part of ``1/spacing``, robust to representation error.

    ``1/1e-3`` is not exactly 1000 in binary, so quotients within a relative
    1e-9 of an integer snap to it.
    """
    if not (0.0 < spacing <= 1.0) or not math.isfinite(spacing):
        raise DomainError(f"lattice spacing must lie in (0, 1], got {spacing!r}")
    r = 1.0 / spacing
    m = round(r)
    if abs(r - m) <= 1e-9 * r:
        return int(m)
    return int(math.floor(r))


def c_factor(spacing: float) -> float:
    """Return ``c`` with ``sum_{i=0}^{[1/l]-2} l = 1 - c*l``; always in [1, 2)."""
    m = lattice_size(spacing)
    r = 1.0 / spacing
    if abs(r - m) <= 1e-9 * r:
        return 1.0
    return r - m + 1.0


def bond_weight(spacing: float) -> float:
    """``1 - c*spacing``: total weight of the bond sums."""
    return (lattice_size(spacing) - 1) * spacing


def _sum(terms: np.ndarray) -> float:
    # correctly rounded for long chains so the exact identities survive
    if terms.size > FSUM_THRESHOLD:
        return math.fsum(terms)
    return float(np.sum(terms))


def wrap_angle(theta):
    """Map angles into [-pi, pi)."""
    out = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    # mod can round up to exactly 2*pi for inputs just below -pi
    return np.where(out >= np.pi, -np.pi, out)


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the chain. ``j2`` is identically one."""

    j1: float
    spacing: float
    delta: float | None = None

    def __post_init__(self):
        lattice_size(self.spacing)
        if not math.isfinite(self.j1) or self.j1 < 0:
            raise DomainError(f"j1 must be a finite non-negative number, got {self.j1!r}")
        if self.delta is not None:
            if not (0.0 < self.delta < 1.0):
                raise DomainError(f"delta must lie in (0, 1), got {self.delta!r}")
            if abs(self.j1 - 4.0 * (1.0 - self.delta)) > 1e-12:
                raise DomainError(
                    f"j1={self.j1!r} inconsistent with delta={self.delta!r} (expected 4(1-delta))"
                )

    @classmethod
    def near_transition(cls, delta: float, spacing: float) -> "ModelParams":
        if not (0.0 < delta < 1.0):
            raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
        return cls(j1=4.0 * (1.0 - delta), spacing=spacing, delta=delta)

    @property
    def j2(self) -> float:
        return 1.0


@dataclass(frozen=True, eq=False)
class SpinChain:
    """Unit planar spins on ``i = 0..[1/spacing]``; ``spins`` has shape (M+1, 2)."""

    spins: np.ndarray
    spacing: float

    def __post_init__(self):
        spins = np.array(self.spins, dtype=float)
        if spins.ndim != 2 or spins.shape[1] != 2:
            raise DomainError(f"spins must have shape (n, 2), got {spins.shape}")
        m = lattice_size(self.spacing)
        if spins.shape[0] != m + 1:
            raise DomainError(
                f"chain with spacing {self.spacing!r} needs {m + 1} spins, got {spins.shape[0]}"
            )
        norms = np.hypot(spins[:, 0], spins[:, 1])
        if not np.all(np.abs(norms - 1.0) <= UNIT_TOL):
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise DomainError(f"spin {bad} has norm {norms[bad]!r}, expected 1")
        spins.setflags(write=False)
        object.__setattr__(self, "spins", spins)

    def __len__(self):
        return self.spins.shape[0]

    @property
    def n_bonds(self) -> int:
        return self.spins.shape[0] - 1

    @classmethod
    def from_angles(cls, phis, spacing: float) -> "SpinChain":
        phis = np.asarray(phis, dtype=float)
        return cls(np.column_stack([np.cos(phis), np.sin(phis)]), spacing)

    @classmethod
    def from_increments(cls, incr: "IncrementField", base_angle: float = 0.0) -> "SpinChain":
        phis = base_angle + np.concatenate([[0.0], np.cumsum(incr.thetas)])
        return cls.from_angles(phis, incr.spacing)

    def increments(self) -> "IncrementField":
        """Oriented angles between neighbours, in [-pi, pi)."""
        u, v = self.spins[:-1], self.spins[1:]
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        dot = np.sum(u * v, axis=1)
        # atan2 keeps full relative precision for the tiny angles near the
        # transition point; the two branches below apply sign(0) = -1
        theta = np.arctan2(cross, dot)
        theta = np.where(cross == 0.0, np.where(dot > 0.0, 0.0, -np.pi), theta)
        return IncrementField(wrap_angle(theta), self.spacing)


@dataclass(frozen=True, eq=False)
class IncrementField:
    """Oriented bond angles ``theta^i`` for ``i = 0..[1/spacing]-1``."""

    thetas: np.ndarray
    spacing: float

    def __post_init__(self):
        thetas = np.array(self.thetas, dtype=float)
        if thetas.ndim != 1:
            raise DomainError("thetas must be one-dimensional")
        m = lattice_size(self.spacing)
        if thetas.shape[0] != m:
            raise DomainError(f"spacing {self.spacing!r} needs {m} increments, got {thetas.shape[0]}")
        if not np.all(np.isfinite(thetas)) or np.any(thetas < -np.pi) or np.any(thetas >= np.pi):
            raise DomainError("increments must lie in [-pi, pi)")
        thetas.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)

    @classmethod
    def wrapped(cls, thetas, spacing: float) -> "IncrementField":
        return cls(wrap_angle(thetas), spacing)

    def __len__(self):
        return self.thetas.shape[0]


def _require_bonds(chain: SpinChain):
    if len(chain) < 3:
        raise DomainError("energies need at least 3 spins (no next-nearest pair otherwise)")


def _dots(chain: SpinChain):
    u = chain.spins
    m = chain.n_bonds
    nn = np.sum(u[: m - 1] * u[1:m], axis=1)
    nnn = np.sum(u[: m - 1] * u[2 : m + 1], axis=1)
    return nn, nnn


def energy_E(chain: SpinChain, params: ModelParams) -> float:
    _require_bonds(chain)
    nn, nnn = _dots(chain)
    lam = chain.spacing
    return _sum(lam * (-params.j1 * nn + nnn))


def _second_difference(chain: SpinChain, coeff: float) -> np.ndarray:
    u = chain.spins
    m = chain.n_bonds
    v = u[2 : m + 1] - coeff * u[1:m] + u[: m - 1]
    return np.sum(v * v, axis=1)


def energy_H(chain: SpinChain, params: ModelParams) -> float:
    """Non-negative form of the energy; equals ``E + (1 + j1^2/8)(1 - c*spacing)``
    whenever the chain satisfies the boundary condition."""
    _require_bonds(chain)
    return _sum(0.5 * chain.spacing * _second_difference(chain, params.j1 / 2.0))


def _check_delta(delta: float):
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")


def energy_Hhf(chain: SpinChain, delta: float) -> float:
    _check_delta(delta)
    _require_bonds(chain)
    return _sum(0.5 * chain.spacing * _second_difference(chain, 2.0 * (1.0 - delta)))


def energy_Ehf(chain: SpinChain, delta: float) -> float:
    _check_delta(delta)
    return energy_E(chain, ModelParams(j1=4.0 * (1.0 - delta), spacing=chain.spacing))


def hf_offset(delta: float, spacing: float) -> float:
    """``(3 - 4 delta + 2 delta^2)(1 - c*spacing)``, the gap between the two
    renormalized energies."""
    return (3.0 - 4.0 * delta + 2.0 * delta * delta) * bond_weight(spacing)


def hhf_bond_terms(thetas: np.ndarray, delta: float) -> np.ndarray:
    """Per-bond ``|u^{i+2} - 2(1-delta)u^{i+1} + u^i|^2`` from increments.

    Written in the frame of the middle spin, the vector is
    ``(2 delta - 2 s_a^2 - 2 s_b^2, sin b - sin a)`` with ``s = sin(theta/2)``,
    which avoids the O(1) cancellations of the cosine expansion.
    """
    s2 = np.sin(0.5 * thetas) ** 2
    st = np.sin(thetas)
    return 4.0 * (delta - s2[:-1] - s2[1:]) ** 2 + (st[1:] - st[:-1]) ** 2


def reduced_Hhf(incr: IncrementField, delta: float) -> float:
    _check_delta(delta)
    if len(incr) < 2:
        raise DomainError("need at least 2 increments")
    return _sum(0.5 * incr.spacing * hhf_bond_terms(incr.thetas, delta))


def helix_angle(j1: float) -> tuple[float, bool]:
    """Rotation angle of the helical ground state and whether the chain is
    in the ferromagnetic regime (``j1 > 4``)."""
    if not j1 > 0:
        raise DomainError(f"ground states need j1 > 0, got {j1!r}")
    if j1 > 4.0:
        return 0.0, True
    return math.acos(j1 / 4.0), False


class GroundState(NamedTuple):
    chain: SpinChain
    angle: float
    ferromagnetic: bool


def ground_state(params: ModelParams, chirality: int = 1, base_angle: float = 0.0) -> GroundState:
    if chirality not in (1, -1):
        raise DomainError(f"chirality must be +1 or -1, got {chirality!r}")
    phi, ferro = helix_angle(params.j1)
    m = lattice_size(params.spacing)
    phis = base_angle + chirality * phi * np.arange(m + 1)
    return GroundState(SpinChain.from_angles(phis, params.spacing), chirality * phi, ferro)


def min_energy_analytic(params: ModelParams) -> float:
    if not params.j1 > 0:
        raise DomainError(f"j1 must be positive, got {params.j1!r}")
    w = bond_weight(params.spacing)
    if params.j1 <= 4.0:
        return -(1.0 + params.j1**2 / 8.0) * w
    return -(params.j1 - 1.0) * w


def boundary_ok(chain: SpinChain, tol: float = 1e-9) -> bool:
    u = chain.spins
    first = float(np.dot(u[1], u[0]))
    last = float(np.dot(u[-1], u[-2]))
    return abs(first - last) <= tol


def rotate(chain: SpinChain, angle: float) -> SpinChain:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    spins = chain.spins @ rot.T
    # renormalize to undo the last-bit drift of the matrix product
    spins /= np.hypot(spins[:, 0], spins[:, 1])[:, None]
    return SpinChain(spins, chain.spacing)


def reflect(chain: SpinChain) -> SpinChain:
    return SpinChain(chain.spins * np.array([1.0, -1.0]), chain.spacing)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def chain_to_csv(chain: SpinChain) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "x", "y"])
    for i, (x, y) in enumerate(chain.spins):
        w.writerow([i, _fmt(x), _fmt(y)])
    return buf.getvalue()


def chain_from_csv(text: str, spacing: float) -> SpinChain:
    rows = list(csv.DictReader(io.StringIO(text)))
    spins = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    return SpinChain(spins, spacing)


def increments_to_csv(incr: IncrementField) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "theta"])
    for i, t in enumerate(incr.thetas):
        w.writerow([i, _fmt(t)])
    return buf.getvalue()


def increments_from_csv(text: str, spacing: float) -> IncrementField:
    rows = list(csv.DictReader(io.StringIO(text)))
    return IncrementField(np.array([float(r["theta"]) for r in rows]), spacing)
