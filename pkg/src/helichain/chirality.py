"""Chirality order parameter: spins -> bond angles -> w -> z, and back.

``z`` is constant on the cells ``spacing*(i + [0, 1))`` for
``i = 0..[1/spacing]-1``; ground states of opposite chirality map to
``z = +1`` and ``z = -1``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, PreconditionError
from .spin import IncrementField, SpinChain, lattice_size, wrap_angle

__all__ = [
    "ChiralityField",
    "ProfileFit",
    "chi",
    "angles",
    "order_parameter",
    "reconstruct",
    "jump_count",
    "profile_fit",
    "fit_tanh",
]


@dataclass(frozen=True, eq=False)
class ChiralityField:
    z: np.ndarray
    delta: float
    spacing: float

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise DomainError(f"delta must lie in (0, 1), got {self.delta!r}")
        z = np.array(self.z, dtype=float)
        if z.ndim != 1 or z.shape[0] != lattice_size(self.spacing):
            raise DomainError(
                f"spacing {self.spacing!r} needs {lattice_size(self.spacing)} cells, got {z.shape}"
            )
        if np.any(np.abs(self.w_of(z)) > 1.0 + 1e-15):
            raise DomainError("|w| must not exceed 1")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    def w_of(self, z):
        return math.sqrt(self.delta / 2.0) * z

    @property
    def w(self) -> np.ndarray:
        return self.w_of(self.z)

    @property
    def x(self) -> np.ndarray:
        """Left endpoints of the cells."""
        return self.spacing * np.arange(self.z.shape[0])

    @classmethod
    def from_w(cls, w, delta: float, spacing: float) -> "ChiralityField":
        return cls(math.sqrt(2.0 / delta) * np.asarray(w, dtype=float), delta, spacing)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["i", "x", "z"])
        for i, (x, z) in enumerate(zip(self.x, self.z)):
            out.writerow([i, format(float(x), ".17g"), format(float(z), ".17g")])
        return buf.getvalue()


@dataclass(frozen=True)
class ProfileFit:
    center: float
    width: float
    residual: float
    sign: int = 1

    def to_json(self) -> str:
        return json.dumps({"center": self.center, "width": self.width, "residual": self.residual})


def chi(v, w) -> int:
    """Sign of the cross product ``v x w`` with the convention sign(0) = -1."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    for name, a in (("v", v), ("w", w)):
        if a.shape != (2,) or abs(math.hypot(a[0], a[1]) - 1.0) > 1e-9:
            raise DomainError(f"{name} must be a unit 2-vector, got {a.tolist()}")
    return 1 if v[0] * w[1] - v[1] * w[0] > 0 else -1


def angles(chain: SpinChain) -> IncrementField:
    return chain.increments()


def order_parameter(chain: SpinChain, delta: float) -> ChiralityField:
    theta = chain.increments().thetas
    return ChiralityField.from_w(np.sin(0.5 * theta), delta, chain.spacing)


def reconstruct(field: ChiralityField, base_angle: float = 0.0) -> SpinChain:
    """Spins whose order parameter is ``field``, with ``u^0`` at ``base_angle``.

    Bond ``i`` turns by ``2 arcsin(w^i)``.
    """
    w = field.w
    if np.any(np.abs(w) > 1.0):
        raise DomainError("|w| must not exceed 1")
    theta = wrap_angle(2.0 * np.arcsin(np.clip(w, -1.0, 1.0)))
    return SpinChain.from_increments(IncrementField(theta, field.spacing), base_angle)


def jump_count(field: ChiralityField | np.ndarray, threshold: float = 0.5) -> int:
    """Sign changes between plateaus where ``|z| >= threshold``.

    Cells below the threshold are skipped, so a smooth crossing through zero
    counts once.
    """
    if not (0.0 < threshold < 1.0):
        raise DomainError(f"threshold must lie in (0, 1), got {threshold!r}")
    z = field.z if isinstance(field, ChiralityField) else np.asarray(field, dtype=float)
    plateau = z[np.abs(z) >= threshold]
    if plateau.size < 2:
        return 0
    signs = np.sign(plateau)
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _crossing(x, z, level):
    """First x where z crosses ``level``, linearly interpolated; None if absent."""
    d = z - level
    idx = np.nonzero(np.sign(d[1:]) != np.sign(d[:-1]))[0]
    if idx.size == 0:
        return None
    i = idx[0]
    if d[i + 1] == d[i]:
        return float(x[i])
    return float(x[i] - d[i] * (x[i + 1] - x[i]) / (d[i + 1] - d[i]))


def fit_tanh(x, z, spacing: float | None = None, grid: int = 41) -> ProfileFit:
    """Fit ``z ~ s*tanh((x - center)/width)`` to samples of one transition.

    The crossing of zero seeds the center and half the distance between the
    ``-tanh(1)`` and ``tanh(1)`` crossings seeds the width; a coarse grid
    around that guess is followed by a Gauss-Newton polish.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if spacing is None:
        spacing = float(np.min(np.diff(x)))
    plateau = z[np.abs(z) >= 0.5]
    sign = 1 if plateau.size == 0 or plateau[-1] > 0 else -1
    zs = sign * z

    x0 = _crossing(x, zs, 0.0)
    if x0 is None:
        x0 = float(x[np.argmin(np.abs(zs))])
    lo, hi = _crossing(x, zs, -math.tanh(1.0)), _crossing(x, zs, math.tanh(1.0))
    xi0 = 0.5 * (hi - lo) if lo is not None and hi is not None and hi > lo else 5.0 * spacing
    xi0 = max(xi0, 0.5 * spacing)

    def rms(c, w):
        return math.sqrt(float(np.mean((np.tanh((x - c) / w) - zs) ** 2)))

    centers = x0 + xi0 * np.linspace(-3.0, 3.0, grid)
    widths = xi0 * np.geomspace(0.25, 4.0, grid)
    _, c0, w0 = min((rms(c, w), c, w) for c in centers for w in widths)

    sol = least_squares(
        lambda p: np.tanh((x - p[0]) / p[1]) - zs,
        x0=[c0, w0],
        bounds=([-np.inf, 1e-12], [np.inf, np.inf]),
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
    )
    c, w = float(sol.x[0]), float(sol.x[1])
    return ProfileFit(center=c, width=w, residual=rms(c, w), sign=sign)


def profile_fit(field: ChiralityField, grid: int = 41) -> ProfileFit:
    if jump_count(field, 0.5) != 1:
        raise PreconditionError("profile_fit needs exactly one jump at threshold 0.5")
    return fit_tanh(field.x, field.z, field.spacing, grid)
