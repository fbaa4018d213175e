"""Cell-problem estimator for the zero-order bulk density ``f_hom``.

The cell holds ``k`` spins ``u^j = (cos psi_j, sin psi_j)`` with
increments ``theta^j = psi_{j+1} - psi_j`` and its energy per site is

    (1/k) sum_i [ -J1 cos theta^i + cos(theta^i + theta^{i+1}) ]

with all indices taken mod ``k``. The cell is periodic in the spins: the
increments wind a fixed whole number of turns, ``sum theta = 2 pi n``. The
phases ``psi`` are the unknowns. The mean ``<u>`` is held in the ball
``|<u> - z| <= rho``, the stiff limit of the penalty
``kappa * max(0, |<u> - z| - rho)^2``; SLSQP treats it as an explicit
inequality constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as sp_minimize

from ..errors import DomainError, NumericalFailure
from ..spin import ModelParams, helix_angle

DEFAULT_K = 64
DEFAULT_RHO = 0.002
MAX_ITER = 3000
MIN_TILE = 16
FEAS_TOL = 1e-10


@dataclass(frozen=True)
class FhomEstimate:
    z: tuple
    value: float
    cell_size: int
    rho: float
    mean_error: float
    start: str

    def to_dict(self) -> dict:
        return {
            "z": list(self.z),
            "value": self.value,
            "cell_size": self.cell_size,
            "rho": self.rho,
            "mean_error": self.mean_error,
            "start": self.start,
        }


def fhom_bounds(r: float, j1: float) -> tuple[float, float]:
    """Two-sided bounds ``c r^2 - e0 <= h(r) <= c r - e0`` with
    ``c = (J1-4)^2/8`` and ``e0 = 1 + J1^2/8`` (valid for ``0 < J1 < 4``)."""
    c = (j1 - 4.0) ** 2 / 8.0
    e0 = 1.0 + j1 * j1 / 8.0
    return c * r * r - e0, c * r - e0


def _increments(psi: np.ndarray, winding: int) -> np.ndarray:
    th = np.roll(psi, -1) - psi
    th[-1] += 2.0 * math.pi * winding
    return th


def _phases(th: np.ndarray, base: float = 0.0) -> np.ndarray:
    return base + np.concatenate(([0.0], np.cumsum(th[:-1])))


def cell_energy(th: np.ndarray, j1: float) -> float:
    return float(np.mean(-j1 * np.cos(th) + np.cos(th + np.roll(th, -1))))


def cell_mean(psi: np.ndarray) -> np.ndarray:
    return np.array([np.mean(np.cos(psi)), np.mean(np.sin(psi))])


def _objective(j1: float, winding: int):
    def fun(psi):
        th = _increments(psi, winding)
        nxt = np.roll(th, -1)
        s = np.sin(th + nxt)
        f = np.mean(-j1 * np.cos(th) + np.cos(th + nxt))
        g_th = (j1 * np.sin(th) - s - np.roll(s, 1)) / th.size
        # theta^j = psi_{j+1} - psi_j
        return float(f), np.roll(g_th, 1) - g_th

    return fun


def _ball(z: np.ndarray, rho: float) -> dict:
    def gap(psi):
        c, s = np.cos(psi), np.sin(psi)
        d = np.array([c.mean() - z[0], s.mean() - z[1]])
        return d, c, s

    def fun(psi):
        d, _, _ = gap(psi)
        return np.array([rho * rho - d @ d])

    def jac(psi):
        d, c, s = gap(psi)
        return (2.0 * (d[0] * s - d[1] * c) / psi.size)[None, :]

    return {"type": "ineq", "fun": fun, "jac": jac}


def _closed(th: np.ndarray) -> tuple[np.ndarray, int]:
    """Spread the winding mismatch evenly so the increments close whole turns."""
    winding = int(round(np.sum(th) / (2.0 * math.pi)))
    return th + (2.0 * math.pi * winding - np.sum(th)) / th.size, winding


def _mixture(phi: float, nf: int, k: int) -> tuple[np.ndarray, int]:
    """``nf`` aligned sites followed by a helix block of ``k - nf`` sites
    spanning whole turns; the block sums to zero, so ``<u>`` has length
    exactly ``nf/k``."""
    m = k - nf
    turns = max(1, int(round(m * abs(phi) / (2.0 * math.pi))))
    while m > 1 and turns % m == 0:
        turns += 1
    th = np.zeros(k)
    th[nf:] = math.copysign(2.0 * math.pi * turns / m, phi)
    return th, int(math.copysign(turns, phi))


def _starts(z: np.ndarray, j1: float, k: int) -> dict[str, tuple[np.ndarray, int]]:
    phi, _ = helix_angle(j1)
    r = math.hypot(z[0], z[1])
    raw = {
        "helix+": _closed(np.full(k, phi)),
        "helix-": _closed(np.full(k, -phi)),
        "ferro": (np.zeros(k), 0),
    }
    nf = int(round(r * k))
    if 0 < nf < k - 1:
        raw["mix+"] = _mixture(phi, nf, k)
        raw["mix-"] = _mixture(-phi, nf, k)
    starts = {}
    target = math.atan2(z[1], z[0]) if r > 0 else 0.0
    for name, (th, winding) in raw.items():
        psi = _phases(th)
        m = cell_mean(psi)
        psi += target - (math.atan2(m[1], m[0]) if math.hypot(*m) > 1e-12 else 0.0)
        starts[name] = (psi, winding)
    return starts


def _solve(z: np.ndarray, j1: float, k: int, rho: float):
    ball = _ball(z, rho)
    starts = _starts(z, j1, k)
    if k % 2 == 0 and k // 2 >= MIN_TILE:
        # a half-size optimum tiled twice is feasible here with the same
        # energy, so estimates cannot increase under doubling
        half = _solve(z, j1, k // 2, rho)
        starts["tiled"] = (np.concatenate((half[2], half[2] + 2.0 * math.pi * half[3])), 2 * half[3])
    best = None
    for name, (x, winding) in starts.items():
        fun = _objective(j1, winding)
        res = sp_minimize(
            fun, x, jac=True, method="SLSQP",
            constraints=[ball], options={"maxiter": MAX_ITER, "ftol": 1e-12},
        )
        for cand in (res.x, x):
            if not np.all(np.isfinite(cand)) or ball["fun"](cand)[0] < -FEAS_TOL:
                continue
            f = cell_energy(_increments(cand, winding), j1)
            if best is None or f < best[0]:
                best = (f, name, cand, winding)
    if best is None:
        raise NumericalFailure("no start of the cell problem ended feasible", MAX_ITER)
    return best


def fhom_estimate(z, params: ModelParams, k: int = DEFAULT_K, rho: float = DEFAULT_RHO) -> FhomEstimate:
    """Multi-start constrained cell minimization; returns the best value."""
    z = np.asarray(z, dtype=float)
    if z.shape != (2,) or math.hypot(z[0], z[1]) > 1.0 + 1e-12:
        raise DomainError(f"z must be a 2-vector with |z| <= 1, got {z.tolist()}")
    if k < 16:
        raise DomainError(f"cell size must be at least 16, got {k}")
    if not (0.0 < rho < 0.5):
        raise DomainError(f"rho must lie in (0, 0.5), got {rho!r}")
    j1 = params.j1
    if not (0.0 < j1 < 4.0):
        raise DomainError(f"the cell problem is set up for 0 < J1 < 4, got {j1!r}")
    f, name, x, _ = _solve(z, j1, k, rho)
    return FhomEstimate(
        z=tuple(float(v) for v in z),
        value=f,
        cell_size=k,
        rho=rho,
        mean_error=float(np.linalg.norm(cell_mean(x) - z)),
        start=name,
    )


def fhom_radial_check(r: float, params: ModelParams, m: int = 8, **kw) -> float:
    """Spread (max - min) of the estimate over ``m`` rotations of ``r e_1``."""
    if m < 3:
        raise DomainError(f"need at least 3 directions, got {m}")
    if r == 0.0:
        return 0.0
    vals = []
    for j in range(m):
        a = 2.0 * math.pi * j / m
        vals.append(fhom_estimate((r * math.cos(a), r * math.sin(a)), params, **kw).value)
    return float(max(vals) - min(vals))
