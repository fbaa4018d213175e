"""Continuum-side functionals: the discrete Modica-Mortola energy, its
interface constant, the diffuse-interface functional and its minimizer."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..chirality import ChiralityField, ProfileFit, fit_tanh
from ..errors import DomainError, HelichainError
from ..minimize import Objective, OptimizerSettings, minimize_local

WELLS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "quartic": lambda s: (1.0 - s * s) ** 2,
    "quartic4": lambda s: 4.0 * (1.0 - s * s) ** 2,
}


@dataclass(frozen=True)
class MMConfig:
    alpha: float
    beta: float
    well: str | Callable = "quartic"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("alpha and beta must be positive")
        w = self.potential
        vals = np.asarray(w(np.array([-1.0, 1.0])), dtype=float)
        if np.any(np.abs(vals) > 1e-12):
            raise DomainError("the well must vanish at -1 and +1")
        probe = np.asarray(w(np.linspace(-2.0, 2.0, 401)), dtype=float)
        if np.any(probe < 0):
            raise DomainError("the well must be non-negative")

    @property
    def potential(self) -> Callable[[np.ndarray], np.ndarray]:
        if callable(self.well):
            return self.well
        try:
            return WELLS[self.well]
        except KeyError:
            raise DomainError(f"unknown well {self.well!r}; choose from {sorted(WELLS)}") from None


def mm_energy(z, cfg: MMConfig, spacing: float) -> float:
    """``alpha sum l((z^{i+1}-z^i)/l)^2 + (1/beta) sum l W(z^i)``, both sums
    over ``i = 0..n-2``."""
    z = z.z if isinstance(z, ChiralityField) else np.asarray(z, dtype=float)
    grad = np.sum(spacing * ((z[1:] - z[:-1]) / spacing) ** 2)
    pot = np.sum(spacing * np.asarray(cfg.potential(z[:-1]), dtype=float))
    return float(cfg.alpha * grad + pot / cfg.beta)


class QuadratureError(HelichainError):
    pass


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-8, max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, a, b):
        return (b - a) * (fa + 4.0 * fm + fb) / 6.0

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        err = left + right - whole
        if abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{a}, {b}]")
        return recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1) + recurse(
            m, b, fm, frm, fb, right, tol / 2.0, depth + 1
        )

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)


def mm_limit_constant(well: str | Callable = "quartic", tol: float = 1e-8) -> float:
    """Interface cost ``2 * int_{-1}^{1} sqrt(W(s)) ds``."""
    w = well if callable(well) else MMConfig(1.0, 1.0, well).potential

    def root(s):
        return math.sqrt(max(float(w(np.array(s))), 0.0))

    value = 2.0 * adaptive_simpson(root, -1.0, 1.0, tol / 2.0)
    if value == 0.0:
        warnings.warn("degenerate well: sqrt(W) integrates to zero on [-1, 1]", stacklevel=2)
    return value


# --- recovery profile -------------------------------------------------------


def recovery_radius(eps: float) -> float:
    """Smallest ``R`` with ``1 - tanh(R) <= eps/2``."""
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    return math.atanh(1.0 - eps / 2.0)


def recovery_profile(t, eps: float) -> np.ndarray:
    """Odd C^1 profile: ``tanh`` up to ``R``, a cubic Hermite blend on
    ``(R, R + eps)``, then exactly 1.

    The blend slope stays below 2, which the construction asserts.
    """
    t = np.asarray(t, dtype=float)
    R = recovery_radius(eps)
    y0, m0 = math.tanh(R), 1.0 - math.tanh(R) ** 2
    a = np.abs(t)
    out = np.ones_like(a)
    core = a <= R
    out[core] = np.tanh(a[core])
    mid = (a > R) & (a < R + eps)
    s = (a[mid] - R) / eps
    h00, h10, h01 = 2 * s**3 - 3 * s**2 + 1, s**3 - 2 * s**2 + s, -2 * s**3 + 3 * s**2
    out[mid] = h00 * y0 + h10 * eps * m0 + h01 * 1.0
    slope = _blend_max_slope(y0, m0, eps)
    assert slope <= 2.0, f"blend slope {slope} exceeds 2"
    return np.sign(t) * out


def _blend_max_slope(y0, m0, eps):
    s = np.linspace(0.0, 1.0, 201)
    d00, d10, d01 = 6 * s**2 - 6 * s, 3 * s**2 - 4 * s + 1, -6 * s**2 + 6 * s
    return float(np.max(np.abs((d00 * y0 + d10 * eps * m0 + d01) / eps)))


def recovery_field(spacing: float, delta: float, eps: float = 0.01) -> ChiralityField:
    """Samples ``z^i = profile(sqrt(2 delta)/spacing * (spacing*i - 1/2))``."""
    from ..spin import lattice_size

    i = np.arange(lattice_size(spacing))
    t = math.sqrt(2.0 * delta) / spacing * (spacing * i - 0.5)
    return ChiralityField(recovery_profile(t, eps), delta, spacing)


# --- diffuse-interface functional ------------------------------------------


def continuum_Hhf(z_samples, l: float) -> float:
    """``(1/l) int (z^2 - 1)^2 + l int z'^2`` on [0, 1] from uniform samples
    (trapezoid for the potential, forward differences for the gradient)."""
    z = np.asarray(z_samples, dtype=float)
    if not l > 0:
        raise DomainError(f"l must be positive, got {l!r}")
    if z.size < 2:
        raise DomainError("need at least 2 samples")
    h = 1.0 / (z.size - 1)
    pot = (z * z - 1.0) ** 2
    trap = h * (np.sum(pot) - 0.5 * (pot[0] + pot[-1]))
    grad = np.sum((z[1:] - z[:-1]) ** 2) / h
    return float(trap / l + l * grad)


def _continuum_objective(n: int, l: float) -> Objective:
    h = 1.0 / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h

    def gradient(z):
        g = w * 4.0 * z * (z * z - 1.0) / l
        d = z[1:] - z[:-1]
        g[1:] += 2.0 * l * d / h
        g[:-1] -= 2.0 * l * d / h
        return g

    def hessian(z):
        diag = w * (12.0 * z * z - 4.0) / l
        diag[1:] += 2.0 * l / h
        diag[:-1] += 2.0 * l / h
        return diag, np.full(n - 1, -2.0 * l / h)

    return Objective(lambda z: continuum_Hhf(z, l), gradient, hessian)


def default_samples(l: float) -> int:
    return max(2001, int(math.ceil(40.0 / l)) + 1)


def continuum_min(
    l: float,
    boundary: tuple[float, float] = (-1.0, 1.0),
    samples: int | None = None,
    settings: OptimizerSettings | None = None,
):
    """Minimize the diffuse-interface functional with clamped endpoint
    values, starting from an odd step. Returns ``(z, energy)``."""
    if not l > 0:
        raise DomainError(f"l must be positive, got {l!r}")
    n = samples or default_samples(l)
    if n < 3:
        raise DomainError("need at least 3 samples")
    settings = settings or OptimizerSettings(method="newton", max_iterations=10_000)
    x = np.linspace(0.0, 1.0, n)
    z0 = np.sign(x - 0.5)
    z0[0], z0[-1] = boundary
    free = np.ones(n, dtype=bool)
    free[[0, -1]] = False
    if settings.gradient_tolerance is not None:
        tol = settings.gradient_tolerance
    else:
        h = 1.0 / (n - 1)
        # round-off floor of the stiffness term is about eps * l / h
        tol = 1e-9 * h + 32.0 * np.finfo(float).eps * l / h
    z, energy, *_ = minimize_local(_continuum_objective(n, l), z0, free, settings, tol)
    return z, energy


def continuum_width(z) -> ProfileFit:
    z = np.asarray(z, dtype=float)
    return fit_tanh(np.linspace(0.0, 1.0, z.size), z)
