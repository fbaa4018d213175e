"""Local descent on the renormalized energy in increment coordinates.

Also hosts the exhaustive grid oracle for tiny chains and the a-priori
bound on neighbour scalar products.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .errors import DomainError, NumericalFailure, PreconditionError
from .spin import (
    IncrementField,
    ModelParams,
    SpinChain,
    energy_H,
    hhf_bond_terms,
    lattice_size,
    reduced_Hhf,
)

ARMIJO = 1e-4
MAX_BACKTRACKS = 80
# consecutive steps that change the energy by no more than round-off
FLOOR_STEPS = 5
FLOOR_ULPS = 8.0


@dataclass(frozen=True)
class OptimizerSettings:
    max_iterations: int = 1_000_000
    gradient_tolerance: float | None = None  # None -> 1e-10 * spacing
    initial_step: float = 1.0
    backtracking: float = 0.5
    seed: int = 0
    method: str = "gradient"  # or "newton"

    def __post_init__(self):
        if self.max_iterations <= 0 or self.initial_step <= 0:
            raise DomainError("max_iterations and initial_step must be positive")
        if self.gradient_tolerance is not None and self.gradient_tolerance <= 0:
            raise DomainError("gradient_tolerance must be positive")
        if not (0.0 < self.backtracking < 1.0):
            raise DomainError("backtracking factor must lie in (0, 1)")
        if self.method not in ("gradient", "newton"):
            raise DomainError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class Clamp:
    """Increments held fixed during descent, as ``(index, value)`` pairs.

    Negative indices count from the right end of the chain.
    """

    head_increments: tuple = ()
    tail_increments: tuple = ()

    @classmethod
    def chirality(cls, delta: float, width: int = 2) -> "Clamp":
        """Opposite chiralities at the two ends: ``-phi`` on the first
        ``width`` bonds, ``+phi`` on the last, ``cos phi = 1 - delta``."""
        phi = math.acos(1.0 - delta)
        return cls(
            tuple((i, -phi) for i in range(width)),
            tuple((-width + i, phi) for i in range(width)),
        )

    def resolve(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Absolute indices and values for a field with ``n`` increments."""
        pairs = list(self.head_increments) + list(self.tail_increments)
        idx = np.array([i % n if -n <= i < n else -1 for i, _ in pairs], dtype=int)
        if np.any(idx < 0):
            raise DomainError("clamped index out of range")
        if len(set(idx.tolist())) != len(idx):
            raise DomainError("clamped indices must be disjoint")
        vals = np.array([v for _, v in pairs], dtype=float)
        if np.any(vals < -np.pi) or np.any(vals >= np.pi):
            raise DomainError("clamped values must lie in [-pi, pi)")
        return idx, vals


NO_CLAMP = Clamp()


class DescentResult(NamedTuple):
    incr: IncrementField
    energy: float
    iterations: int
    converged: bool
    status: str
    grad_norm: float


# --- derivatives of the bond form -------------------------------------------


def _bond_parts(thetas, delta):
    s, c = np.sin(thetas), np.cos(thetas)
    s2 = np.sin(0.5 * thetas) ** 2
    a_s, b_s = s[:-1], s[1:]
    a_c, b_c = c[:-1], c[1:]
    d = delta - s2[:-1] - s2[1:]
    return a_s, b_s, a_c, b_c, d


def grad_Hhf(incr: IncrementField | np.ndarray, delta: float, spacing: float | None = None) -> np.ndarray:
    thetas, lam = _unpack(incr, spacing)
    a_s, b_s, a_c, b_c, d = _bond_parts(thetas, delta)
    diff = b_s - a_s
    da = -4.0 * d * a_s - 2.0 * diff * a_c
    db = -4.0 * d * b_s + 2.0 * diff * b_c
    g = np.zeros_like(thetas)
    g[:-1] += da
    g[1:] += db
    return 0.5 * lam * g


def hess_Hhf(incr: IncrementField | np.ndarray, delta: float, spacing: float | None = None):
    """Tridiagonal Hessian as ``(diagonal, superdiagonal)``."""
    thetas, lam = _unpack(incr, spacing)
    a_s, b_s, a_c, b_c, d = _bond_parts(thetas, delta)
    diff = b_s - a_s
    aa = 2.0 * a_s * a_s - 4.0 * d * a_c + 2.0 * a_c * a_c + 2.0 * diff * a_s
    bb = 2.0 * b_s * b_s - 4.0 * d * b_c + 2.0 * b_c * b_c - 2.0 * diff * b_s
    ab = 2.0 * a_s * b_s - 2.0 * a_c * b_c
    diag = np.zeros_like(thetas)
    diag[:-1] += aa
    diag[1:] += bb
    return 0.5 * lam * diag, 0.5 * lam * ab


def _unpack(incr, spacing):
    if isinstance(incr, IncrementField):
        return incr.thetas, incr.spacing
    if spacing is None:
        raise DomainError("spacing required for raw increment arrays")
    return np.asarray(incr, dtype=float), spacing


# --- generic engine ---------------------------------------------------------


class Objective(NamedTuple):
    energy: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], tuple] | None = None


@dataclass
class Trace:
    rows: list = field(default_factory=list)

    def record(self, it, energy, grad_norm, step):
        self.rows.append((it, energy, grad_norm, step))

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["iter", "energy", "grad_norm", "step"])
        for it, e, g, s in self.rows:
            out.writerow([it, format(e, ".17g"), format(g, ".17g"), format(s, ".17g")])
        return buf.getvalue()


def _newton_direction(hessian, x, g, free_idx):
    diag, off = hessian(x)
    dsub = diag[free_idx]
    adjacent = free_idx[1:] == free_idx[:-1] + 1
    osub = np.where(adjacent, off[np.minimum(free_idx[:-1], off.size - 1)], 0.0)
    rhs = -g[free_idx]
    scale = max(float(np.max(np.abs(dsub))), np.finfo(float).tiny)
    shift = 0.0
    for _ in range(40):
        ab = np.zeros((2, dsub.size))
        ab[0, 1:] = osub
        ab[1, :] = dsub + shift
        try:
            return solveh_banded(ab, rhs, check_finite=False)
        except LinAlgError:
            shift = 1e-10 * scale if shift == 0.0 else 10.0 * shift
    return rhs


def minimize_local(
    objective: Objective,
    x0: np.ndarray,
    free: np.ndarray,
    settings: OptimizerSettings,
    tolerance: float,
    trace: Trace | None = None,
    monitor: Callable[[float], None] | None = None,
):
    """Descent with Armijo backtracking on the ``free`` coordinates of ``x0``.

    Returns ``(x, energy, iterations, converged, status, grad_norm)``.
    Status is ``"converged"``, ``"max_iterations"`` or ``"stalled"``: either
    no step along the search direction lowers the energy, or several steps in
    a row changed it by round-off only.
    """
    x = np.array(x0, dtype=float)
    free_idx = np.nonzero(free)[0]
    f = objective.energy(x)
    g = objective.gradient(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericalFailure("non-finite energy or gradient", 0)
    gnorm = float(np.max(np.abs(g[free_idx]))) if free_idx.size else 0.0
    if trace is not None:
        trace.record(0, f, gnorm, 0.0)
    step = settings.initial_step
    newton = settings.method == "newton" and objective.hessian is not None
    it = 0
    flat = 0
    status = "converged"
    while gnorm > tolerance:
        if it >= settings.max_iterations:
            status = "max_iterations"
            break
        it += 1
        if newton:
            d_free = _newton_direction(objective.hessian, x, g, free_idx)
            alpha = 1.0
        else:
            d_free = -g[free_idx]
            alpha = step
        slope = float(np.dot(g[free_idx], d_free))
        if slope >= 0.0:
            d_free = -g[free_idx]
            slope = -float(np.dot(d_free, d_free))
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            trial = x.copy()
            trial[free_idx] += alpha * d_free
            f_new = objective.energy(trial)
            if not np.isfinite(f_new):
                raise NumericalFailure("non-finite energy in line search", it)
            if f_new <= f + ARMIJO * alpha * slope:
                accepted = True
                break
            alpha *= settings.backtracking
        if not accepted:
            status = "stalled"
            it -= 1
            break
        assert f_new <= f, "accepted step increased the energy"
        flat = flat + 1 if f - f_new <= FLOOR_ULPS * np.finfo(float).eps * abs(f) else 0
        x, f = trial, f_new
        g = objective.gradient(x)
        if not np.all(np.isfinite(g)):
            raise NumericalFailure("non-finite gradient", it)
        gnorm = float(np.max(np.abs(g[free_idx])))
        if trace is not None:
            trace.record(it, f, gnorm, alpha)
        if monitor is not None:
            monitor(f)
        step = alpha / settings.backtracking
        if flat >= FLOOR_STEPS and gnorm > tolerance:
            status = "stalled"
            break
    return x, f, it, status == "converged", status, gnorm


# --- descent on the spin chain ----------------------------------------------


def random_increments(spacing: float, delta: float, seed: int = 0) -> IncrementField:
    """Uniform draws from ``[-2 sqrt(2 delta), 2 sqrt(2 delta)]``."""
    rng = np.random.default_rng(seed)
    r = 2.0 * math.sqrt(2.0 * delta)
    return IncrementField.wrapped(rng.uniform(-r, r, lattice_size(spacing)), spacing)


def hhf_objective(delta: float, spacing: float) -> Objective:
    def energy(t):
        return float(np.sum(0.5 * spacing * hhf_bond_terms(t, delta)))

    return Objective(
        energy,
        lambda t: grad_Hhf(t, delta, spacing),
        lambda t: hess_Hhf(t, delta, spacing),
    )


def descend(
    start: IncrementField,
    delta: float,
    clamp: Clamp = NO_CLAMP,
    settings: OptimizerSettings | None = None,
    trace: Trace | None = None,
) -> DescentResult:
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    settings = settings or OptimizerSettings()
    lam = start.spacing
    n = len(start)
    tol = settings.gradient_tolerance if settings.gradient_tolerance is not None else 1e-10 * lam
    x0 = np.array(start.thetas)
    free = np.ones(n, dtype=bool)
    if clamp.head_increments or clamp.tail_increments:
        idx, vals = clamp.resolve(n)
        x0[idx] = vals
        free[idx] = False
    x, _, it, ok, status, gnorm = minimize_local(
        hhf_objective(delta, lam), x0, free, settings, tol, trace
    )
    incr = IncrementField.wrapped(x, lam)
    return DescentResult(incr, reduced_Hhf(incr, delta), it, ok, status, gnorm)


# --- exhaustive oracle ------------------------------------------------------


def _min_plus(a: np.ndarray, b: np.ndarray, chunk: int = 8) -> np.ndarray:
    out = np.empty((a.shape[0], b.shape[1]))
    for r in range(0, a.shape[0], chunk):
        out[r : r + chunk] = np.min(a[r : r + chunk, :, None] + b[None, :, :], axis=1)
    return out


def brute_force_min(n_sites: int, params: ModelParams, grid_points: int):
    """Exact minimum of the lattice energy over the increment grid
    ``-pi + 2 pi k / grid_points`` subject to the boundary condition.

    The energy is a chain of bond costs, so the exhaustive minimum is taken
    by min-plus dynamic programming instead of listing every tuple. Returns
    ``(min_energy, argmin IncrementField)``.
    """
    if n_sites > 6:
        raise DomainError("brute force is limited to n_sites <= 6")
    if n_sites < 3:
        raise DomainError("need at least 3 sites")
    if grid_points < 8:
        raise DomainError("grid_points must be at least 8")
    m = n_sites - 1
    if lattice_size(params.spacing) != m:
        raise DomainError(f"spacing {params.spacing!r} does not describe a chain of {n_sites} sites")
    G = grid_points
    grid = -np.pi + 2.0 * np.pi * np.arange(G) / G
    # bond cost of the pair (theta^i, theta^{i+1}); its first index carries the NN term
    cost = -params.j1 * np.cos(grid)[:, None] + np.cos(grid[:, None] + grid[None, :])
    # |theta^0| = |theta^{m-1}|; -grid[k] is grid[G-k], and -pi pairs with itself
    partner = (G - np.arange(G)) % G

    bonds = m - 1
    if bonds == 1:
        both = np.stack([np.diag(cost), cost[np.arange(G), partner]])
    else:
        paths = cost
        for _ in range(bonds - 2):
            paths = _min_plus(paths, cost)
        # paths[a, y] = cheapest route theta^0 = a ... theta^{m-2} = y
        close_same = np.min(paths + cost.T, axis=1)
        close_part = np.min(paths + cost[:, partner].T, axis=1)
        both = np.stack([close_same, close_part])
    k = np.unravel_index(np.argmin(both), both.shape)
    which, a = int(k[0]), int(k[1])
    best = float(both[which, a]) * params.spacing
    last = a if which == 0 else int(partner[a])

    # backtrack one optimal path from a to last
    idx = [a]
    for j in range(1, m - 1):
        tails = _tail_costs(cost, last, bonds - j)
        idx.append(int(np.argmin(cost[idx[-1]] + tails)))
    idx.append(last)
    return best, IncrementField(grid[np.array(idx)], params.spacing)


def _tail_costs(cost, last, bonds):
    """Cheapest cost from each grid index to ``last`` using ``bonds`` bonds."""
    t = cost[:, last].copy()
    for _ in range(bonds - 1):
        t = np.min(cost + t[None, :], axis=1)
    return t


# --- a-priori bound ---------------------------------------------------------


class AprioriResult(NamedTuple):
    ok: bool
    worst_bond: int
    deviation: float
    bound: float


def apriori_constant(chain: SpinChain, params: ModelParams, mu: float) -> float:
    """Smallest ``C`` with ``H(chain) <= C * spacing * mu``."""
    return energy_H(chain, params) / (chain.spacing * mu)


def apriori_check(chain: SpinChain, params: ModelParams, mu: float, c_bound: float) -> AprioriResult:
    """Check ``|j1/4 - (u^i, u^{i+1})| <= sqrt(C)(2/j1 + 1/2) mu^{1/2}`` on every bond."""
    if mu <= 0 or c_bound <= 0:
        raise DomainError("mu and c_bound must be positive")
    h = energy_H(chain, params)
    limit = c_bound * chain.spacing * mu
    if h > limit * (1.0 + 1e-12):
        raise PreconditionError(
            f"energy H = {h!r} exceeds C*spacing*mu = {limit!r}; a-priori bound does not apply"
        )
    u = chain.spins
    dots = np.sum(u[:-1] * u[1:], axis=1)
    dev = np.abs(params.j1 / 4.0 - dots)
    bound = math.sqrt(c_bound) * (2.0 / params.j1 + 0.5) * math.sqrt(mu)
    worst = int(np.argmax(dev))
    return AprioriResult(bool(dev[worst] <= bound), worst, float(dev[worst]), bound)
