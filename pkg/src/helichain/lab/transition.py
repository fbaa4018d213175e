"""Chirality-transition experiments across the three scaling regimes."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..chirality import ChiralityField, jump_count, order_parameter, profile_fit
from ..errors import DomainError, HelichainError, PreconditionError
from ..minimize import Clamp, OptimizerSettings, descend
from ..spin import IncrementField, SpinChain, lattice_size

L_ZERO_MAX = 0.05
L_FINITE_MAX = 20.0
SWEEP_COLUMNS = ["lambda", "delta", "ratio", "regime", "scaled_energy", "jumps", "center", "width", "iters"]


def ratio(spacing: float, delta: float) -> float:
    """``spacing / sqrt(2 delta)``; the alternative convention
    ``spacing / sqrt(delta)`` is this times sqrt(2)."""
    return spacing / math.sqrt(2.0 * delta)


def classify(r: float) -> str:
    if r < L_ZERO_MAX:
        return "l_zero"
    if r <= L_FINITE_MAX:
        return "l_finite"
    return "l_infinite"


def energy_scale(spacing: float, delta: float) -> float:
    return math.sqrt(2.0) * spacing * delta**1.5


@dataclass(frozen=True)
class ScalingSequence:
    entries: tuple

    def __post_init__(self):
        pairs = tuple((float(a), float(b)) for a, b in self.entries)
        for lam, d in pairs:
            if not (0.0 < lam < 1.0 and 0.0 < d < 1.0):
                raise DomainError(f"entries need lambda, delta in (0, 1), got {(lam, d)}")
        object.__setattr__(self, "entries", pairs)

    @property
    def ratios(self) -> list[float]:
        return [ratio(lam, d) for lam, d in self.entries]

    @property
    def labels(self) -> list[str]:
        return [classify(r) for r in self.ratios]

    def __len__(self):
        return len(self.entries)


@dataclass
class TransitionReport:
    lam: float
    delta: float
    ratio: float
    regime: str
    scaled_energy: float
    jumps: int
    center: float | None
    width: float | None
    residual: float | None
    iterations: int
    status: str
    clamp: str
    incr: IncrementField | None = field(default=None, repr=False, compare=False)

    @property
    def order_field(self) -> ChiralityField:
        return order_parameter(SpinChain.from_increments(self.incr), self.delta)

    @property
    def chain(self) -> SpinChain:
        return SpinChain.from_increments(self.incr)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("incr")
        d["lambda"] = d.pop("lam")
        return d

    def row(self) -> dict:
        return {
            "lambda": self.lam,
            "delta": self.delta,
            "ratio": self.ratio,
            "regime": self.regime,
            "scaled_energy": self.scaled_energy,
            "jumps": self.jumps,
            "center": self.center,
            "width": self.width,
            "iters": self.iterations,
        }


def transition_settings(spacing: float, delta: float) -> OptimizerSettings:
    return OptimizerSettings(
        method="newton",
        max_iterations=10_000,
        gradient_tolerance=1e-7 * spacing * delta**1.5,
    )


def step_start(spacing: float, delta: float) -> IncrementField:
    """Sharp chirality switch at x = 1/2: ``-phi`` to the left, ``+phi`` right."""
    phi = math.acos(1.0 - delta)
    x = spacing * np.arange(lattice_size(spacing))
    return IncrementField(np.where(x < 0.5, -phi, phi), spacing)


def transition_energy(
    lam: float,
    delta: float,
    settings: OptimizerSettings | None = None,
    allow_wide: bool = False,
    clamp_width: int = 2,
    threshold: float = 0.5,
) -> TransitionReport:
    """Minimize the renormalized energy with opposite chiralities clamped at
    the two ends and report it in units of ``sqrt(2) lambda delta^{3/2}``."""
    if not (0.0 < lam < 1.0 and 0.0 < delta < 1.0):
        raise DomainError(f"lambda and delta must lie in (0, 1), got {(lam, delta)}")
    r = ratio(lam, delta)
    if r > 0.1 and not allow_wide:
        raise PreconditionError(
            f"transition width ratio {r:.3g} leaves fewer than 10 widths in the chain; pass allow_wide"
        )
    settings = settings or transition_settings(lam, delta)
    res = descend(step_start(lam, delta), delta, Clamp.chirality(delta, clamp_width), settings)
    z = order_parameter(SpinChain.from_increments(res.incr), delta)
    jumps = jump_count(z, threshold)
    center = width = residual = None
    if jump_count(z, 0.5) == 1:
        fit = profile_fit(z)
        center, width, residual = fit.center, fit.width, fit.residual
    return TransitionReport(
        lam=lam,
        delta=delta,
        ratio=r,
        regime=classify(r),
        scaled_energy=res.energy / energy_scale(lam, delta),
        jumps=jumps,
        center=center,
        width=width,
        residual=residual,
        iterations=res.iterations,
        status=res.status,
        clamp=f"first {clamp_width} bonds -phi, last {clamp_width} bonds +phi",
        incr=res.incr,
    )


def liminf_lower_bound(z: ChiralityField, gamma: float = 0.05) -> float:
    """Scaled double-well term plus ``(1 - gamma)`` times the scaled
    gradient term, both summed over ``i = 0..n-2``."""
    lam, d = z.spacing, z.delta
    v = z.z
    well = math.sqrt(2.0 * d) / lam * np.sum(lam * (v[:-1] ** 2 - 1.0) ** 2)
    grad = lam / math.sqrt(2.0 * d) * (1.0 - gamma) * np.sum(lam * ((v[1:] - v[:-1]) / lam) ** 2)
    return float(well + grad)


# --- sweeps -----------------------------------------------------------------


@dataclass
class SweepTable:
    reports: list  # TransitionReport or None per entry
    errors: dict  # entry index -> message

    def trend(self, regime: str) -> str:
        """Direction of scaled energy against ratio within one regime."""
        vals = [r.scaled_energy for r in self.reports if r is not None and r.regime == regime]
        if len(vals) < 2:
            return "n/a"
        diffs = np.diff(vals)
        # kinks far from the clamps cost the same in lattice units, so equal
        # deltas can give values that differ only by round-off
        if np.all(np.abs(diffs) <= 1e-9 * np.max(np.abs(vals))):
            return "flat"
        if np.all(diffs > 0):
            return "increasing"
        if np.all(diffs < 0):
            return "decreasing"
        return "mixed"

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(SWEEP_COLUMNS)
        for rep in self.reports:
            if rep is None:
                continue
            row = rep.row()
            out.writerow([_cell(row[c]) for c in SWEEP_COLUMNS])
        return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _run_entry(args):
    i, lam, d, settings = args
    try:
        return i, transition_energy(lam, d, settings, allow_wide=True), None
    except HelichainError as exc:
        return i, None, f"{type(exc).__name__}: {exc}"


def regime_sweep(seq: ScalingSequence, settings: OptimizerSettings | None = None, workers: int = 1) -> SweepTable:
    r = seq.ratios
    if any(b < a for a, b in zip(r, r[1:])):
        raise PreconditionError("sweep entries must be sorted by ratio")
    jobs = [(i, lam, d, settings) for i, (lam, d) in enumerate(seq.entries)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_entry, jobs))
    else:
        results = [_run_entry(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    return SweepTable([rep for _, rep, _ in results], {i: err for i, _, err in results if err})
