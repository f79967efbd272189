"""Time series produced by an evolution, and the scattering classifier acting on them."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .exponents import ExponentSet
from .grid import Field

CSV_COLUMNS = ("t", "mass", "energy", "lgamma", "weighted", "spacetime_accum")

FLAG_NAMES = ("blowup", "domain_compromised", "resolution_compromised")


@dataclass
class TrajectoryRecord:
    """Diagnostics sampled along one run.

    ``spacetime_accum[k]`` is the running trapezoid value of
    ``∫_0^{t_k} ‖u(t)‖_γ^ρ dt`` (the ρ-th power of the space-time norm).
    """

    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    lgamma_norm: np.ndarray
    weighted: np.ndarray
    spacetime_accum: np.ndarray
    ell_initial: float
    rho: float
    flags: dict[str, bool] = field(default_factory=lambda: dict.fromkeys(FLAG_NAMES, False))
    flag_reason: str = ""
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    final: Optional[Field] = None
    lens: float = 0.0

    @property
    def flagged(self) -> bool:
        return any(self.flags.values())

    @property
    def horizon(self) -> float:
        return float(self.times[-1]) if len(self.times) else 0.0

    def mass_drift(self) -> float:
        m0 = self.mass[0]
        if m0 == 0:
            return float(np.max(np.abs(self.mass)))
        return float(np.max(np.abs(self.mass - m0)) / m0)

    def energy_drift(self) -> float:
        e0 = self.energy[0]
        scale = abs(e0) if e0 != 0 else 1.0
        return float(np.max(np.abs(self.energy - e0)) / scale)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in zip(self.times, self.mass, self.energy, self.lgamma_norm,
                           self.weighted, self.spacetime_accum):
                w.writerow([repr(float(v)) for v in row])


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected trajectory header {header}")
        rows = np.array([[float(v) for v in row] for row in r])
    if rows.size == 0:
        rows = rows.reshape(0, len(CSV_COLUMNS))
    return {name: rows[:, i] for i, name in enumerate(CSV_COLUMNS)}


def running_spacetime(times: np.ndarray, lgamma: np.ndarray, rho: float) -> np.ndarray:
    """Cumulative trapezoid of ``lgamma**rho`` over ``times``."""
    g = np.asarray(lgamma, dtype=float) ** rho
    out = np.zeros(len(times))
    if len(times) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(times) * (g[1:] + g[:-1]))
    return out


def spacetime_norm(traj: TrajectoryRecord, exps: ExponentSet) -> float:
    """``‖u‖_{L^ρ((0,T), L^γ)}`` over the recorded window."""
    acc = running_spacetime(traj.times, traj.lgamma_norm, exps.rho)
    return float(acc[-1] ** (1.0 / exps.rho)) if len(acc) else 0.0


class Verdict(str, enum.Enum):
    SCATTER = "Scatter"
    NON_SCATTER = "NonScatter"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class ClassifierPolicy:
    """Thresholds for reading a scattering verdict off ``‖u(t)‖_γ``.

    The fit uses the part of the window after ``max(transient, 1 - fit_fraction)·T``.
    Scatter needs the fitted log-log slope at or below ``-δ(γ) + margin``;
    NonScatter needs it at or above ``-1/ρ + margin`` and the norm to stay above
    ``floor_fraction`` times its window median.
    """

    margin: float = 0.15
    min_horizon: float = 50.0
    fit_fraction: float = 0.5
    transient_fraction: float = 0.2
    floor_fraction: float = 0.25
    confidence: float = 0.95


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    tail_slope: float
    slope_ci: tuple[float, float]
    window: tuple[float, float]
    reason: str = ""


def classify(traj: TrajectoryRecord, exps: ExponentSet,
             policy: ClassifierPolicy = ClassifierPolicy()) -> Classification:
    nan = float("nan")
    T = traj.horizon
    if traj.flagged:
        names = [k for k, v in traj.flags.items() if v]
        return Classification(Verdict.UNDETERMINED, nan, (nan, nan), (0.0, T),
                              f"trajectory flagged: {', '.join(names)} {traj.flag_reason}".strip())
    if len(traj.lgamma_norm) and np.all(traj.lgamma_norm == 0):
        return Classification(Verdict.SCATTER, nan, (nan, nan), (0.0, T),
                              "degenerate: zero data scatters trivially")
    if T < policy.min_horizon * (1 - 1e-9):
        return Classification(Verdict.UNDETERMINED, nan, (nan, nan), (0.0, T),
                              f"horizon {T:g} below minimum {policy.min_horizon:g}")
    start = max(policy.transient_fraction, 1.0 - policy.fit_fraction) * T
    sel = (traj.times >= start) & (traj.times > 0)
    t, g = traj.times[sel], traj.lgamma_norm[sel]
    window = (float(t[0]), float(t[-1])) if len(t) else (start, T)
    if len(t) < 3:
        return Classification(Verdict.UNDETERMINED, nan, (nan, nan), window,
                              "too few samples in the fit window")
    if np.any(g <= 0):
        return Classification(Verdict.UNDETERMINED, nan, (nan, nan), window,
                              "non-positive L^gamma samples in the fit window")
    fit = stats.linregress(np.log(t), np.log(g))
    q = stats.t.ppf(0.5 + 0.5 * policy.confidence, len(t) - 2)
    ci = (fit.slope - q * fit.stderr, fit.slope + q * fit.stderr)
    scatter_cut = -exps.delta_gamma + policy.margin
    nonscatter_cut = -1.0 / exps.rho + policy.margin
    floor_ok = g.min() >= policy.floor_fraction * np.median(g)
    if fit.slope <= scatter_cut:
        verdict, why = Verdict.SCATTER, f"slope {fit.slope:.4f} <= {scatter_cut:.4f}"
    elif fit.slope >= nonscatter_cut and floor_ok:
        verdict, why = Verdict.NON_SCATTER, f"slope {fit.slope:.4f} >= {nonscatter_cut:.4f}, floor held"
    else:
        verdict = Verdict.UNDETERMINED
        why = (f"slope {fit.slope:.4f} between {scatter_cut:.4f} and {nonscatter_cut:.4f}"
               if fit.slope < nonscatter_cut else "L^gamma floor violated")
    return Classification(verdict, float(fit.slope), (float(ci[0]), float(ci[1])), window, why)
