"""Experiment orchestration: configuration, persistence and the threshold experiments.

A run is fully described by an :class:`ExperimentConfig`; its hash (over the
canonical sorted-key JSON of every input that influences the numbers) names
the run directory and makes re-runs byte-reproducible.
"""
from __future__ import annotations

import dataclasses
import datetime as _dt
import hashlib
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .diagnostics import (chirped_free_spacetime_norm, decay_ratio_curve, negative_energy_margin,
                          orthogonal_splitting_defect)
from .exponents import (PhysParams, exponent_set, strauss_exponent, validate_window)
from .functionals import ell, energy, mass
from .grid import Field, Grid, write_snapshot, weighted_norm
from .groundstate import petviashvili_solve, soliton_closed_form_1d
from .propagator import (StepperConfig, apply_J, apply_J_gauge, evolve, free_propagate)
from .trajectory import (Classification, ClassifierPolicy, TrajectoryRecord, Verdict, classify)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Configuration document is malformed or inconsistent."""


class BracketInvalidError(RuntimeError):
    """Bisection endpoints do not classify as (Scatter, NonScatter)."""


class NonNegativeEnergyError(ValueError):
    """The negative-energy witness was handed data with ``E >= 0``."""


# -- configuration --------------------------------------------------------------------------

FAMILY_KINDS = ("scaled_ground_state", "chirped", "gaussian")


@dataclass(frozen=True)
class GridSpec:
    points: int = 8192
    extent: float = 2048.0

    def build(self, dim: int) -> Grid:
        return Grid(dim, int(self.points), float(self.extent))


@dataclass(frozen=True)
class FamilySpec:
    """``amplitude · e^{i chirp |x|²} · base (+ noise)``.

    ``base`` is the ground state for ``scaled_ground_state``, the Gaussian
    ``exp(-|x|²/2 width²)`` for ``gaussian``, and chosen by ``chirped_base``
    for ``chirped``.
    """

    kind: str = "scaled_ground_state"
    amplitude: float = 1.0
    chirp: float = 0.0
    width: float = 1.0
    chirped_base: str = "scaled_ground_state"
    ground_state: str = "petviashvili"
    noise: float = 0.0

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ConfigError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")
        if self.chirped_base not in ("scaled_ground_state", "gaussian"):
            raise ConfigError(f"chirped_base must be scaled_ground_state or gaussian")
        if self.ground_state not in ("petviashvili", "closed_form"):
            raise ConfigError("ground_state must be petviashvili or closed_form")
        if self.amplitude < 0:
            raise ConfigError("family amplitude must be non-negative")
        if not self.width > 0:
            raise ConfigError("gaussian width must be positive")

    @property
    def base_kind(self) -> str:
        return self.chirped_base if self.kind == "chirped" else self.kind


@dataclass(frozen=True)
class BisectionSpec:
    c_lo: float = 0.05
    c_hi: float = 1.0
    budget: int = 12

    def __post_init__(self):
        if not 0 < self.c_lo < self.c_hi:
            raise ConfigError("bisection needs 0 < c_lo < c_hi")
        if self.budget < 0:
            raise ConfigError("bisection budget must be non-negative")


@dataclass(frozen=True)
class SweepSpec:
    """Chirp grid for the oscillation sweep.

    Runs with ``|b| >= lens_min_abs_b`` use the pseudo-conformal frame with
    ``β = |b|`` on the smaller ``lens_grid``; the rest use the main grid.
    """

    b_values: tuple = (-8.0, -4.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0, 8.0)
    lens_min_abs_b: float = 1.0
    lens_grid: GridSpec = GridSpec(points=2048, extent=40.0)
    norm_tolerance: float = 0.02


@dataclass(frozen=True)
class RetrySpec:
    """Reaction to a flagged run: double the box on domain compromise (same spacing),
    double the points on resolution compromise."""

    max_retries: int = 2
    grow_box: bool = True
    refine: bool = True


@dataclass(frozen=True)
class Theorem2Spec:
    scan: tuple = (0.99, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.6, 0.55, 0.5)


_STEPPER_DEFAULTS = dict(dt=1e-3, t_final=50.0, snapshot_stride=500)


@dataclass(frozen=True)
class ExperimentConfig:
    params: PhysParams = PhysParams(1, 4.0)
    grid: GridSpec = GridSpec()
    stepper: StepperConfig = StepperConfig(**_STEPPER_DEFAULTS)
    policy: ClassifierPolicy = ClassifierPolicy()
    family: FamilySpec = FamilySpec()
    bisection: BisectionSpec = BisectionSpec()
    sweep: SweepSpec = SweepSpec()
    retry: RetrySpec = RetrySpec()
    theorem2: Theorem2Spec = Theorem2Spec()
    seed: int = 0
    # also classify t -> -t (via conj(u0)); a verdict of Scatter then needs both directions
    negative_time: bool = False
    name: str = "run"
    snapshots: bool = True
    workers: int = 1

    # keys that do not influence any number produced by a run
    _NON_HASHED = ("name", "snapshots", "workers")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw: dict[str, Any] = {}
        try:
            if "params" in doc:
                kw["params"] = _build(PhysParams, doc["params"], "params")
            if "grid" in doc:
                kw["grid"] = _build(GridSpec, doc["grid"], "grid")
            if "stepper" in doc:
                kw["stepper"] = _build(StepperConfig, {**_STEPPER_DEFAULTS, **doc["stepper"]}, "stepper")
            if "policy" in doc:
                kw["policy"] = _build(ClassifierPolicy, doc["policy"], "policy")
            if "family" in doc:
                kw["family"] = _build(FamilySpec, doc["family"], "family")
            if "bisection" in doc:
                kw["bisection"] = _build(BisectionSpec, doc["bisection"], "bisection")
            if "sweep" in doc:
                sw = dict(doc["sweep"])
                if "lens_grid" in sw:
                    sw["lens_grid"] = _build(GridSpec, sw["lens_grid"], "sweep.lens_grid")
                if "b_values" in sw:
                    sw["b_values"] = tuple(float(b) for b in sw["b_values"])
                kw["sweep"] = _build(SweepSpec, sw, "sweep")
            if "retry" in doc:
                kw["retry"] = _build(RetrySpec, doc["retry"], "retry")
            if "theorem2" in doc:
                t2 = dict(doc["theorem2"])
                if "scan" in t2:
                    t2["scan"] = tuple(float(c) for c in t2["scan"])
                kw["theorem2"] = _build(Theorem2Spec, t2, "theorem2")
            for key in ("seed", "negative_time", "name", "snapshots", "workers"):
                if key in doc:
                    kw[key] = doc[key]
            cfg = cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if self.params.dim not in (1, 2):
            raise ConfigError("only dimensions 1 and 2 are supported")
        try:
            self.grid.build(self.params.dim)
            self.sweep.lens_grid.build(self.params.dim)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.family.ground_state == "closed_form" and self.params.dim != 1:
            raise ConfigError("closed-form ground state exists only in one dimension")

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def config_hash(self) -> str:
        doc = {k: v for k, v in self.to_dict().items() if k not in self._NON_HASHED}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def with_family(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, family=dataclasses.replace(self.family, **changes))


def _build(cls, doc, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    doc = dict(doc)
    for f in dataclasses.fields(cls):
        # 4 and 4.0 must hash alike
        v = doc.get(f.name)
        if f.type == "float" and isinstance(v, int) and not isinstance(v, bool):
            doc[f.name] = float(v)
    try:
        return cls(**doc)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _plain(obj):
    """JSON-ready copy: tuples to lists, numpy scalars to floats, non-finite to None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Verdict):
        return obj.value
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def dump_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(_plain(doc), fh, sort_keys=True, indent=2)
        fh.write("\n")


# -- initial data -----------------------------------------------------------------------------

@lru_cache(maxsize=16)
def ground_state(params: PhysParams, grid: Grid, method: str = "petviashvili") -> Field:
    """Cached ground state ``Q`` (``ω = 1``) on ``grid``."""
    if method == "closed_form":
        return soliton_closed_form_1d(params.power, 1.0, grid)
    res = petviashvili_solve(params, grid)
    if not res.converged:
        raise RuntimeError(f"ground state did not converge (residual {res.residual_norm:.2e})")
    return res.profile


def base_profile(cfg: ExperimentConfig, grid: Grid) -> Field:
    fam = cfg.family
    if fam.base_kind == "scaled_ground_state":
        return ground_state(cfg.params, grid, fam.ground_state)
    w2 = fam.width ** 2
    return Field(grid, np.exp(-0.5 * grid.radius_sq / w2))


def initial_data(cfg: ExperimentConfig, grid: Grid) -> Field:
    fam = cfg.family
    vals = fam.amplitude * base_profile(cfg, grid).values
    if fam.chirp:
        vals = vals * np.exp(1j * fam.chirp * grid.radius_sq)
    if fam.noise:
        rng = np.random.default_rng(cfg.seed)
        z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        zh = sfft.fftn(z)
        zh[np.sqrt(grid.ksq) > grid.kmax / 4] = 0
        bump = np.exp(-0.5 * grid.radius_sq)
        z = sfft.ifftn(zh) * bump
        vals = vals + fam.noise * z / max(np.abs(z).max(), 1e-300)
    return Field(grid, vals)


# -- single runs --------------------------------------------------------------------------------

@dataclass
class RunRecord:
    config_hash: str
    classification: Classification
    verdict: Verdict
    summary: dict
    grid_used: dict
    attempts: list
    started: str
    finished: str
    degenerate: bool = False
    backward: Optional[Classification] = None
    run_dir: Optional[str] = None
    trajectory_csv: Optional[str] = None
    trajectory: Optional[TrajectoryRecord] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        doc = {k: getattr(self, k) for k in ("config_hash", "summary", "grid_used", "attempts",
                                             "started", "finished", "degenerate", "run_dir",
                                             "trajectory_csv")}
        doc["verdict"] = self.verdict.value
        doc["classification"] = _classification_dict(self.classification)
        doc["backward"] = _classification_dict(self.backward) if self.backward else None
        return _plain(doc)


def _classification_dict(c: Classification) -> dict:
    return {"verdict": c.verdict.value, "tail_slope": c.tail_slope,
            "slope_ci": list(c.slope_ci), "window": list(c.window), "reason": c.reason}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _combine(fwd: Verdict, bwd: Verdict) -> Verdict:
    if Verdict.NON_SCATTER in (fwd, bwd):
        return Verdict.NON_SCATTER
    if fwd == bwd == Verdict.SCATTER:
        return Verdict.SCATTER
    return Verdict.UNDETERMINED


def _evolve_with_retries(cfg: ExperimentConfig, keep_snapshots: bool, conjugate: bool = False):
    grid = cfg.grid.build(cfg.params.dim)
    attempts = []
    for attempt in range(cfg.retry.max_retries + 1):
        u0 = initial_data(cfg, grid)
        if conjugate:
            u0 = u0.conj()
        snaps: list = []
        hook = (lambda f, t: snaps.append((t, f))) if keep_snapshots else None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            traj = evolve(u0, cfg.stepper, cfg.params, on_sample=hook)
        attempts.append({"points": grid.points, "extent": grid.extent,
                         "flags": dict(traj.flags), "reason": traj.flag_reason})
        if attempt == cfg.retry.max_retries:
            break
        if traj.flags["domain_compromised"] and cfg.retry.grow_box:
            grid = Grid(grid.dim, 2 * grid.points, 2 * grid.extent)
        elif traj.flags["resolution_compromised"] and cfg.retry.refine:
            grid = Grid(grid.dim, 2 * grid.points, grid.extent)
        else:
            break
        log.info("retrying on %d points, extent %g", grid.points, grid.extent)
    return traj, grid, u0, attempts, snaps


def run_simulation(cfg: ExperimentConfig, out_root=None, *, snapshots: Optional[bool] = None,
                   tag: Optional[str] = None) -> RunRecord:
    """Evolve the configured datum, classify it and (if ``out_root``) persist the run.

    The run directory ``<out_root>/runs/<name>-<hash[:12]>`` receives
    ``trajectory.csv``, ``record.json``, ``config.json`` and, when snapshots
    are on, ``snapshots/snap_NNNNN.bin`` for every sample.
    """
    keep = cfg.snapshots if snapshots is None else snapshots
    keep = keep and out_root is not None
    started = _now()
    h = cfg.config_hash()
    exps = _exponents(cfg.params)
    traj, grid, u0, attempts, snaps = _evolve_with_retries(cfg, keep)
    cls = classify(traj, exps, cfg.policy)
    verdict, backward = cls.verdict, None
    if cfg.negative_time:
        traj_b, *_ = _evolve_with_retries(cfg, False, conjugate=True)
        backward = classify(traj_b, exps, cfg.policy)
        verdict = _combine(cls.verdict, backward.verdict)
    degenerate = bool(np.all(u0.values == 0))
    summary = {"mass": mass(u0), "energy": energy(u0, cfg.params), "ell": ell(u0, cfg.params),
               "mass_drift": traj.mass_drift(), "energy_drift": traj.energy_drift(),
               "horizon": traj.horizon, "spacetime_norm": _st_norm(traj)}
    rec = RunRecord(config_hash=h, classification=cls, verdict=verdict, summary=summary,
                    grid_used={"points": grid.points, "extent": grid.extent},
                    attempts=attempts, started=started, finished=_now(), degenerate=degenerate,
                    backward=backward, trajectory=traj)
    if out_root is not None:
        run_dir = Path(out_root) / "runs" / f"{tag or cfg.name}-{h[:12]}"
        run_dir.mkdir(parents=True, exist_ok=True)
        csv_path = run_dir / "trajectory.csv"
        traj.write_csv(csv_path)
        if keep:
            sdir = run_dir / "snapshots"
            sdir.mkdir(exist_ok=True)
            for k, (_, f) in enumerate(snaps):
                write_snapshot(sdir / f"snap_{k:05d}.bin", f)
        elif traj.final is not None:
            write_snapshot(run_dir / "final.bin", traj.final)
        rec.run_dir, rec.trajectory_csv = str(run_dir), str(csv_path)
        dump_json(run_dir / "config.json", cfg.to_dict())
        dump_json(run_dir / "record.json", rec.to_dict())
    return rec


def _st_norm(traj: TrajectoryRecord) -> float:
    acc = traj.spacetime_accum
    return float(acc[-1] ** (1.0 / traj.rho)) if len(acc) else 0.0


def _exponents(params: PhysParams):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return exponent_set(params)


def _probe(args) -> RunRecord:
    cfg, out_root, tag = args
    rec = run_simulation(cfg, out_root, snapshots=False, tag=tag)
    rec.trajectory = None
    return rec


def _map_runs(jobs: Sequence[tuple], workers: int) -> list[RunRecord]:
    """Run probes, possibly in worker processes; results come back in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_probe(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_probe, jobs))


# -- ground state ----------------------------------------------------------------------------------

def solve_ground_state(cfg: ExperimentConfig, out_root=None):
    """Petviashvili solve on the configured grid; persists the profile plus a metadata sidecar."""
    grid = cfg.grid.build(cfg.params.dim)
    res = petviashvili_solve(cfg.params, grid)
    meta = {"p": cfg.params.power, "N": cfg.params.dim, "omega": res.omega,
            "residual": res.residual_norm, "iterations": res.iterations,
            "converged": res.converged, "positive": res.positive, "monotone": res.monotone,
            "energy": energy(res.profile, cfg.params), "ell": ell(res.profile, cfg.params),
            "points": grid.points, "extent": grid.extent}
    if out_root is not None:
        d = Path(out_root)
        d.mkdir(parents=True, exist_ok=True)
        write_snapshot(d / "ground_state.bin", res.profile)
        dump_json(d / "ground_state.json", meta)
    return res, meta


# -- negative-energy witness --------------------------------------------------------------------

@dataclass
class WitnessReport:
    energy0: float
    floor: float
    times: np.ndarray
    margins: np.ndarray
    min_margin: float
    floor_holds: bool
    verdict: Verdict
    record: RunRecord

    @property
    def ok(self) -> bool:
        return self.floor_holds and self.verdict == Verdict.NON_SCATTER


def negative_energy_witness(cfg: ExperimentConfig, out_root=None, tolerance: float = 0.01) -> WitnessReport:
    """Check ``‖u(t)‖_{p+1}^{p+1} >= -(p+1) E[u₀]`` along the run and that it does not scatter."""
    grid = cfg.grid.build(cfg.params.dim)
    e0 = energy(initial_data(cfg, grid), cfg.params)
    if not e0 < 0:
        raise NonNegativeEnergyError(f"E[u0] = {e0:.6g} is not negative")
    rec = run_simulation(cfg, out_root, snapshots=False, tag=f"{cfg.name}-witness")
    traj = rec.trajectory
    margins = negative_energy_margin(traj, e0, cfg.params.power)
    floor = -(cfg.params.power + 1.0) * e0
    return WitnessReport(energy0=e0, floor=floor, times=traj.times, margins=margins,
                         min_margin=float(margins.min()),
                         floor_holds=bool(np.all(margins >= -tolerance)) and not traj.flagged,
                         verdict=rec.verdict, record=rec)


# -- non-minimality demo -------------------------------------------------------------------------

@dataclass
class Theorem2Report:
    ell_ground_state: float
    c0: Optional[float]
    energy_c0: Optional[float]
    ell_c0: Optional[float]
    verdict: Optional[Verdict]
    record: Optional[RunRecord]
    message: str = ""

    @property
    def gap(self) -> float:
        return self.ell_ground_state - self.ell_c0 if self.ell_c0 is not None else math.nan

    @property
    def ok(self) -> bool:
        return (self.c0 is not None and self.c0 < 1 and self.energy_c0 < 0
                and self.verdict == Verdict.NON_SCATTER and self.gap > 0)


def theorem2_demo(cfg: ExperimentConfig, out_root=None) -> Theorem2Report:
    """Exhibit ``c₀ < 1`` with ``E[c₀Q] < 0``, a non-scattering run from ``c₀Q``, and
    ``ℓ(c₀Q) = c₀ ℓ(Q) < ℓ(Q)``."""
    cfg = cfg.with_family(kind="scaled_ground_state", chirp=0.0, noise=0.0)
    grid = cfg.grid.build(cfg.params.dim)
    Q = ground_state(cfg.params, grid, cfg.family.ground_state)
    ell_q = ell(Q, cfg.params)
    for c0 in cfg.theorem2.scan:
        if not 0 < c0 < 1:
            continue
        e = energy(Q * c0, cfg.params)
        if e < 0:
            break
    else:
        return Theorem2Report(ell_q, None, None, None, None, None,
                              "no scanned amplitude below 1 has negative energy")
    run_cfg = cfg.with_family(amplitude=c0)
    rec = run_simulation(run_cfg, out_root, snapshots=False, tag=f"{cfg.name}-c0")
    return Theorem2Report(ell_q, c0, e, ell(Q * c0, cfg.params), rec.verdict, rec,
                          f"c0={c0:g}: {rec.classification.reason}")


# -- threshold bisection --------------------------------------------------------------------------

@dataclass
class Probe:
    c: float
    ell: float
    verdict: Verdict
    tail_slope: float
    run_dir: Optional[str] = None


@dataclass
class ThresholdResult:
    family: dict
    c_lo: float
    c_hi: float
    ell_lo: float
    ell_hi: float
    probes: list
    budget: int
    budget_spent: int
    undetermined_count: int
    ell_ground_state: Optional[float] = None

    @property
    def inconclusive(self) -> bool:
        return self.budget_spent > 0 and 2 * self.undetermined_count > self.budget_spent

    @property
    def eta(self) -> Optional[float]:
        """Gap ``ℓ(Q) - ell_hi`` (scaled-ground-state family only)."""
        if self.ell_ground_state is None:
            return None
        return self.ell_ground_state - self.ell_hi

    @property
    def width(self) -> float:
        return self.c_hi - self.c_lo

    def to_dict(self) -> dict:
        doc = {k: getattr(self, k) for k in ("family", "c_lo", "c_hi", "ell_lo", "ell_hi", "budget",
                                             "budget_spent", "undetermined_count",
                                             "ell_ground_state", "eta", "inconclusive", "width")}
        doc["probes"] = [dict(dataclasses.asdict(p), verdict=p.verdict.value) for p in self.probes]
        return _plain(doc)


def _dyadic_fractions():
    """1/2, 1/4, 3/4, 1/8, 3/8, ...: probe positions inside the bracket."""
    den = 2
    while True:
        for num in range(1, den, 2):
            yield num / den
        den *= 2


def threshold_bisect(cfg: ExperimentConfig, out_root=None) -> ThresholdResult:
    """Bisect the amplitude ``c`` of the configured family between Scatter and NonScatter.

    Because ``ℓ(c f) = c ℓ(f)`` the amplitude bracket is an ℓ bracket.  An
    Undetermined probe costs budget but leaves the bracket alone; the next
    probe then moves to another dyadic point of the same bracket.
    """
    bis = cfg.bisection
    grid = cfg.grid.build(cfg.params.dim)
    ell_unit = ell(initial_data(cfg.with_family(amplitude=1.0, noise=0.0), grid), cfg.params)
    ell_q = None
    if cfg.family.kind == "scaled_ground_state" and cfg.family.chirp == 0:
        ell_q = ell(ground_state(cfg.params, grid, cfg.family.ground_state), cfg.params)

    def job(c):
        return (cfg.with_family(amplitude=float(c)), out_root, f"{cfg.name}-c{c:.8f}")

    def to_probe(c, rec):
        return Probe(float(c), c * ell_unit, rec.verdict, rec.classification.tail_slope, rec.run_dir)

    lo_rec, hi_rec = _map_runs([job(bis.c_lo), job(bis.c_hi)], cfg.workers)
    probes = [to_probe(bis.c_lo, lo_rec), to_probe(bis.c_hi, hi_rec)]
    if lo_rec.verdict != Verdict.SCATTER or hi_rec.verdict != Verdict.NON_SCATTER:
        raise BracketInvalidError(
            f"endpoints classify as ({lo_rec.verdict.value}, {hi_rec.verdict.value}) "
            f"at c = ({bis.c_lo:g}, {bis.c_hi:g}); need (Scatter, NonScatter)")
    c_lo, c_hi = bis.c_lo, bis.c_hi
    spent = undetermined = 0
    stuck: list[float] = []
    while spent < bis.budget:
        c = None
        for frac in _dyadic_fractions():
            cand = c_lo + frac * (c_hi - c_lo)
            if all(abs(cand - u) > 1e-12 for u in stuck):
                c = cand
                break
            if frac < 2.0 ** -30:
                break
        if c is None:
            break
        (rec,) = _map_runs([job(c)], 1)
        spent += 1
        probes.append(to_probe(c, rec))
        log.info("probe c=%.6f -> %s", c, rec.verdict.value)
        if rec.verdict == Verdict.SCATTER:
            c_lo = c
        elif rec.verdict == Verdict.NON_SCATTER:
            c_hi = c
        else:
            undetermined += 1
            stuck.append(c)
        stuck = [u for u in stuck if c_lo < u < c_hi]
    return ThresholdResult(family=_plain(dataclasses.asdict(cfg.family)), c_lo=c_lo, c_hi=c_hi,
                           ell_lo=c_lo * ell_unit, ell_hi=c_hi * ell_unit, probes=probes,
                           budget=bis.budget, budget_spent=spent, undetermined_count=undetermined,
                           ell_ground_state=ell_q)


def ell_c_upper_bound(results: Sequence[ThresholdResult]) -> float:
    """Smallest ``ell_hi`` over conclusive family brackets: an upper estimate of the critical level."""
    vals = [r.ell_hi for r in results if not r.inconclusive]
    if not vals:
        raise ValueError("no conclusive bracket to bound from")
    return min(vals)


# -- oscillation sweep ----------------------------------------------------------------------------------

@dataclass
class SweepEntry:
    b: float
    verdict: Verdict
    tail_slope: float
    lens: float
    free_norm: float
    grid_used: dict
    reason: str = ""


@dataclass
class SweepReport:
    entries: list
    onset: dict
    monotone: dict
    precondition_ok: bool

    @property
    def ok(self) -> bool:
        return (self.precondition_ok and all(v is not None for v in self.onset.values())
                and all(self.monotone.values()))

    def to_dict(self) -> dict:
        return _plain({"entries": [dict(dataclasses.asdict(e), verdict=e.verdict.value)
                                   for e in self.entries],
                       "onset": self.onset, "monotone": self.monotone,
                       "precondition_ok": self.precondition_ok, "ok": self.ok})


def _sweep_config(cfg: ExperimentConfig, b: float) -> ExperimentConfig:
    sub = cfg.with_family(chirp=float(b))
    if abs(b) >= cfg.sweep.lens_min_abs_b and b != 0:
        sub = sub.replace(grid=cfg.sweep.lens_grid,
                          stepper=dataclasses.replace(cfg.stepper, lens=abs(float(b))))
    return sub


def oscillation_sweep(cfg: ExperimentConfig, out_root=None) -> SweepReport:
    """Classify ``e^{ib|x|²}ψ`` across the chirp grid and compare with the free-flow norm."""
    bs = [0.0] + sorted({float(b) for b in cfg.sweep.b_values if b != 0}, key=lambda b: (abs(b), b))
    jobs = [(_sweep_config(cfg, b), out_root, f"{cfg.name}-b{b:+g}") for b in bs]
    recs = _map_runs(jobs, cfg.workers)

    exps = _exponents(cfg.params)
    lens_grid = cfg.sweep.lens_grid.build(cfg.params.dim)
    psi = initial_data(cfg.with_family(chirp=0.0), lens_grid)
    T = cfg.stepper.t_final
    entries = []
    for b, sub, rec in zip(bs, (j[0] for j in jobs), recs):
        entries.append(SweepEntry(b=b, verdict=rec.verdict, tail_slope=rec.classification.tail_slope,
                                  lens=sub.stepper.lens,
                                  free_norm=chirped_free_spacetime_norm(psi, b, exps, T),
                                  grid_used=rec.grid_used, reason=rec.classification.reason))
    base = entries[0]
    onset, monotone = {}, {}
    tol = cfg.sweep.norm_tolerance
    for sign, label in ((1, "positive"), (-1, "negative")):
        side = [e for e in entries[1:] if np.sign(e.b) == sign]
        scat = [abs(e.b) for e in side if e.verdict == Verdict.SCATTER]
        onset[label] = min(scat) if scat else None
        norms = [base.free_norm] + [e.free_norm for e in side]
        monotone[label] = all(n1 <= n0 * (1 + tol) for n0, n1 in zip(norms, norms[1:]))
    return SweepReport(entries, onset, monotone, base.verdict == Verdict.NON_SCATTER)


# -- verification suites ---------------------------------------------------------------------------------

@dataclass
class Check:
    label: str
    passed: bool
    value: float
    bound: float


@dataclass
class VerifyReport:
    name: str
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {self.name}.{c.label} value={c.value:.3e} "
                f"bound={c.bound:.3e}" for c in self.checks]


def _window_samples(dim: int, n: int = 5) -> np.ndarray:
    lo, hi = strauss_exponent(dim), 1.0 + 4.0 / dim
    return lo + (hi - lo) * (np.arange(1, n + 1) / (n + 1))


def _suite_exponents() -> list[Check]:
    out = []
    for n in (1, 2, 3):
        ps = strauss_exponent(n)
        root = abs(n * ps * ps - (n + 2) * ps - 2)
        out.append(Check(f"N{n}.strauss_root", root <= 1e-10, root, 1e-10))
        for p in _window_samples(n):
            e = exponent_set(PhysParams(n, float(p)))
            rho_rel = abs(e.rho - p * e.rho_tilde / (e.rho_tilde - 1))
            gam_rel = abs(e.gamma - p * e.gamma_tilde / (e.gamma_tilde - 1))
            rd = e.rho * e.delta_gamma
            tag = f"N{n}.p{p:.4f}"
            out.append(Check(f"{tag}.rho_relation", rho_rel <= 1e-10, rho_rel, 1e-10))
            out.append(Check(f"{tag}.gamma_relation", gam_rel <= 1e-10, gam_rel, 1e-10))
            out.append(Check(f"{tag}.rho_delta_band", 1 < rd < 2, rd, 2.0))
            out.append(Check(f"{tag}.window", validate_window(PhysParams(n, float(p))).ok, 0.0, 0.0))
    return out


def _gaussian(grid: Grid) -> Field:
    return Field.from_function(grid, lambda *xs: np.exp(-0.5 * sum(x * x for x in xs)))


def _suite_decay() -> list[Check]:
    exps = exponent_set(PhysParams(1, 4.0))
    G = _gaussian(Grid(1, 1024, 40.0))
    curve = decay_ratio_curve(G, exps, np.linspace(0.5, 50.0, 200))
    return [Check("ratio_sup", bool(curve.max() <= 5.0), float(curve.max()), 5.0),
            Check("ratio_positive", bool(curve.min() > 0), float(curve.min()), 0.0)]


def _suite_jt() -> list[Check]:
    g = Grid(1, 1024, 40.0)
    G = _gaussian(g)
    xn = weighted_norm(G)
    worst = 0.0
    for t in (0.5, 1.0, 2.0, -1.5):
        (jf,) = apply_J(free_propagate(G, t), t)
        worst = max(worst, abs(math.sqrt(g.cell_volume * np.sum(np.abs(jf.values) ** 2)) - xn))
    f = Field(g, G.values * np.exp(0.5j * g.axis))
    (a,), (b,) = apply_J(f, 1.0), apply_J_gauge(f, 1.0)
    inner = np.abs(g.axis) < g.extent / 4
    gauge = float(np.max(np.abs(a.values - b.values)[inner]))
    return [Check("free_flow_invariance", worst <= 1e-10, worst, 1e-10),
            Check("gauge_form", gauge <= 1e-7, gauge, 1e-7)]


def _suite_pythagoras() -> list[Check]:
    g = Grid(1, 16384, 16.0 * math.pi)
    G = _gaussian(g)
    out = []
    for s in (0.0, 0.5, 1.0):
        d = [orthogonal_splitting_defect([G, G], [0.0, xi], s) for xi in (4.0, 16.0, 64.0)]
        out.append(Check(f"s{s:g}.sep64", d[2] <= 1e-3, d[2], 1e-3))
        mono = d[0] > d[1] and d[1] >= d[2] - 1e-12
        out.append(Check(f"s{s:g}.monotone", mono, d[1] - d[0], 0.0))
    return out


def _suite_conservation() -> list[Check]:
    params = PhysParams(1, 4.0)
    g = Grid(1, 1024, 40.0)
    Q = soliton_closed_form_1d(4.0, 1.0, g)
    traj = evolve(Q, StepperConfig(dt=1e-3, t_final=5.0, snapshot_stride=100), params)
    md, ed = traj.mass_drift(), traj.energy_drift()
    return [Check("mass_drift", md <= 1e-10, md, 1e-10),
            Check("energy_drift", ed <= 1e-6, ed, 1e-6),
            Check("clean", not traj.flagged, float(traj.flagged), 0.0)]


SUITES: dict[str, Callable[[], list[Check]]] = {
    "exponents": _suite_exponents,
    "decay": _suite_decay,
    "jt": _suite_jt,
    "pythagoras": _suite_pythagoras,
    "conservation": _suite_conservation,
}


def verify_suite(name: str) -> VerifyReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return VerifyReport(name, SUITES[name]())
