"""Free Schrödinger flow, Strang split-step NLS evolution and the operator J(t).

``free_propagate(f, t)`` is ``e^{itΔ} f`` with symbol ``e^{-i|k|²t}``; the NLS
is ``i u_t + Δu = λ|u|^{p-1} u``.

``evolve`` can run in the physical frame or in a pseudo-conformal ("lens")
frame with parameter ``β > 0``::

    u(t, x) = a^{-N/2} e^{iβ|x|²/a} v(s, x/a),   a = 1 + 4βt,   s = t/a,
    i v_s + Δv = λ a^{2 - N(p-1)/2} |v|^{p-1} v.

Physical time ``[0, ∞)`` maps to ``s ∈ [0, 1/4β)``, so dispersing radiation
stays inside the box.  Diagnostics are mapped back exactly:
``‖u‖_r = a^{-δ(r)} ‖v‖_r`` and ``‖J(t)u(t)‖₂ = ‖J(s)v(s)‖₂``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np
import scipy.fft as sfft

from .exponents import PhysParams, exponent_set
from .functionals import ell
from .grid import (Field, Grid, outer_shell_fraction, spectral_tail_fraction)
from .trajectory import FLAG_NAMES, TrajectoryRecord, running_spacetime

log = logging.getLogger(__name__)


class StepFailure(FloatingPointError):
    """Non-finite values after a step (blow-up suspected)."""


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_final: float
    snapshot_stride: int = 100
    domain_guard: float = 1e-6
    domain_shell: float = 0.1
    # spectral mass allowed in the top `tail_band` of wavenumbers
    resolution_guard: float = 1e-5
    tail_band: float = 0.2
    blowup_factor: float = 1e6
    lens: float = 0.0
    nonlinear: bool = True

    def __post_init__(self):
        if not (self.dt > 0 and self.t_final > 0):
            raise ValueError("dt and t_final must be positive")
        if not self.dt < self.t_final:
            raise ValueError("dt must be smaller than t_final")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")
        if self.lens < 0:
            raise ValueError("lens parameter must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


# -- linear flow ----------------------------------------------------------------

def _free_values(values: np.ndarray, grid: Grid, t: float) -> np.ndarray:
    return sfft.ifftn(np.exp(-1j * grid.ksq * t) * sfft.fftn(values))


def free_propagate(f: Field, t: float) -> Field:
    """``e^{itΔ} f`` on the periodic box (exactly unitary)."""
    if t == 0:
        return f
    return Field(f.grid, _free_values(f.values, f.grid, t))


def far_field_grid(grid: Grid, t: float) -> Grid:
    """Grid on which :func:`free_propagate_far` returns ``e^{itΔ} f``."""
    return Grid(grid.dim, grid.points, 4.0 * np.pi * abs(t) * grid.points / grid.extent)


def free_propagate_far(f: Field, t: float) -> Field:
    """``e^{itΔ} f`` via the factorisation ``M_t D_t F M_t``, on a dilated grid.

    ``e^{itΔ}f(x) = (4πit)^{-N/2} e^{i|x|²/4t} ∫ e^{-ix·y/2t} e^{i|y|²/4t} f(y) dy``.
    The output nodes are ``x = 2t ξ`` with ``ξ`` the FFT frequencies of the input
    grid, so the box grows linearly in ``t`` and nothing wraps around.  Accurate
    once the chirp ``e^{i|y|²/4t}`` is resolved, i.e. ``|t| ≳ L²/(4πM)``.
    """
    if t == 0:
        raise ValueError("far-field representation needs t != 0")
    g = f.grid
    n = g.dim
    m = g.points
    chirp = np.exp(1j * g.radius_sq / (4.0 * t))
    coeff = g.cell_volume * sfft.fftn(chirp * f.values)
    # exp(-i ξ_m y_0) with y_0 = -L/2 gives (-1)^m per axis
    sign = (-1.0) ** np.arange(m)
    for ax in range(n):
        shape = [1] * n
        shape[ax] = m
        coeff = coeff * sign.reshape(shape)
    coeff = sfft.fftshift(coeff)
    out = far_field_grid(g, t)
    pref = (4j * np.pi * t) ** (-n / 2.0)
    vals = pref * np.exp(1j * out.radius_sq / (4.0 * t)) * coeff
    return Field(out, vals)


def far_field_threshold(grid: Grid) -> float:
    """Time beyond which :func:`free_propagate_far` resolves its chirp."""
    return grid.extent ** 2 / (2.0 * np.pi * grid.points)


def free_lp_norm(f: Field, t: float, r: float) -> float:
    """``‖e^{itΔ} f‖_r``, switching to the far-field form for large ``|t|``."""
    from .grid import lp_norm
    if abs(t) <= far_field_threshold(f.grid):
        return lp_norm(free_propagate(f, t), r)
    return lp_norm(free_propagate_far(f, t), r)


# -- nonlinear pieces -------------------------------------------------------------

def _phase_values(values: np.ndarray, weight: float, params: PhysParams) -> np.ndarray:
    amp = np.abs(values) ** (params.power - 1.0)
    return values * np.exp(-1j * params.focusing_sign * weight * amp)


def nonlinear_phase_step(f: Field, dt: float, params: PhysParams) -> Field:
    """Exact flow of ``i u_t = λ|u|^{p-1} u`` for a time ``dt`` (pointwise phase)."""
    if not math.isfinite(dt):
        raise ValueError("dt must be finite")
    return Field(f.grid, _phase_values(f.values, dt, params))


def strang_step(f: Field, dt: float, params: PhysParams) -> Field:
    """Half free step, full nonlinear phase, half free step."""
    g = f.grid
    with np.errstate(over="ignore", invalid="ignore"):
        v = _free_values(f.values, g, 0.5 * dt)
        v = _phase_values(v, dt, params)
        v = _free_values(v, g, 0.5 * dt)
    if not np.all(np.isfinite(v)):
        raise StepFailure("non-finite values after Strang step")
    return Field(g, v)


# -- J(t) ---------------------------------------------------------------------------

def apply_J(f: Field, t: float) -> list[Field]:
    """``J(t) f = e^{itΔ} x e^{-itΔ} f``, one component per axis."""
    back = free_propagate(f, -t)
    return [free_propagate(Field(f.grid, c * back.values), t) for c in f.grid.coords]


def apply_J_gauge(f: Field, t: float) -> list[Field]:
    """``J(t) f = e^{i|x|²/4t} 2it ∇(e^{-i|x|²/4t} f)``; only usable when the chirp is resolved."""
    g = f.grid
    if t == 0:
        return [Field(g, c * f.values) for c in g.coords]
    ph = np.exp(-1j * g.radius_sq / (4.0 * t))
    vh = sfft.fftn(ph * f.values)
    return [Field(g, np.conj(ph) * 2j * t * sfft.ifftn(1j * k * vh)) for k in g.wavenumbers]


def J_norm_values(values: np.ndarray, grid: Grid, t: float) -> float:
    """``‖J(t) u‖₂ = ‖x e^{-itΔ} u‖₂``."""
    back = values if t == 0 else _free_values(values, grid, -t)
    return float(math.sqrt(grid.cell_volume * np.sum(grid.radius_sq * np.abs(back) ** 2)))


# -- lens frame -------------------------------------------------------------------------

def lens_scale(beta: float, t: float) -> float:
    return 1.0 + 4.0 * beta * t


def lens_time(beta: float, t: float) -> float:
    return t / lens_scale(beta, t)


def _lens_phase_integral(beta: float, m: float, t0: float, t1: float) -> float:
    """``∫_{t0}^{t1} (1 + 4βt)^{-m} dt``."""
    a0, a1 = lens_scale(beta, t0), lens_scale(beta, t1)
    if abs(m - 1.0) < 1e-14:
        return math.log(a1 / a0) / (4.0 * beta)
    return (a1 ** (1.0 - m) - a0 ** (1.0 - m)) / (4.0 * beta * (1.0 - m))


def to_lens_frame(f: Field, beta: float) -> Field:
    """Initial lens-frame datum ``v(0) = e^{-iβ|x|²} u(0)``."""
    return Field(f.grid, np.exp(-1j * beta * f.grid.radius_sq) * f.values)


def lens_to_physical(v: Field, beta: float, t: float) -> Field:
    """Map a lens-frame field at physical time ``t`` back to ``u(t)`` on a dilated grid."""
    a = lens_scale(beta, t)
    out = v.grid.scaled(a)
    vals = a ** (-v.grid.dim / 2.0) * np.exp(1j * beta * out.radius_sq / a) * v.values
    return Field(out, vals)


# -- driver -------------------------------------------------------------------------------

Observer = Callable[[Field, float], float]


class _Sampler:
    """Evaluates the recorded diagnostics from the internal (possibly lens-frame) state."""

    def __init__(self, grid: Grid, params: PhysParams, beta: float):
        self.g = grid
        self.params = params
        self.beta = beta
        self.gamma = params.power + 1.0
        self.dgamma = params.dim * (0.5 - 1.0 / self.gamma)

    def __call__(self, v: np.ndarray, t: float) -> tuple[float, float, float, float, float]:
        g, p = self.g, self.params
        vol = g.cell_volume
        av = np.abs(v)
        mass = vol * float(np.sum(av * av))
        pot = vol * float(np.sum(av ** self.gamma))
        vh = sfft.fftn(v)
        grads = [sfft.ifftn(1j * k * vh) for k in g.wavenumbers]
        if self.beta == 0:
            a = 1.0
            grad_sq = vol * float(sum(np.sum(np.abs(d) ** 2) for d in grads))
            s = t
        else:
            a = lens_scale(self.beta, t)
            s = t / a
            # ∇u corresponds to a^{-1}∇v + 2iβy v
            grad_sq = vol * float(sum(np.sum(np.abs(d / a + 2j * self.beta * c * v) ** 2)
                                      for d, c in zip(grads, g.coords)))
            pot *= a ** (-g.dim * (p.power - 1.0) / 2.0)
        energy = 0.5 * grad_sq + p.focusing_sign * pot / self.gamma
        lgamma = a ** (-self.dgamma) * (vol * float(np.sum(av ** self.gamma))) ** (1.0 / self.gamma)
        weighted = J_norm_values(v, g, s)
        sup = a ** (-g.dim / 2.0) * float(av.max())
        return mass, energy, lgamma, weighted, sup


def evolve(f0: Field, cfg: StepperConfig, params: PhysParams,
           observers: Optional[Mapping[str, Observer]] = None,
           *, check_window: bool = True,
           on_sample: Optional[Callable[[Field, float], None]] = None) -> TrajectoryRecord:
    """Strang split-step from ``t = 0`` to ``cfg.t_final``.

    Samples every ``cfg.snapshot_stride`` steps.  Halts early, keeping what was
    recorded, when the solution blows past the sup-norm cap or turns
    non-finite (``blowup``), when more than ``cfg.domain_guard`` of the mass
    sits in the outer shell of the box (``domain_compromised``), or when the
    spectrum crowds the top of the band (``resolution_compromised``).
    ``on_sample`` receives the physical field at every sample time.
    """
    if check_window:
        from .exponents import validate_window
        rep = validate_window(params)
        if not rep.ok:
            raise ValueError(f"parameters outside the admissible window: {rep.failures()} "
                             "(pass check_window=False to override)")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rho = exponent_set(params).rho

    g = f0.grid
    beta = cfg.lens
    n_steps = cfg.n_steps
    dt = cfg.dt
    stride = int(cfg.snapshot_stride)
    ksq = g.ksq
    m_exp = g.dim * (params.power - 1.0) / 2.0
    sampler = _Sampler(g, params, beta)
    observers = dict(observers or {})

    v = (to_lens_frame(f0, beta).values if beta else f0.values).astype(complex)

    times, rows, extras = [], [], {k: [] for k in observers}
    flags = dict.fromkeys(FLAG_NAMES, False)
    reason = ""
    sup0 = None

    def physical(vals, t):
        f = Field(g, vals)
        return lens_to_physical(f, beta, t) if beta else f

    def sample(vals, t) -> bool:
        nonlocal sup0, reason
        if not np.all(np.isfinite(vals)):
            flags["blowup"] = True
            reason = f"non-finite field at t={t:g}"
            return False
        mass, energy, lgamma, weighted, sup = sampler(vals, t)
        if sup0 is None:
            sup0 = sup
        times.append(t)
        rows.append((mass, energy, lgamma, weighted))
        if observers or on_sample:
            phys = physical(vals, t)
            if on_sample:
                on_sample(phys, t)
            for k, fn in observers.items():
                extras[k].append(float(fn(phys, t)))
        if sup0 > 0 and sup > cfg.blowup_factor * sup0:
            flags["blowup"] = True
            reason = f"sup norm exceeded cap at t={t:g}"
            return False
        if sup0 == 0:
            return True
        frac = outer_shell_fraction(vals, g, cfg.domain_shell)
        if frac > cfg.domain_guard:
            flags["domain_compromised"] = True
            reason = f"outer-shell mass fraction {frac:.2e} at t={t:g}"
            return False
        tail = spectral_tail_fraction(vals, g, cfg.tail_band)
        if tail > cfg.resolution_guard:
            flags["resolution_compromised"] = True
            reason = f"spectral tail fraction {tail:.2e} at t={t:g}"
            return False
        return True

    def step_length(i):
        t0, t1 = i * dt, (i + 1) * dt
        if beta:
            return lens_time(beta, t1) - lens_time(beta, t0), _lens_phase_integral(beta, m_exp, t0, t1)
        return dt, dt

    alive = sample(v, 0.0)
    phys_half = np.exp(-0.5j * ksq * dt) if not beta else None
    phys_full = np.exp(-1j * ksq * dt) if not beta else None
    i = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while alive and i < n_steps:
            block = min(stride, n_steps - i)
            # fused Strang block: half, (N, full)*, N, half
            ds, w = step_length(i)
            vh = sfft.fftn(v) * (phys_half if not beta else np.exp(-0.5j * ksq * ds))
            for j in range(block):
                v = sfft.ifftn(vh)
                if cfg.nonlinear:
                    v = _phase_values(v, w, params)
                vh = sfft.fftn(v)
                if j < block - 1:
                    ds_next, w_next = step_length(i + j + 1)
                    if beta:
                        vh *= np.exp(-0.5j * ksq * (ds + ds_next))
                    else:
                        vh *= phys_full
                    ds, w = ds_next, w_next
                else:
                    vh *= phys_half if not beta else np.exp(-0.5j * ksq * ds)
            v = sfft.ifftn(vh)
            i += block
            alive = sample(v, i * dt)

    arr = np.array(rows, dtype=float).reshape(-1, 4)
    t_arr = np.array(times, dtype=float)
    traj = TrajectoryRecord(
        times=t_arr, mass=arr[:, 0], energy=arr[:, 1], lgamma_norm=arr[:, 2], weighted=arr[:, 3],
        spacetime_accum=running_spacetime(t_arr, arr[:, 2], rho),
        ell_initial=ell(f0, params), rho=rho, flags=flags, flag_reason=reason,
        extras={k: np.array(vs) for k, vs in extras.items()}, lens=beta)
    if np.all(np.isfinite(v)):
        traj.final = physical(v, times[-1] if times else 0.0)
    if traj.flagged:
        log.info("evolution halted: %s", reason)
    return traj
