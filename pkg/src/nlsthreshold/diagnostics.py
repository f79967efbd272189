"""Functionals of states and trajectories, the scattering classifier, and identity checks.

Re-exports the single-state functionals and the trajectory tools so callers
have one import point.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import integrate

from .exponents import ExponentSet
from .functionals import ell, ell_from_norms, energy, mass, potential_integral
from .grid import (Field, GridMismatchError, fh_sobolev_norm, lp_norm, sample_stretched,
                   weighted_norm)
from .propagator import free_lp_norm, free_propagate
from .trajectory import (Classification, ClassifierPolicy, TrajectoryRecord, Verdict,
                         classify, running_spacetime, spacetime_norm)

__all__ = [
    "mass", "energy", "ell", "ell_from_norms", "potential_integral",
    "TrajectoryRecord", "Classification", "ClassifierPolicy", "Verdict",
    "classify", "spacetime_norm", "running_spacetime",
    "decay_ratio_curve", "pseudo_conformal", "FocalTimeError",
    "chirped_free_spacetime_norm", "orthogonal_splitting_defect",
    "modulated_sum", "negative_energy_margin",
]


class FocalTimeError(ZeroDivisionError):
    """``1 + 4bt = 0``: the chirped free solution is at its focus."""


def decay_ratio_curve(f: Field, exps: ExponentSet, t_grid) -> np.ndarray:
    """``‖e^{itΔ}f‖_γ |t|^{δ(γ)} / (‖f‖₂^{1-δ(γ)} ‖xf‖₂^{δ(γ)})`` for each ``t``."""
    d = exps.delta_gamma
    l2, xl2 = lp_norm(f, 2), weighted_norm(f)
    denom = l2 ** (1.0 - d) * xl2 ** d
    if denom == 0:
        raise ZeroDivisionError("decay ratio undefined for the zero field")
    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts == 0):
        raise ValueError("decay ratio needs t != 0")
    return np.array([free_lp_norm(f, t, exps.gamma) * abs(t) ** d / denom for t in ts])


def pseudo_conformal(psi: Field, b: float, t: float) -> Field:
    """Right-hand side of the chirp identity for ``e^{itΔ}(e^{ib|x|²} ψ)``::

        (1+4bt)^{-N/2} e^{ib|x|²/(1+4bt)} (e^{i t/(1+4bt) Δ} ψ)(x / (1+4bt))

    evaluated on ``psi``'s grid.  Dilations by 2 and 1/2 are exact index maps;
    other factors use band-limited interpolation.  For ``1 + 4bt < 0`` the
    principal branch of the power is used.
    """
    a = 1.0 + 4.0 * b * t
    if a == 0:
        raise FocalTimeError(f"1 + 4bt = 0 at b={b}, t={t}")
    if b == 0:
        return free_propagate(psi, t)
    g = psi.grid
    w = free_propagate(psi, t / a)
    pref = complex(a) ** (-g.dim / 2.0)
    vals = pref * np.exp(1j * b * g.radius_sq / a) * sample_stretched(w, a)
    return Field(g, vals)


def chirped_free_spacetime_norm(psi: Field, b: float, exps: ExponentSet, t_final: float,
                                epsrel: float = 1e-8) -> float:
    """``‖e^{itΔ}(e^{ib|x|²}ψ)‖_{L^ρ((0,T), L^γ)}`` through the chirp identity.

    Uses ``‖e^{itΔ}(e^{ib|x|²}ψ)‖_γ = |1+4bt|^{-δ(γ)} ‖e^{i t/(1+4bt) Δ} ψ‖_γ`` so the
    chirp never has to be resolved on the grid.
    """
    d, rho, gam = exps.delta_gamma, exps.rho, exps.gamma

    def integrand(t):
        a = 1.0 + 4.0 * b * t
        if a == 0:
            # focus: e^{itΔ}(e^{ib|x|²}ψ) is the far field, |a s|^{-δ} limit
            a = 1e-300
        return (abs(a) ** (-d) * free_lp_norm(psi, t / a, gam)) ** rho

    pts = [-1.0 / (4.0 * b)] if b < 0 and -1.0 / (4.0 * b) < t_final else None
    val, _ = integrate.quad(integrand, 0.0, t_final, points=pts, limit=500, epsrel=epsrel)
    return float(val ** (1.0 / rho))


def modulated_sum(profiles: Sequence[Field], xis: Sequence) -> Field:
    """``Σ_j e^{iξ_j·x} ψ_j``."""
    if not profiles:
        raise ValueError("need at least one profile")
    if len(profiles) != len(xis):
        raise ValueError("one frequency per profile")
    g = profiles[0].grid
    total = np.zeros(g.shape, dtype=complex)
    for psi, xi in zip(profiles, xis):
        if psi.grid != g:
            raise GridMismatchError("profiles must share one grid")
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if xi.size != g.dim:
            raise ValueError(f"frequency {xi} does not match dimension {g.dim}")
        phase = sum(k * c for k, c in zip(xi, g.coords))
        total += np.exp(1j * phase) * psi.values
    return Field(g, total)


def orthogonal_splitting_defect(profiles: Sequence[Field], xis: Sequence, s: float) -> float:
    """``| ‖Σ_j e^{iξ_j·x}ψ_j‖²_{FḢ^s} - Σ_j ‖ψ_j‖²_{FḢ^s} |``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    total = modulated_sum(profiles, xis)
    if len(profiles) == 1:
        return 0.0
    parts = sum(fh_sobolev_norm(p, s) ** 2 for p in profiles)
    return abs(fh_sobolev_norm(total, s) ** 2 - parts)


def negative_energy_margin(traj: TrajectoryRecord, e0: float, power: float) -> np.ndarray:
    """``‖u(t)‖_{p+1}^{p+1} / (-(p+1) E[u₀]) - 1`` along a trajectory.

    ``‖u(t)‖_{p+1}`` is what the record calls ``lgamma_norm``.
    """
    if not e0 < 0:
        raise ValueError("the lower bound only exists for negative energy")
    floor = -(power + 1.0) * e0
    return traj.lgamma_norm ** (power + 1.0) / floor - 1.0
