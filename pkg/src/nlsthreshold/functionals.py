"""Scalar functionals of a single state: mass, energy and the scale-invariant ℓ."""
from __future__ import annotations

from .exponents import PhysParams
from .grid import Field, gradient_norm, lp_norm, weighted_norm


def mass(f: Field) -> float:
    return lp_norm(f, 2) ** 2


def potential_integral(f: Field, params: PhysParams) -> float:
    """``‖f‖_{p+1}^{p+1}``."""
    p1 = params.power + 1.0
    return lp_norm(f, p1) ** p1


def energy(f: Field, params: PhysParams) -> float:
    """``½‖∇f‖₂² + λ/(p+1) ‖f‖_{p+1}^{p+1}``; the focusing case carries the minus sign."""
    return (0.5 * gradient_norm(f) ** 2
            + params.focusing_sign * potential_integral(f, params) / (params.power + 1.0))


def ell_from_norms(l2: float, xl2: float, params: PhysParams) -> float:
    if l2 == 0.0:
        return 0.0
    a, b = params.ell_exponents()
    return l2 ** a * xl2 ** b


def ell(f: Field, params: PhysParams) -> float:
    """``‖f‖₂^{(N+2)/2 - 2/(p-1)} ‖x f‖₂^{2/(p-1) - N/2}``; zero for the zero field."""
    return ell_from_norms(lp_norm(f, 2), weighted_norm(f), params)
