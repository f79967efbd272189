"""Exponent algebra for the power-type NLS ``i u_t + Δu = λ|u|^{p-1} u``.

Everything here is closed-form arithmetic on ``(N, p)``; no grids involved.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

FOCUSING = -1
DEFOCUSING = +1

IDENTITY_TOL = 1e-12


class DegenerateExponentError(ValueError):
    """Raised when an exponent formula hits a zero denominator."""


@dataclass(frozen=True)
class PhysParams:
    """Dimension, nonlinearity power and sign of the nonlinear term."""

    dim: int
    power: float
    focusing_sign: int = FOCUSING

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if not self.power > 1:
            raise ValueError(f"power must exceed 1, got {self.power!r}")
        if self.focusing_sign not in (FOCUSING, DEFOCUSING):
            raise ValueError("focusing_sign must be -1 (focusing) or +1 (defocusing)")

    @property
    def focusing(self) -> bool:
        return self.focusing_sign == FOCUSING

    @property
    def mass_critical_power(self) -> float:
        return 1.0 + 4.0 / self.dim

    def scaling_exponent(self) -> float:
        """Exponent ``2/(p-1)`` of the amplitude in ``ω^{2/(p-1)} f(ω x)``."""
        return 2.0 / (self.power - 1.0)

    def ell_exponents(self) -> tuple[float, float]:
        """Powers of ``‖f‖₂`` and ``‖x f‖₂`` in the scale-invariant functional ℓ."""
        a = self.scaling_exponent()
        return (self.dim + 2) / 2.0 - a, a - self.dim / 2.0


@dataclass(frozen=True)
class ExponentSet:
    rho: float
    gamma: float
    rho_tilde: float
    gamma_tilde: float
    delta_gamma: float
    p_strauss: float
    p_mass_critical: float
    # True when p <= p_St, where rho_tilde or the acceptability bound breaks down
    below_strauss: bool = False


def strauss_exponent(dim: int) -> float:
    """Positive root of ``N p² - (N+2) p - 2 = 0``."""
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dimension must be a positive integer, got {dim!r}")
    n = float(dim)
    return 1.0 + (2.0 - n + math.sqrt(n * n + 12.0 * n + 4.0)) / (2.0 * n)


def delta(r: float, dim: int) -> float:
    """``δ(r) = N (1/2 - 1/r)``; ``r = inf`` is allowed."""
    if not r >= 2:
        raise ValueError(f"delta(r) needs r >= 2, got {r!r}")
    return dim * (0.5 - 1.0 / r)


def _dual(r: float) -> float:
    return r / (r - 1.0)


def exponent_set(params: PhysParams) -> ExponentSet:
    n, p = params.dim, params.power
    den_rho = 4.0 - (n - 2) * (p - 1.0)
    den_rho_tilde = n * p * p - (n + 2) * p - 2.0
    if den_rho == 0.0 or den_rho_tilde == 0.0:
        raise DegenerateExponentError(
            f"zero denominator in rho/rho_tilde for N={n}, p={p}")
    rho = 2.0 * (p * p - 1.0) / den_rho
    rho_tilde = 2.0 * (p * p - 1.0) / den_rho_tilde
    gamma = p + 1.0
    p_st = strauss_exponent(n)
    dg = delta(gamma, n)
    below = p <= p_st or rho_tilde <= 0 or rho * dg <= 1.0
    if below:
        warnings.warn(f"p={p} is not above the Strauss exponent {p_st:.6f} for N={n}",
                      RuntimeWarning, stacklevel=2)
    return ExponentSet(rho=rho, gamma=gamma, rho_tilde=rho_tilde, gamma_tilde=gamma,
                       delta_gamma=dg, p_strauss=p_st, p_mass_critical=1.0 + 4.0 / n,
                       below_strauss=below)


def is_admissible(q: float, r: float, dim: int, tol: float = IDENTITY_TOL) -> bool:
    """Strichartz admissibility: ``r`` in the allowed range and ``q δ(r) = 2``."""
    if not r >= 2:
        return False
    if dim == 1:
        r_ok = True
    elif dim == 2:
        r_ok = math.isfinite(r)
    else:
        r_ok = r <= 2.0 * dim / (dim - 2)
    if not r_ok:
        return False
    d = delta(r, dim)
    if d == 0.0:
        return math.isinf(q)
    if math.isinf(q):
        return False
    return abs(q * d - 2.0) <= tol


@dataclass
class WindowReport:
    params: PhysParams
    checks: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]


def validate_window(params: PhysParams, tol: float = IDENTITY_TOL) -> WindowReport:
    """Check the open window ``p_St < p < 1+4/N`` and the exponent relations.

    Boundary equalities count as failures.
    """
    n, p = params.dim, params.power
    p_st = strauss_exponent(n)
    checks = {"window": p_st < p < 1.0 + 4.0 / n}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            e = exponent_set(params)
    except DegenerateExponentError:
        checks.update(acceptable_rho=False, acceptable_rho_tilde=False,
                      rho_relation=False, gamma_relation=False)
        return WindowReport(params, checks)
    rd = e.rho * e.delta_gamma
    checks["acceptable_rho"] = 1.0 < rd < 2.0
    checks["acceptable_rho_tilde"] = e.rho_tilde * delta(e.gamma_tilde, n) > 1.0
    if e.rho_tilde > 1.0:
        checks["rho_relation"] = abs(e.rho - p * _dual(e.rho_tilde)) <= tol * max(1.0, e.rho)
    else:
        checks["rho_relation"] = False
    checks["gamma_relation"] = abs(e.gamma - p * _dual(e.gamma_tilde)) <= tol * e.gamma
    return WindowReport(params, checks)


def describe(params: PhysParams) -> list[tuple[str, object]]:
    """Fixed-order key/value listing used by the ``exponents`` CLI command."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        e = exponent_set(params)
    report = validate_window(params)
    checks = ",".join(f"{k}:{'pass' if v else 'fail'}" for k, v in report.checks.items())
    return [
        ("p_strauss", e.p_strauss),
        ("rho", e.rho),
        ("gamma", e.gamma),
        ("rho_tilde", e.rho_tilde),
        ("gamma_tilde", e.gamma_tilde),
        ("delta_gamma", e.delta_gamma),
        ("checks", checks),
    ]
