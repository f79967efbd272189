"""Spectral laboratory for scattering thresholds of the focusing mass-subcritical NLS."""
from .exponents import (DegenerateExponentError, ExponentSet, PhysParams, delta, describe,
                        exponent_set, is_admissible, strauss_exponent, validate_window)
from .grid import Field, Grid, GridMismatchError, lp_norm, read_snapshot, write_snapshot
from .functionals import ell, energy, mass
from .propagator import StepperConfig, apply_J, evolve, free_propagate, strang_step
from .trajectory import Classification, ClassifierPolicy, TrajectoryRecord, Verdict, classify
from .groundstate import petviashvili_solve, soliton_closed_form_1d
from .lab import ExperimentConfig, run_simulation, threshold_bisect

__version__ = "0.1.0"
