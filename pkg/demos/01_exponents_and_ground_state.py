"""Exponents of the default regime and the ground state they are measured against.

Run:  python3 demos/01_exponents_and_ground_state.py
"""
from nlsthreshold.exponents import PhysParams, describe
from nlsthreshold.functionals import ell, energy, mass
from nlsthreshold.grid import Grid, lp_norm
from nlsthreshold.groundstate import petviashvili_solve, pohozaev_check, soliton_closed_form_1d

params = PhysParams(dim=1, power=4.0)
print("Exponent system for N=1, p=4:")
for key, value in describe(params):
    print(f"  {key:12s} {value}")

# The solver never sees the closed form; we compare afterwards.
grid = Grid(1, 1024, 40.0)
res = petviashvili_solve(params, grid)
exact = soliton_closed_form_1d(4.0, 1.0, grid)
print(f"\nPetviashvili: {res.iterations} iterations, residual {res.residual_norm:.2e}")
print(f"  distance to sech^(2/3) profile  {lp_norm(res.profile - exact, 2):.2e}")
print(f"  Pohozaev defect                 {pohozaev_check(res.profile, params):.2e}")

Q = res.profile
print(f"\nM[Q] = {mass(Q):.6f}   E[Q] = {energy(Q, params):.6f}   ell(Q) = {ell(Q, params):.6f}")

# Negative energy survives a small reduction in amplitude: the first c below 1 with E[cQ] < 0.
for c in (0.99, 0.95, 0.9, 0.8, 0.7):
    print(f"  c={c:4.2f}  E[cQ]={energy(Q * c, params):+.5f}  ell(cQ)={ell(Q * c, params):.5f}")
