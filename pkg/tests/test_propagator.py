import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import gaussian
from nlsthreshold.exponents import PhysParams, exponent_set
from nlsthreshold.functionals import energy, mass
from nlsthreshold.grid import Field, Grid, lp_norm, weighted_norm
from nlsthreshold.groundstate import soliton_closed_form_1d
from nlsthreshold.propagator import (StepFailure, StepperConfig, apply_J, apply_J_gauge, evolve,
                                     far_field_threshold, free_lp_norm, free_propagate,
                                     free_propagate_far, lens_to_physical, nonlinear_phase_step,
                                     strang_step)


def free_gaussian(x, t):
    z = 1 + 2j * t
    return z ** -0.5 * np.exp(-x * x / (2 * z))


def periodized(x, t, L, images=8):
    return sum(free_gaussian(x + n * L, t) for n in range(-images, images + 1))


class TestFree:
    def test_identity_at_zero(self, G):
        assert free_propagate(G, 0.0) is G

    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_gaussian_box(self, grid, G, t):
        # the box solution is the periodic sum of the whole-line one
        u = free_propagate(G, t)
        err = np.max(np.abs(u.values - periodized(grid.axis, t, grid.extent)))
        assert err <= 1e-8

    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_gaussian_far_field(self, G, t):
        u = free_propagate_far(G, t)
        err = np.max(np.abs(u.values - free_gaussian(u.grid.axis, t)))
        assert err <= 1e-8

    def test_far_field_negative_time(self, G):
        u = free_propagate_far(G, -3.0)
        assert np.max(np.abs(u.values - free_gaussian(u.grid.axis, -3.0))) <= 1e-10

    def test_group_law(self, grid):
        f = gaussian(grid, width=0.7, center=1.0) * (1 + 0.5j)
        a = free_propagate(free_propagate(f, 0.3), 1.1)
        b = free_propagate(f, 1.4)
        assert np.max(np.abs(a.values - b.values)) <= 1e-12

    def test_free_lp_norm_switches_consistently(self, G, exps):
        t = far_field_threshold(G.grid)
        near = lp_norm(free_propagate(G, t), exps.gamma)
        far = lp_norm(free_propagate_far(G, t), exps.gamma)
        assert near == pytest.approx(far, rel=1e-9)
        assert free_lp_norm(G, 40.0, 2) == pytest.approx(lp_norm(G, 2), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(-5, 5), c=st.floats(-3, 3), w=st.floats(0.5, 2.0))
def test_unitary(t, c, w):
    g = Grid(1, 256, 30.0)
    f = gaussian(g, width=w, center=c) * np.exp(1j * c * g.axis)
    assert mass(free_propagate(f, t)) == pytest.approx(mass(f), rel=1e-12)


class TestNonlinearPhase:
    def test_modulus(self, params, G):
        out = nonlinear_phase_step(G * 1.7, 0.37, params)
        assert np.max(np.abs(np.abs(out.values) - np.abs(1.7 * G.values))) <= 1e-15

    def test_constant_phase_advance(self, params):
        g = Grid(1, 16, 1.0)
        A, dt = 1.3, 0.01
        out = nonlinear_phase_step(Field(g, np.full(16, A)), dt, params)
        assert np.allclose(np.angle(out.values), A ** 3 * dt, atol=1e-15)

    def test_half_steps_compose(self, params, G):
        u = G * (1.2 + 0.3j)
        two = nonlinear_phase_step(nonlinear_phase_step(u, 0.05, params), 0.05, params)
        one = nonlinear_phase_step(u, 0.1, params)
        assert np.max(np.abs(two.values - one.values)) <= 1e-15


class TestStrang:
    def test_mass_per_step(self, params, grid):
        Q = soliton_closed_form_1d(4.0, 1.0, grid)
        u = strang_step(Q * 1.3, 1e-2, params)
        assert mass(u) == pytest.approx(mass(Q * 1.3), rel=1e-12)

    def test_conjugation_symmetry(self, params, grid):
        u0 = gaussian(grid, center=0.5) * np.exp(0.7j * grid.axis) * 1.4
        fwd = strang_step(strang_step(u0, 1e-2, params), 1e-2, params)
        bwd = strang_step(strang_step(u0.conj(), -1e-2, params), -1e-2, params)
        assert np.max(np.abs(bwd.values - np.conj(fwd.values))) <= 1e-13

    def test_overflow_signals_failure(self, grid):
        big = Field(grid, np.full(grid.shape, 1e200))
        with pytest.raises(StepFailure):
            strang_step(big, 1e-3, PhysParams(1, 4.0))

    def test_soliton_hold(self, params, grid):
        Q = soliton_closed_form_1d(4.0, 1.0, grid)
        traj = evolve(Q, StepperConfig(dt=1e-3, t_final=5.0, snapshot_stride=1000), params)
        err = np.sqrt(np.sum((np.abs(traj.final.values) - Q.values.real) ** 2)) / np.sqrt(np.sum(Q.values.real ** 2))
        assert err <= 1e-3
        # standing wave phase e^{it}
        c = grid.points // 2
        assert np.angle(traj.final.values[c]) == pytest.approx(math.remainder(5.0, 2 * math.pi), abs=1e-4)

    def test_second_order(self, params, grid):
        u0 = gaussian(grid) * 1.5

        def run(dt):
            return evolve(u0, StepperConfig(dt=dt, t_final=1.0, snapshot_stride=10 ** 6), params).final.values

        a, b, c = run(0.02), run(0.01), run(0.005)
        ratio = math.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c))
        assert abs(ratio - 2.0) <= 0.2


class TestEvolve:
    def test_defocusing_mass(self):
        p = PhysParams(1, 4.0, +1)
        g = Grid(1, 8192, 320.0)
        traj = evolve(gaussian(g) * 0.3, StepperConfig(1e-3, 10.0, 500), p)
        assert traj.mass_drift() <= 1e-10 and not traj.flagged

    def test_soliton_energy(self, params, grid):
        Q = soliton_closed_form_1d(4.0, 1.0, grid)
        traj = evolve(Q, StepperConfig(1e-3, 5.0, 100), params)
        assert traj.energy_drift() <= 1e-6
        assert traj.mass_drift() <= 1e-10
        assert len(traj.times) == 51 and traj.times[-1] == pytest.approx(5.0)

    def test_zero(self, params, grid):
        traj = evolve(Field.zeros(grid), StepperConfig(1e-2, 1.0, 10), params)
        assert np.all(traj.mass == 0) and np.all(traj.lgamma_norm == 0)
        assert not np.any(traj.final.values)

    def test_window_gate(self, grid, G):
        with pytest.raises(ValueError):
            evolve(G, StepperConfig(1e-2, 0.1, 1), PhysParams(1, 3.0))
        traj = evolve(G, StepperConfig(1e-2, 0.1, 1), PhysParams(1, 3.0), check_window=False)
        assert len(traj.times) == 11

    def test_domain_flag(self, params, grid):
        traj = evolve(gaussian(grid) * 0.1, StepperConfig(1e-2, 20.0, 50), params)
        assert traj.flags["domain_compromised"] and traj.horizon < 20.0
        assert "outer-shell" in traj.flag_reason

    def test_resolution_flag(self, params):
        g = Grid(1, 256, 40.0)
        f = Field(g, 0.1 * np.exp(-0.5 * g.axis ** 2) * np.exp(0.9j * g.kmax * g.axis))
        traj = evolve(f, StepperConfig(1e-3, 0.1, 10), params)
        assert traj.flags["resolution_compromised"]

    def test_blowup_cap(self, params, grid, G):
        traj = evolve(G * 2.0, StepperConfig(1e-3, 1.0, 10, blowup_factor=1.01), params)
        assert traj.flags["blowup"] and traj.horizon < 1.0

    def test_observers_and_hook(self, params, grid, G):
        seen = []
        traj = evolve(G, StepperConfig(1e-2, 0.5, 10), params,
                      observers={"peak": lambda f, t: float(np.abs(f.values).max())},
                      on_sample=lambda f, t: seen.append(t))
        assert seen == list(traj.times)
        assert traj.extras["peak"][0] == pytest.approx(1.0)

    def test_stepper_config_checks(self):
        with pytest.raises(ValueError):
            StepperConfig(dt=1.0, t_final=0.5)
        with pytest.raises(ValueError):
            StepperConfig(dt=0.1, t_final=1.0, snapshot_stride=0)


class TestLensFrame:
    def test_free_gaussian_matches_closed_form(self, grid, G, exps):
        params = PhysParams(1, 4.0)
        cfg = StepperConfig(1e-2, 20.0, 100, lens=0.25, nonlinear=False)
        traj = evolve(G, cfg, params)
        assert not traj.flagged
        for t, lg in zip(traj.times, traj.lgamma_norm):
            exact = (1 + 4 * t * t) ** (-0.25 + 0.5 / exps.gamma) * (2 * math.pi / exps.gamma) ** (0.5 / exps.gamma)
            assert lg == pytest.approx(exact, rel=1e-9)
        # ‖J(t)u(t)‖ is conserved by the free flow
        assert np.allclose(traj.weighted, weighted_norm(G), rtol=1e-9)
        u = traj.final
        assert np.max(np.abs(u.values - free_gaussian(u.grid.axis, 20.0))) <= 1e-8

    def test_nonlinear_conservation(self, params, grid):
        Q = soliton_closed_form_1d(4.0, 1.0, grid)
        u0 = Field(grid, 1.2 * Q.values * np.exp(2j * grid.radius_sq))
        traj = evolve(u0, StepperConfig(2e-3, 10.0, 500, lens=2.0), params)
        assert traj.mass_drift() <= 1e-10
        assert traj.energy_drift() <= 1e-5

    def test_to_physical_grid(self, G):
        u = lens_to_physical(G, 0.5, 1.0)
        assert u.grid.extent == pytest.approx(3 * G.grid.extent)
        assert lp_norm(u, 2) == pytest.approx(lp_norm(G, 2), rel=1e-13)


class TestJ:
    def test_at_zero(self, grid, G):
        (j,) = apply_J(G, 0.0)
        assert np.allclose(j.values, grid.axis * G.values, atol=1e-14)

    @pytest.mark.parametrize("t", [0.3, 1.0, 2.5, -1.0])
    def test_free_flow_invariance(self, G, t):
        (j,) = apply_J(free_propagate(G, t), t)
        assert abs(lp_norm(j, 2) - weighted_norm(G)) <= 1e-10

    @pytest.mark.parametrize("t", [0.5, 1.0, -0.5])
    def test_gauge_form(self, grid, t):
        f = gaussian(grid) * np.exp(0.5j * grid.axis)
        (a,), (b,) = apply_J(f, t), apply_J_gauge(f, t)
        inner = np.abs(grid.axis) < grid.extent / 4
        assert np.max(np.abs(a.values - b.values)[inner]) <= 1e-7

    def test_2d_components(self):
        g = Grid(2, 64, 16.0)
        f = gaussian(g)
        js = apply_J(free_propagate(f, 0.7), 0.7)
        total = math.sqrt(sum(lp_norm(j, 2) ** 2 for j in js))
        assert total == pytest.approx(weighted_norm(f), abs=1e-10)
