import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

from nlsthreshold import lab
from nlsthreshold.grid import read_snapshot
from nlsthreshold.lab import (BracketInvalidError, ConfigError, ExperimentConfig,
                              NonNegativeEnergyError, initial_data, negative_energy_witness,
                              oscillation_sweep, run_simulation, theorem2_demo, threshold_bisect,
                              verify_suite)
from nlsthreshold.trajectory import Verdict

SMALL = {"grid": {"points": 1024, "extent": 40.0},
         "stepper": {"dt": 1e-3, "t_final": 50.0, "snapshot_stride": 1000}}
LENS = {"grid": {"points": 1024, "extent": 40.0},
        "stepper": {"dt": 2e-3, "t_final": 50.0, "snapshot_stride": 500, "lens": 0.25}}
MEDIUM = {"grid": {"points": 4096, "extent": 160.0},
          "stepper": {"dt": 1e-3, "t_final": 50.0, "snapshot_stride": 1000}}


def cfg(base=SMALL, **kw):
    return ExperimentConfig.from_dict({**base, **kw})


class TestConfig:
    def test_defaults_round_trip(self):
        c = ExperimentConfig()
        again = ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict())))
        assert again == c and again.config_hash() == c.config_hash()

    @pytest.mark.parametrize("doc", [
        {"bogus": 1},
        {"family": {"kind": "sphere"}},
        {"family": {"amplitude": -1}},
        {"bisection": {"c_lo": 1.0, "c_hi": 0.5}},
        {"stepper": {"dt": 0.0}},
        {"grid": {"points": 1000}},
        {"params": {"dim": 1, "power": 0.5}},
        {"params": {"dim": 3, "power": 2.2}},
        {"grid": {"points": 64, "extent": 10.0, "shape": 3}},
        {"workers": 0},
        {"family": {"ground_state": "closed_form"}, "params": {"dim": 2, "power": 2.7}},
        [],
    ])
    def test_rejects(self, doc):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(doc)

    def test_invalid_json(self, tmp_path):
        (tmp_path / "c.json").write_text("{nope")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(tmp_path / "c.json")

    def test_hash(self):
        a = cfg(params={"dim": 1, "power": 4})
        b = cfg(params={"dim": 1, "power": 4.0}, name="other", workers=3, snapshots=False)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != cfg(family={"amplitude": 0.5}).config_hash()
        assert len(a.config_hash()) == 64


class TestInitialData:
    def test_gaussian_chirp(self):
        c = cfg(family={"kind": "gaussian", "amplitude": 2.0, "chirp": 0.5, "width": 2.0})
        g = c.grid.build(1)
        u = initial_data(c, g)
        ref = 2.0 * np.exp(-g.axis ** 2 / 8) * np.exp(0.5j * g.axis ** 2)
        assert np.max(np.abs(u.values - ref)) <= 1e-14

    def test_chirped_family_base(self):
        c = cfg(family={"kind": "chirped", "chirped_base": "gaussian", "chirp": 1.0})
        u = initial_data(c, c.grid.build(1))
        assert np.max(np.abs(np.abs(u.values) - np.exp(-0.5 * c.grid.build(1).axis ** 2))) <= 1e-14

    def test_noise_seeded(self):
        a = cfg(family={"noise": 1e-3}, seed=7)
        g = a.grid.build(1)
        u1, u2 = initial_data(a, g), initial_data(a, g)
        u3 = initial_data(a.replace(seed=8), g)
        assert np.array_equal(u1.values, u2.values) and not np.array_equal(u1.values, u3.values)

    def test_closed_form_matches_solver(self):
        a = cfg(family={"ground_state": "closed_form"})
        b = cfg()
        g = a.grid.build(1)
        assert np.max(np.abs(initial_data(a, g).values - initial_data(b, g).values)) <= 1e-6


class TestRunSimulation:
    def test_standing_wave_persisted(self, tmp_path):
        rec = run_simulation(cfg(), tmp_path)
        assert rec.verdict == Verdict.NON_SCATTER
        d = tmp_path / "runs" / f"run-{rec.config_hash[:12]}"
        assert d.is_dir() and (d / "trajectory.csv").exists()
        snaps = sorted((d / "snapshots").iterdir())
        assert len(snaps) == len(rec.trajectory.times) == 51
        assert read_snapshot(snaps[-1]).grid.points == 1024
        meta = json.loads((d / "record.json").read_text())
        assert list(meta) == sorted(meta)
        assert meta["verdict"] == "NonScatter" and meta["config_hash"] == rec.config_hash

    def test_small_gaussian_scatters(self):
        rec = run_simulation(cfg(LENS, family={"kind": "gaussian", "amplitude": 0.1}))
        assert rec.verdict == Verdict.SCATTER

    def test_zero_data(self, tmp_path):
        rec = run_simulation(cfg(family={"kind": "gaussian", "amplitude": 0.0}), tmp_path,
                             snapshots=False)
        assert rec.verdict == Verdict.SCATTER and rec.degenerate
        assert "degenerate" in rec.classification.reason

    def test_domain_retry_grows_box(self):
        c = cfg({"grid": {"points": 256, "extent": 10.0},
                 "stepper": {"dt": 1e-2, "t_final": 50.0, "snapshot_stride": 100}},
                family={"kind": "gaussian", "amplitude": 0.1}, retry={"max_retries": 2})
        rec = run_simulation(c)
        assert [a["extent"] for a in rec.attempts] == [10.0, 20.0, 40.0]
        assert [a["points"] for a in rec.attempts] == [256, 512, 1024]
        assert rec.attempts[0]["flags"]["domain_compromised"]
        assert rec.verdict == Verdict.UNDETERMINED

    def test_retry_disabled(self):
        c = cfg({"grid": {"points": 256, "extent": 10.0},
                 "stepper": {"dt": 1e-2, "t_final": 50.0, "snapshot_stride": 100}},
                family={"kind": "gaussian", "amplitude": 0.1}, retry={"max_retries": 2, "grow_box": False})
        assert len(run_simulation(c).attempts) == 1

    def test_negative_time(self):
        c = cfg(LENS, family={"kind": "gaussian", "amplitude": 0.1}, negative_time=True)
        rec = run_simulation(c)
        assert rec.backward is not None and rec.verdict == Verdict.SCATTER

    def test_deterministic(self, tmp_path):
        c = cfg(LENS, family={"kind": "gaussian", "amplitude": 0.3})
        a = run_simulation(c, tmp_path / "a", snapshots=False)
        b = run_simulation(c, tmp_path / "b", snapshots=False)
        assert open(a.trajectory_csv, "rb").read() == open(b.trajectory_csv, "rb").read()


class TestWitness:
    def test_rejects_positive_energy(self):
        with pytest.raises(NonNegativeEnergyError):
            negative_energy_witness(cfg(family={"amplitude": 0.1}))

    def test_ground_state(self):
        rep = negative_energy_witness(cfg(stepper={"dt": 1e-3, "t_final": 5.0, "snapshot_stride": 100},
                                          policy={"min_horizon": 5.0}))
        assert rep.floor_holds and rep.ok
        assert rep.floor == pytest.approx(-5 * rep.energy0)
        assert rep.min_margin > 0

    def test_amplified(self):
        c = cfg(MEDIUM, family={"amplitude": 1.1}, policy={"min_horizon": 20.0},
                stepper={"dt": 1e-3, "t_final": 20.0, "snapshot_stride": 1000})
        rep = negative_energy_witness(c)
        assert rep.floor_holds and rep.min_margin > 0.5
        assert rep.ok, (rep.verdict, rep.record.classification.reason)


class TestTheorem2:
    def test_demo(self):
        rep = theorem2_demo(cfg(MEDIUM))
        assert rep.c0 == 0.99 and rep.energy_c0 < 0
        assert rep.ell_c0 / rep.ell_ground_state == pytest.approx(0.99, rel=1e-14)
        assert rep.verdict == Verdict.NON_SCATTER and rep.ok and rep.gap > 0

    def test_scan_without_negative_energy(self):
        rep = theorem2_demo(cfg(theorem2={"scan": [0.3, 0.2]}))
        assert rep.c0 is None and not rep.ok


def _fake_probe(threshold, fuzzy=()):
    """Stand-in for a simulation: verdict by amplitude, Undetermined inside ``fuzzy``."""
    calls = []

    def probe(job):
        c = job[0].family.amplitude
        calls.append(c)
        if fuzzy and fuzzy[0] <= c <= fuzzy[1]:
            v = Verdict.UNDETERMINED
        else:
            v = Verdict.SCATTER if c < threshold else Verdict.NON_SCATTER
        return SimpleNamespace(verdict=v, classification=SimpleNamespace(tail_slope=0.0, reason=""),
                               run_dir=None, grid_used={})
    return probe, calls


class TestBisection:
    def test_bracket_arithmetic(self, monkeypatch):
        probe, calls = _fake_probe(0.6)
        monkeypatch.setattr(lab, "_probe", probe)
        res = threshold_bisect(cfg())
        assert res.budget_spent == 12 and res.undetermined_count == 0
        assert res.c_lo < 0.6 <= res.c_hi
        assert res.width <= (1.0 - 0.05) / 2 ** 12 + 1e-15
        assert res.ell_hi == pytest.approx(res.c_hi * res.ell_ground_state, rel=1e-12)
        assert res.eta > 0 and not res.inconclusive
        assert calls[:2] == [0.05, 1.0]

    def test_undetermined_keeps_bracket(self, monkeypatch):
        probe, calls = _fake_probe(0.6, fuzzy=(0.55, 0.65))
        monkeypatch.setattr(lab, "_probe", probe)
        res = threshold_bisect(cfg())
        assert res.c_lo < 0.55 and res.c_hi > 0.65
        assert res.undetermined_count > 0
        lo, hi = 0.05, 1.0
        for p in res.probes[2:]:
            if p.verdict == Verdict.SCATTER:
                lo = p.c
            elif p.verdict == Verdict.NON_SCATTER:
                hi = p.c
        assert (lo, hi) == (res.c_lo, res.c_hi)
        verdicts = {p.c: p.verdict for p in res.probes}
        assert verdicts[res.c_lo] == Verdict.SCATTER and verdicts[res.c_hi] == Verdict.NON_SCATTER
        assert len(set(calls)) == len(calls)

    def test_inconclusive(self, monkeypatch):
        probe, _ = _fake_probe(0.6, fuzzy=(0.06, 0.99))
        monkeypatch.setattr(lab, "_probe", probe)
        res = threshold_bisect(cfg())
        assert res.inconclusive and res.c_lo == 0.05 and res.c_hi == 1.0

    def test_invalid_endpoints(self, monkeypatch):
        probe, _ = _fake_probe(5.0)
        monkeypatch.setattr(lab, "_probe", probe)
        with pytest.raises(BracketInvalidError):
            threshold_bisect(cfg())

    def test_invalid_endpoints_real(self):
        c = cfg(LENS, bisection={"c_lo": 0.05, "c_hi": 0.1, "budget": 1})
        with pytest.raises(BracketInvalidError):
            threshold_bisect(c)

    def test_upper_bound(self, monkeypatch):
        probe, _ = _fake_probe(0.6)
        monkeypatch.setattr(lab, "_probe", probe)
        a = threshold_bisect(cfg())
        b = threshold_bisect(cfg(family={"kind": "gaussian"}, bisection={"c_lo": 0.05, "c_hi": 1.0, "budget": 4}))
        assert b.ell_ground_state is None and b.eta is None
        assert lab.ell_c_upper_bound([a, b]) == min(a.ell_hi, b.ell_hi)


class TestSweepLogic:
    def test_onset_and_frames(self, monkeypatch):
        seen = []

        def probe(job):
            c = job[0]
            seen.append((c.family.chirp, c.stepper.lens, c.grid.points))
            b = c.family.chirp
            v = Verdict.SCATTER if abs(b) >= (1 if b > 0 else 2) else Verdict.NON_SCATTER
            return SimpleNamespace(verdict=v, classification=SimpleNamespace(tail_slope=0.0, reason=""),
                                   run_dir=None, grid_used={})
        monkeypatch.setattr(lab, "_probe", probe)
        rep = oscillation_sweep(cfg(family={"amplitude": 1.2}))
        assert rep.onset == {"positive": 1.0, "negative": 2.0}
        assert rep.precondition_ok and all(rep.monotone.values()) and rep.ok
        frames = {b: (lens, pts) for b, lens, pts in seen}
        assert frames[0.0] == (0.0, 1024) and frames[0.5] == (0.0, 1024)
        assert frames[-4.0] == (4.0, 2048)


class TestParallel:
    def test_order_preserved(self):
        base = cfg({"grid": {"points": 256, "extent": 40.0},
                    "stepper": {"dt": 1e-2, "t_final": 2.0, "snapshot_stride": 10}},
                   policy={"min_horizon": 1.0})
        jobs = [(base.with_family(kind="gaussian", amplitude=a), None, f"j{i}")
                for i, a in enumerate((0.0, 1.0, 0.5, 0.0))]
        serial = [r.to_dict()["classification"] for r in lab._map_runs(jobs, 1)]
        parallel = [r.to_dict()["classification"] for r in lab._map_runs(jobs, 2)]
        assert serial == parallel


@pytest.mark.parametrize("name", sorted(lab.SUITES))
def test_verify_suites(name):
    rep = verify_suite(name)
    assert rep.ok, rep.lines()


def test_verify_unknown():
    with pytest.raises(KeyError):
        verify_suite("nope")
