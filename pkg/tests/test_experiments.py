import io
import json
import math

import numpy as np
import pytest

from adaptive_qsd import experiments as ex
from adaptive_qsd.actions import build_action_set
from adaptive_qsd.errors import BoundViolation
from adaptive_qsd.local import dp_optimal_local
from adaptive_qsd.qstate import Ensemble


class TestTrialSpec:
    def test_json_round_trip(self):
        spec = ex.TrialSpec(m=3, n=4, Q=8, pure=False, noise_range=(0.1, 0.2), seed=7,
                            solvers=("sdp", "dp"), iterations=12, rl_repeats=2, trials=3, prior=(0.2, 0.3, 0.5))
        assert ex.TrialSpec.from_json(spec.to_json()) == spec
        assert json.loads(spec.to_json())["noise_range"] == [0.1, 0.2]


class TestGenerate:
    def test_pure_factors_rank_one(self):
        ens = ex.generate_ensemble(ex.TrialSpec(m=4, n=3, pure=True, seed=1))
        for rho in ens.states.reshape(-1, 2, 2):
            np.testing.assert_allclose(np.linalg.eigvalsh(rho), [0, 1], atol=1e-12)

    def test_fully_depolarized(self):
        spec = ex.TrialSpec(m=3, n=2, pure=False, noise_range=(1.0, 1.0), seed=1, prior=(0.2, 0.5, 0.3))
        ens = ex.generate_ensemble(spec)
        np.testing.assert_allclose(ens.states, np.broadcast_to(np.eye(2) / 2, ens.states.shape), atol=1e-15)
        assert ex.collective_value(ens) == pytest.approx(0.5, abs=1e-9)
        for solver in ("dp", "greedy", "minentropy"):
            assert ex.local_policy(ens, solver, 4).value == pytest.approx(0.5, abs=1e-9)

    def test_noise_recorded(self):
        ens = ex.generate_ensemble(ex.TrialSpec(m=2, n=2, pure=False, seed=3))
        noise = np.array(ens.meta["noise"])
        assert noise.shape == (2, 2) and np.all((0 <= noise) & (noise <= 0.5))

    def test_deterministic_json(self, tmp_path):
        spec = ex.TrialSpec(m=3, n=3, pure=False, seed=11)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        ex.save_ensemble(a, ex.generate_ensemble(spec))
        ex.save_ensemble(b, ex.generate_ensemble(spec))
        assert a.read_bytes() == b.read_bytes()

    def test_load_round_trip(self, tmp_path):
        ens = ex.generate_ensemble(ex.TrialSpec(m=3, n=2, pure=False, seed=2))
        path = tmp_path / "e.json"
        ex.save_ensemble(path, ens)
        back = ex.load_ensemble(path)
        np.testing.assert_array_equal(back.states, ens.states)
        np.testing.assert_array_equal(back.prior, ens.prior)

    def test_schema_mismatch(self):
        d = ex.ensemble_to_dict(ex.sasaki_ensemble(2))
        d["n"] = 3
        with pytest.raises(ValueError):
            ex.ensemble_from_dict(d)


class TestRotationNoise:
    def test_zero(self):
        ens = ex.generate_ensemble(ex.TrialSpec(m=2, n=2, pure=False, seed=0))
        np.testing.assert_array_equal(ex.apply_rotation_noise(ens, 0.0).states, ens.states)

    def test_quarter_turn(self):
        ens = Ensemble.from_factors([[np.diag([1.0, 0.0])]])
        np.testing.assert_allclose(ex.apply_rotation_noise(ens, np.pi / 2).states[0, 0], np.diag([0.0, 1.0]), atol=1e-15)

    def test_spectrum_preserved(self):
        ens = ex.generate_ensemble(ex.TrialSpec(m=3, n=3, pure=False, seed=4))
        rot = ex.apply_rotation_noise(ens, 0.77)
        np.testing.assert_allclose(np.linalg.eigvalsh(rot.states), np.linalg.eigvalsh(ens.states), atol=1e-12)
        np.testing.assert_allclose(np.trace(rot.states, axis1=2, axis2=3), 1.0, atol=1e-12)


class TestNoiseSweep:
    @pytest.mark.parametrize("seed", range(3))
    def test_bound_holds(self, seed):
        ens = ex.generate_ensemble(ex.TrialSpec(m=3, n=3, pure=False, seed=seed))
        policy = dp_optimal_local(ens, build_action_set(20, 3))
        result = ex.noise_sweep(ens, policy, (0.0,) + ex.THETA_GRID)
        assert result.records[0].diff == 0.0
        assert not result.violations
        last = result.records[-1]
        assert last.bound == pytest.approx(np.sqrt(2) * 3 * 0.1)
        assert abs(last.diff) <= 0.43

    def test_violation_raises(self, monkeypatch):
        ens = ex.sasaki_ensemble(2)
        policy = dp_optimal_local(ens, build_action_set(4, 2))
        monkeypatch.setattr(ex, "evaluate_policy", lambda e, p: 0.5 if "rotation" in e.meta else 1.0)
        with pytest.raises(BoundViolation):
            ex.noise_sweep(ens, policy, (0.0, 0.01))
        result = ex.noise_sweep(ens, policy, (0.0, 0.01), check=False)
        assert [r.theta for r in result.violations] == [0.01]


class TestComparison:
    def test_rows_sorted_and_checked(self):
        spec = ex.TrialSpec(m=3, n=3, pure=False, seed=0, trials=3, solvers=("sdp", "dp", "greedy", "minentropy"))
        rows = ex.run_comparison(spec)
        assert [r["p_sdp"] for r in rows] == sorted(r["p_sdp"] for r in rows)
        for r in rows:
            assert r["p_sdp"] + 1e-9 >= r["p_dp"] >= r["p_greedy"] - 1e-12
            assert r["p_minentropy"] <= r["p_dp"] + 1e-9
            assert math.isnan(r["p_rlnn_mean"])

    def test_dp_skipped_beyond_limit(self):
        spec = ex.TrialSpec(m=2, n=5, seed=0, solvers=("sdp", "dp", "greedy"))
        row = ex.run_comparison(spec)[0]
        assert math.isnan(row["p_dp"]) and not math.isnan(row["p_greedy"])

    def test_solver_failure_recorded(self, monkeypatch):
        def broken(ens):
            raise RuntimeError("boom")

        monkeypatch.setattr(ex, "collective_value", broken)
        row = ex.run_comparison(ex.TrialSpec(m=2, n=2, solvers=("sdp", "greedy")))[0]
        assert math.isnan(row["p_sdp"]) and "boom" in row["errors"]["sdp"]

    def test_invariant_violation(self):
        row = {"trial": 0, "p_sdp": 0.8, "p_dp": 0.9, "p_greedy": 0.7, "p_minentropy": math.nan,
               "p_rlnn_mean": math.nan}
        with pytest.raises(BoundViolation):
            ex.check_row(row, 0.5)

    def test_csv_columns(self):
        buf = io.StringIO()
        rows = ex.run_comparison(ex.TrialSpec(m=2, n=2, seed=1, trials=2, solvers=("sdp", "greedy")))
        ex.write_csv(rows, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == ",".join(ex.CSV_COLUMNS)
        assert len(lines) == 3


class TestTrineDemo:
    def test_report(self):
        report = ex.trine_demo()
        assert report["p_collective"] == pytest.approx((3 + 2 * np.sqrt(2)) / 6, abs=1e-9)
        assert report["p_anti_trine_first"] == pytest.approx(0.5 + np.sqrt(3) / 4, abs=1e-9)
        assert report["p_greedy"] == pytest.approx(0.8, abs=1e-9)
        assert report["curve_max"] == pytest.approx(0.5 + np.sqrt(3) / 4, abs=1e-6)
        assert report["local_below_collective"]
        assert report["p_collective"] - report["p_anti_trine_first"] >= 0.038


class TestPpoOverrides:
    def test_spec_round_trip_keeps_overrides(self):
        spec = ex.TrialSpec(ppo={"epochs": 16})
        assert ex.TrialSpec.from_json(spec.to_json()) == spec

    def test_overrides_reach_training(self, monkeypatch):
        seen = []

        def fake_train(ensemble, config=None, **kwargs):
            seen.append(config)
            return type("R", (), {"value": 0.5})()

        monkeypatch.setattr("adaptive_qsd.rl.ppo.train", fake_train)
        spec = ex.TrialSpec(m=2, n=2, rl_repeats=2, ppo={"epochs": 7})
        mean, std = ex._rl_values(ex.generate_ensemble(spec), spec, 0)
        assert (mean, std) == (0.5, 0.0)
        assert [c.epochs for c in seen] == [7, 7]
