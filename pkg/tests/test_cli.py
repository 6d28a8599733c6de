import json

import numpy as np
import pytest

from adaptive_qsd import collective
from adaptive_qsd import experiments as ex
from adaptive_qsd.cli import main
from adaptive_qsd.errors import ConvergenceError


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestCli:
    def test_generate_reproducible(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["generate", "--m", "3", "--n", "2", "--mixed", "--seed", "4", "--out", str(a)]) == 0
        assert main(["generate", "--m", "3", "--n", "2", "--mixed", "--seed", "4", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        d = json.loads(a.read_text())
        assert (d["m"], d["n"]) == (3, 2) and len(d["states"][0][0]) == 2

    @pytest.mark.parametrize("solver", ["collective", "dp", "greedy", "minentropy"])
    def test_solve(self, capsys, solver):
        code, out = run(capsys, "solve", solver, "--m", "2", "--n", "2", "--quantization", "4")
        assert code == 0
        assert 0.5 <= json.loads(out)["value"] <= 1.0

    def test_solve_from_file(self, tmp_path, capsys):
        path = tmp_path / "e.json"
        ex.save_ensemble(path, ex.sasaki_ensemble(3))
        code, out = run(capsys, "solve", "dp", "--ensemble", str(path))
        assert code == 0 and json.loads(out)["value"] == pytest.approx(0.85 ** 3, abs=1e-9)

    def test_train_and_evaluate(self, tmp_path, capsys):
        ckpt = tmp_path / "net.bin"
        code, out = run(capsys, "train", "--n", "2", "--iterations", "2", "--quantization", "4",
                        "--checkpoint", str(ckpt))
        assert code == 0
        trained = json.loads(out)["value"]
        code, out = run(capsys, "evaluate", "--n", "2", "--quantization", "4", "--checkpoint", str(ckpt))
        assert code == 0 and json.loads(out)["value"] == pytest.approx(trained, abs=1e-15)

    def test_compare_csv_reproducible(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            assert main(["compare", "--m", "2", "--n", "2", "--trials", "2", "--solvers", "sdp,dp,greedy",
                         "--format", "csv", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]
        assert outs[0].decode().splitlines()[0] == ",".join(ex.CSV_COLUMNS)

    def test_noise_sweep(self, capsys):
        code, out = run(capsys, "noise-sweep", "--m", "3", "--n", "3", "--mixed", "--quantization", "8")
        records = json.loads(out)["records"]
        assert code == 0 and records[0]["diff"] == 0.0 and len(records) == 7

    def test_noise_sweep_violation_exit_code(self, capsys, monkeypatch):
        monkeypatch.setattr(ex, "evaluate_policy", lambda e, p: 0.5 if "rotation" in e.meta else 1.0)
        code, _ = run(capsys, "noise-sweep", "--n", "2", "--quantization", "4", "--format", "csv")
        assert code == 3

    def test_convergence_exit_code(self, capsys, monkeypatch):
        def fail(*args, **kwargs):
            raise ConvergenceError("no", 1.0)

        monkeypatch.setattr(collective, "sdp_min_error", fail)
        code, _ = run(capsys, "solve", "collective", "--n", "2")
        assert code == 2

    def test_trine_demo(self, capsys):
        code, out = run(capsys, "trine-demo")
        report = json.loads(out)
        assert code == 0
        assert report["p_collective"] == pytest.approx((3 + 2 * np.sqrt(2)) / 6, abs=1e-9)

    def test_bad_arguments(self):
        with pytest.raises(SystemExit) as info:
            main(["solve", "nonsense"])
        assert info.value.code == 2
