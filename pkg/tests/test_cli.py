import json
from pathlib import Path

import pytest

from tdhsim import blockenc as be
from tdhsim import cli
from tdhsim import selftest

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
VIOLATIONS = sorted((ROOT / "tests" / "fixtures" / "violations").glob("*.json"))


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def bench_doc(**kw):
    doc = json.loads((CONFIGS / "benchmark_rk4.json").read_text())
    doc.update(kw)
    return doc


def test_simulate_benchmark(tmp_path, capsys):
    out = tmp_path / "o.json"
    assert cli.main(["simulate", "--config", str(CONFIGS / "benchmark_rk4.json"), "--reference", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["global_error"] < 1e-3
    assert doc["final_target"]["dim"] == 4 and len(doc["final_target"]["entries"]) == 16
    assert "wall_time_s" not in doc
    assert cli.matrix_from_json(doc["final_target"]).shape == (4, 4)


def test_simulate_zero_hamiltonian(tmp_path):
    doc = cli.cmd_simulate(cli.load_config(CONFIGS / "zero_hamiltonian.json"), reference=True)
    assert doc["global_error"] == 0.0
    assert cli.matrix_from_json(doc["final_target"]).tolist() == [[1 if i == j else 0 for j in range(4)] for i in range(4)]


def test_auto_steps():
    doc = cli.cmd_simulate(cli.load_config(CONFIGS / "benchmark_taylor2_auto.json"))
    assert doc["steps"] == 100


def test_timing_flag():
    doc = cli.cmd_simulate(cli.load_config(CONFIGS / "zero_hamiltonian.json"), timing=True)
    assert doc["wall_time_s"] >= 0


@pytest.mark.parametrize("name, order, tol", [("benchmark_euler", 1, 0.2), ("benchmark_taylor3", 3, 0.4)])
def test_converge_orders(name, order, tol):
    text = cli.cmd_converge(cli.load_config(CONFIGS / f"{name}.json"), [8, 16, 32, 64])
    lines = text.splitlines()
    assert lines[0] == "steps,dt,error,alpha,depth_units,queries_total"
    assert len(lines) == 6 and lines[-1].startswith("# fitted_order=")
    assert abs(float(lines[-1].split("=")[1]) - order) <= tol


def test_converge_constant_matches_closed_form():
    text = cli.cmd_converge(cli.load_config(CONFIGS / "constant_hamiltonian.json"), [8, 16, 32])
    errors = [float(r.split(",")[2]) for r in text.splitlines()[1:-1]]
    assert errors[0] > errors[1] > errors[2]


def test_converge_needs_three_counts():
    with pytest.raises(cli.ConfigError):
        cli.cmd_converge(cli.load_config(CONFIGS / "benchmark_euler.json"), [8, 16])


def test_resources_euler_exact():
    cfg = cli.parse_config(bench_doc(method={"kind": "rk", "tableau": "euler"}, steps=4))
    doc = cli.cmd_resources(cfg)
    assert doc["exact_match"] and doc["ratio"]["depth_units"] == 1.0
    assert {"m", "d_max", "h_max", "M"} <= set(doc)


def test_resources_taylor_doubles():
    d4 = cli.cmd_resources(cli.parse_config(bench_doc(method={"kind": "taylor", "order": 2}, steps=4)))
    d8 = cli.cmd_resources(cli.parse_config(bench_doc(method={"kind": "taylor", "order": 2}, steps=8)))
    assert d8["measured"]["depth_units"] == 2 * d4["measured"]["depth_units"]


def test_resources_rk4_ratio_follows_replay():
    c4 = cli.cmd_resources(cli.parse_config(bench_doc(t_final=0.25, steps=4)))
    c8 = cli.cmd_resources(cli.parse_config(bench_doc(t_final=0.25, steps=8)))
    assert c4["exact_match"] and c8["exact_match"]
    assert c8["measured"]["depth_units"] / c4["measured"]["depth_units"] > 1e6


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.update(extra=1), "unknown field"),
    (lambda d: d.pop("method"), "missing field"),
    (lambda d: d.update(qubits=11), "qubits"),
    (lambda d: d.update(t_final=1.5), "t_final"),
    (lambda d: d.update(steps=0), "steps"),
    (lambda d: d.update(steps="many"), "steps"),
    (lambda d: d.update(epsilon=0.5), "epsilon"),
    (lambda d: d.update(method={"kind": "taylor", "order": 9}), "order"),
    (lambda d: d.update(method={"kind": "rk", "tableau": "rk9"}), "tableau"),
    (lambda d: d.update(method={"kind": "magnus"}), "kind"),
    (lambda d: d["terms"][0]["paulis"][0].update(string="XQ"), "letters"),
    (lambda d: d["terms"][0]["paulis"][0].update(string="X"), "letters"),
    (lambda d: d["terms"][0].update(coeff="cos(t"), "offset"),
    (lambda d: d["terms"][0].update(color="red"), "unknown field"),
])
def test_config_errors_exit_2(tmp_path, capsys, mutate, fragment):
    doc = bench_doc()
    mutate(doc)
    assert cli.main(["simulate", "--config", write(tmp_path, doc)]) == 2
    assert fragment in capsys.readouterr().err


def test_malformed_json_and_missing_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert cli.main(["simulate", "--config", str(p)]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "absent.json")]) == 2


@pytest.mark.parametrize("path", VIOLATIONS, ids=lambda p: p.stem)
def test_assumption_violations(path, capsys):
    assert cli.main(["simulate", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert ("|γ_i(t)| ≤ 1" in err) if path.stem.startswith("coeff") else ("norm at most 1/2" in err)


def test_headroom_violation_exit_3(tmp_path):
    cfg = write(tmp_path, bench_doc(steps=2))
    assert cli.main(["simulate", "--config", cfg]) == 3


def test_oracle_failure_exit_4(tmp_path, monkeypatch):
    monkeypatch.setattr(cli.rf, "K_MAX", 512)
    cfg = write(tmp_path, bench_doc(reference_tol=1e-15))
    assert cli.main(["simulate", "--config", cfg, "--reference"]) == 4


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert int(out.strip().splitlines()[-1].split("/")[1].split()[0]) >= 40


def test_selftest_catches_alpha_bug(capsys, monkeypatch):
    real = be.multiply

    def wrong_alpha(x, y):
        z = real(x, y)
        return be.BlockEncoding(z.target, z.alpha * 1.5, z.ancillas, z.err, z.cost)

    monkeypatch.setattr(be, "multiply", wrong_alpha)
    assert cli.main(["selftest"]) == 1
    out = capsys.readouterr().out
    assert "[FAIL] blockenc: multiply composes targets and alphas" in out


def test_selftest_catches_scale_bug(capsys, monkeypatch):
    monkeypatch.setattr(be, "scale_down", lambda x, p: x)
    assert cli.main(["selftest"]) == 1
    assert "[FAIL] blockenc: scale_down keeps the target and grows alpha" in capsys.readouterr().out


def test_selftest_size():
    assert len(selftest.CHECKS) >= 40
