import json
import subprocess
import sys
from fractions import Fraction as F
from pathlib import Path

import pytest

from _suite import late_stop_flow
from stopgo import ConfigurationError
from stopgo.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_OK, main
from stopgo.config import parse_config
from stopgo.reports import read_flow, read_table, write_flow

ROOT = """\
horizon: 6
measure:
  points: [[-2, "1/4"], [0, "1/2"], [2, "1/4"]]
payoff: {kind: neg_tau_sq}
mode: exact
commands: [solve, verify]
"""

RUNNING_MAX = """\
horizon: 3
measure:
  points: [[-1, "1/2"], [1, "1/2"]]
payoff: running_max
"""


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _summary(out):
    return json.loads((Path(out) / "summary.json").read_text())


def _value(entry):
    return F(entry["value"])


def test_solve_running_max(tmp_path):
    cfg = _write(tmp_path, RUNNING_MAX)
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    s = _summary(out)
    assert _value(s["P"]) == _value(s["D"]) == F(1, 2)
    assert s["P"]["mode"] == "exact" and s["status"] == "OPTIMAL"
    for f in ("flow.tsv", "lambda.tsv", "supermartingale.tsv"):
        assert (out / f).exists()
    assert {"P", "D", "gap", "status", "n_sg_pairs", "n_violations", "runtime_ms"} <= set(s)


def test_solve_zero_payoff(tmp_path):
    cfg = _write(tmp_path, RUNNING_MAX.replace("running_max", "zero"))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    s = _summary(tmp_path / "o")
    assert _value(s["P"]) == _value(s["D"]) == 0


def test_solve_infeasible(tmp_path):
    cfg = _write(tmp_path, RUNNING_MAX.replace('[[-1, "1/2"], [1, "1/2"]]', '[[-4, "1/2"], [4, "1/2"]]'))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_INFEASIBLE
    assert _summary(tmp_path / "o")["status"] == "INFEASIBLE"
    assert (tmp_path / "o" / "infeasibility.tsv").exists()


def test_floating_mode_override(tmp_path):
    cfg = _write(tmp_path, RUNNING_MAX)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o"), "--mode", "floating"]) == EXIT_OK
    s = _summary(tmp_path / "o")
    assert s["P"]["mode"] == "floating" and abs(float(s["P"]["value"]) - 0.5) < 1e-9


@pytest.mark.parametrize(
    "text, field, line",
    [
        ("horizon: 3\nmeasure:\n  points: [[1, 1]]\npayoff: neg_tau\n", "measure", 2),
        ("horizon: 3\nmeasure:\n  points: [[-1, 0.5], [1, 0.5]]\npayoff: {kind: bogus}\n", "payoff.kind", 4),
        ("horizon: x\nmeasure: {}\n", "horizon", 1),
        ("horizon: 3\ncolour: red\n", "colour", 2),
        (
            "horizon: 3\nmeasure:\n  points: [[-1, 0.5], [1, 0.5]]\npayoff: neg_tau\nmode: floating\n"
            "tolerances:\n  lp: 0\n",
            "tolerances.lp",
            7,
        ),
        ("horizon: 12\nmeasure:\n  points: [[-1, 0.5], [1, 0.5]]\npayoff: neg_tau\n", "horizon", 1),
        (
            "horizon: 3\ntree: {mode: augmented, statistic: time_value}\n"
            "measure:\n  points: [[-1, 0.5], [1, 0.5]]\npayoff: running_max\n",
            "payoff",
            5,
        ),
    ],
)
def test_config_errors_carry_location(text, field, line):
    with pytest.raises(ConfigurationError) as e:
        parse_config(text)
    assert e.value.field == field and e.value.line == line
    assert f"line {line}" in str(e.value)


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "horizon: 3\nmeasure: [1]\npayoff: neg_tau\n")
    assert main(["solve", "--config", str(cfg)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


def test_measure_file(tmp_path):
    (tmp_path / "law.tsv").write_text("# point weight\n-2 1/4\n0 1/2\n2 1/4\n")
    cfg = parse_config(ROOT.replace('points: [[-2, "1/4"], [0, "1/2"], [2, "1/4"]]', "file: law.tsv"), base=tmp_path)
    assert cfg.measure.weight(0) == F(1, 2)


def test_custom_payoff_config():
    text = "horizon: 1\nmeasure:\n  points: [[-1, 0.5], [1, 0.5]]\npayoff:\n  kind: custom\n  table: {'^': 0, '^+': 2, '^-': 1}\n"
    cfg = parse_config(text)
    from stopgo import assemble_primal, build_tree, solve_primal

    _, P = solve_primal(assemble_primal(build_tree(1), cfg.measure, cfg.payoff), exact=True)
    assert P == F(3, 2)


def _tree_bytes(out):
    return {p.name: p.read_bytes() for p in sorted(Path(out).iterdir()) if p.name != "summary.json"}


def test_reports_are_deterministic(tmp_path):
    cfg = _write(tmp_path, ROOT)
    for k in ("a", "b"):
        assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / k), "--seed", "3"]) == EXIT_OK
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")
    sa, sb = _summary(tmp_path / "a"), _summary(tmp_path / "b")
    sa.pop("runtime_ms"), sb.pop("runtime_ms")
    assert sa == sb


def test_reverify_emitted_flow(tmp_path):
    cfg = _write(tmp_path, ROOT)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "s")]) == EXIT_OK
    flow_file = tmp_path / "s" / "flow.tsv"
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v"), "--flow", str(flow_file)]) == EXIT_OK
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "w")]) == EXIT_OK
    assert _summary(tmp_path / "v")["verdict"] == _summary(tmp_path / "w")["verdict"] == "PASS"
    assert _summary(tmp_path / "v")["status"] == "OPTIMAL"


def test_injected_flow_fails(tmp_path):
    cfg = _write(tmp_path, ROOT)
    flow = late_stop_flow(6)
    write_flow(tmp_path / "bad.tsv", flow)
    assert read_flow(tmp_path / "bad.tsv", flow.tree, True).stop.tolist() == flow.stop.tolist()
    code = main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v"), "--flow", str(tmp_path / "bad.tsv")])
    assert code == EXIT_FAIL
    s = _summary(tmp_path / "v")
    assert s["verdict"] == "FAIL" and s["status"] == "SUBOPTIMAL" and s["n_violations"] > 0
    _, cols, rows = read_table(tmp_path / "v" / "violations.tsv", "violations")
    assert ["^+-", "^", "violation", "4", "SG"] in rows


def test_neg_tau_verify_vacuous(tmp_path):
    cfg = _write(tmp_path, ROOT.replace("neg_tau_sq", "neg_tau"))
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == EXIT_OK
    assert _summary(tmp_path / "v")["n_sg_pairs"] == 0


@pytest.mark.parametrize("payoff, empty", [("neg_tau_sq", False), ("neg_tau", True), ("running_max", True)])
def test_enumerate_files(tmp_path, payoff, empty):
    cfg = _write(tmp_path, ROOT.replace("neg_tau_sq", payoff).replace("horizon: 6", "horizon: 4"))
    out = tmp_path / "e"
    assert main(["enumerate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    _, cols, rows = read_table(out / "sg_pairs.tsv", "pairs")
    assert cols == ["node", "partner", "flavor", "margin"]
    assert (len(rows) == 0) == empty
    if payoff == "neg_tau_sq":
        assert all(len(r[0]) > len(r[1]) for r in rows)
    if payoff == "running_max":
        _, _, wit = read_table(out / "sg_witnesses.tsv", "witnesses")
        assert wit and all(r[3] == "^-" for r in wit)


def test_enumerate_with_flow(tmp_path):
    cfg = _write(tmp_path, ROOT)
    main(["solve", "--config", str(cfg), "--out", str(tmp_path / "s")])
    out = tmp_path / "e"
    # the optimum stops everything by depth 2, so no first component can continue
    assert main(["enumerate", "--config", str(cfg), "--out", str(out), "--flow", str(tmp_path / "s" / "flow.tsv")]) == 0
    assert (out / "sg_star_pairs.tsv").exists() and _summary(out)["n_sg_star_pairs"] == 0
    write_flow(tmp_path / "late.tsv", late_stop_flow(6))
    assert main(["enumerate", "--config", str(cfg), "--out", str(out), "--flow", str(tmp_path / "late.tsv")]) == 0
    _, _, rows = read_table(out / "sg_star_pairs.tsv", "pairs")
    assert ["^+-", "^", "SG_STAR", "8"] in rows


def test_batch(tmp_path):
    d = tmp_path / "configs"
    d.mkdir()
    _write(d, RUNNING_MAX, "a.yaml")
    _write(d, RUNNING_MAX.replace('[[-1, "1/2"], [1, "1/2"]]', '[[-4, "1/2"], [4, "1/2"]]'), "b.yaml")
    _write(d, "horizon: 0\n", "c.yaml")
    out = tmp_path / "out"
    code = main(["batch", "--config", str(d), "--out", str(out), "--workers", "2"])
    s = _summary(out)
    assert s["configs"] == {"a": 0, "b": EXIT_INFEASIBLE, "c": EXIT_CONFIG}
    assert code == EXIT_INFEASIBLE
    assert _value(_summary(out / "a")["P"]) == F(1, 2)


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, RUNNING_MAX)
    r = subprocess.run(
        [sys.executable, "-m", "stopgo", "solve", "--config", str(cfg), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0 and "P=1/2" in r.stdout
