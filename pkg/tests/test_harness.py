import csv
import subprocess
import sys
import textwrap

import pytest

from aoiq import harness
from aoiq.cli import main
from aoiq.errors import ConfigError

SMALL = """
seed: 3
defaults: {total_slots: 50000, warmup_slots: 1000}
cases:
  - name: good
    discipline: fcfs_ber_g_1
    arrival: {rate: 0.3}
    service: {family: geometric, p: 0.75}
  - name: overloaded
    discipline: fcfs_ber_g_1
    arrival: {rate: 0.9}
    service: {family: geometric, p: 0.75}
  - name: lcfs
    discipline: lcfs_gg1_preemptive
    arrival: {family: uniform, low: 1, high: 3}
    service: {family: geometric, p: 0.5}
    check_invariants: true
"""

SWEEP = """
seed: 1
defaults: {total_slots: 20000, warmup_slots: 1000}
cases:
  - name: v
    discipline: fcfs_ber_g_1_vacation
    arrival: {rate: 0.3}
    service: {family: geometric, p: 0.75}
    vacation: {family: deterministic, value: 1}
    vary:
      arrival.rate: [0.3, 0.6]
      vacation.family: [deterministic, uniform, geometric]
      vacation.mean: [1, 2]
"""


def write(tmp_path, text, name="exp.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


# -- parsing --------------------------------------------------------------------

def test_sweep_expands_in_order_with_shared_seed():
    cfg = harness.parse_config(SWEEP)
    assert len(cfg.cases) == 12
    assert cfg.cases[0].name == "v/rate=0.3/family=deterministic/mean=1"
    assert cfg.cases[-1].name == "v/rate=0.6/family=geometric/mean=2"
    assert {c.seed for c in cfg.cases} == {1}
    u = next(c for c in cfg.cases if c.name.endswith("uniform/mean=2"))
    assert (u.spec.vacation.values.min(), u.spec.vacation.values.max()) == (1, 3)
    g = cfg.cases[-1]
    assert g.spec.vacation.mean() == pytest.approx(2)


def test_seed_override_and_defaults():
    cfg = harness.parse_config(SMALL, seed_override=99)
    assert [c.seed for c in cfg.cases] == [99, 99, 99]
    assert cfg.cases[0].total_slots == 50000 and cfg.cases[0].tolerance == 0.01
    assert cfg.cases[0].outputs == frozenset({"analytic", "simulated"})
    assert cfg.cases[2].check_invariants and not cfg.cases[0].check_invariants


@pytest.mark.parametrize("text,line,needle", [
    ("cases:\n  - name: a\n    discipline: fifo\n    arrival: 0.3\n    service: {family: geometric, p: 0.5}\n", 2, "discipline"),
    ("cases:\n  - name: a\n    discipline: fcfs_ber_g_1\n    arrival: 0.3\n    service: {family: geometric, p: 0.5}\n    tolerence: 0.1\n", 2, "tolerence"),
    ("cases:\n  - name: a\n    discipline: fcfs_ber_g_1\n    arrival: 0.3\n    service: {family: poisson, mean: 2}\n", 5, "poisson"),
    ("cases:\n  - name: a\n    discipline: fcfs_ber_g_1\n    arrival: {rate: 0.3}\n    service: [1, 2]\n", 2, "mapping"),
    ("cases: [\n", 2, "YAML"),
    ("cases: []\n", 1, "non-empty"),
])
def test_config_errors_carry_line_and_field(text, line, needle):
    with pytest.raises(ConfigError) as info:
        harness.parse_config(text)
    assert info.value.line == line
    assert needle in str(info.value)
    assert str(info.value).startswith(f"line {line}")


def test_structural_spec_errors_abort_before_running():
    text = SMALL.replace("    arrival: {rate: 0.3}\n", "    arrival: {family: geometric, p: 0.3}\n", 1)
    with pytest.raises(ConfigError, match="Bernoulli"):
        harness.parse_config(text)


def test_sweep_values_must_be_finite_and_valid():
    with pytest.raises(ConfigError, match="finite"):
        harness.parse_config(SWEEP.replace("[1, 2]", "[1, .nan]"))
    with pytest.raises(ConfigError, match="must be an integer"):
        harness.parse_config(SWEEP.replace("[1, 2]", "[1, 2.5]"))
    with pytest.raises(ConfigError, match="non-empty list"):
        harness.parse_config(SWEEP.replace("[1, 2]", "[]"))


def test_duplicate_names_rejected():
    text = SMALL.replace("name: lcfs", "name: good")
    with pytest.raises(ConfigError, match="duplicate"):
        harness.parse_config(text)


# -- running and output -------------------------------------------------------------

def test_failing_case_does_not_abort_others(tmp_path):
    rows = harness.run_experiments(harness.parse_config(SMALL))
    assert [r.status for r in rows] == ["ok", "unstable", "ok"]
    bad = rows[1]
    for col in harness.RESULT_COLUMNS:
        assert getattr(bad, col) is None
    assert rows[2].invariant_violations and not any(rows[2].invariant_violations.values())
    out = harness.emit_csv(rows, tmp_path / "r.csv")
    data = list(csv.DictReader(open(out)))
    assert list(data[0]) == list(harness.CSV_COLUMNS)
    assert data[1]["status"] == "unstable"
    assert all(data[1][c] == "" for c in harness.RESULT_COLUMNS)
    assert data[1]["lambda"] == "0.9"
    summary = harness.emit_summary(rows)
    assert summary.splitlines()[0].startswith("FAIL overloaded: unstable")
    assert summary.splitlines()[-1] == "2/3 cases ok"
    long = list(csv.DictReader(open(tmp_path / "r_long.csv")))
    assert {r["metric"] for r in long if r["case_name"] == "good"} == {
        "analytic_peak", "analytic_avg", "sim_peak", "sim_peak_se", "sim_avg", "sim_avg_se",
        "rel_err_peak", "rel_err_avg"}
    assert not [r for r in long if r["case_name"] == "overloaded"]


def test_ok_rows_satisfy_tolerance_rule():
    for r in harness.run_experiments(harness.parse_config(SMALL)):
        if r.ok:
            assert abs(r.analytic_peak - r.sim_peak) <= max(0.01 * r.analytic_peak, 3 * r.sim_peak_se)
            assert abs(r.analytic_avg - r.sim_avg) <= max(0.01 * r.analytic_avg, 3 * r.sim_avg_se)


def test_tight_tolerance_flags_mismatch():
    text = SMALL.replace("warmup_slots: 1000}", "warmup_slots: 1000, tolerance: 0.000001}")
    rows = harness.run_experiments(harness.parse_config(text))
    # 3 standard errors still protect against pure noise, so only assert consistency
    for r in rows:
        if r.status not in ("ok", "unstable"):
            assert "mismatch" in r.status


def test_empty_table_is_header_only(tmp_path):
    harness.emit_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(harness.CSV_COLUMNS) + "\n"


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="cannot write"):
        harness.emit_csv([], blocker / "sub" / "r.csv")


def test_byte_identical_rerun_and_parallel_order(tmp_path):
    cfg = harness.parse_config(SWEEP)
    a = harness.csv_text(harness.run_experiments(cfg))
    b = harness.csv_text(harness.run_experiments(harness.parse_config(SWEEP)))
    c = harness.csv_text(harness.run_experiments(cfg, jobs=3))
    assert a == b == c
    assert len(a.splitlines()) == 13


def test_bounds_output_columns():
    text = SWEEP.replace("vacation.mean: [1, 2]", "vacation.mean: [2]").replace(
        "defaults: {", "defaults: {outputs: [analytic, simulated, bounds], ")
    rows = harness.run_experiments(harness.parse_config(text))
    for r in rows:
        assert r.bound_lb is not None and r.bound_lb <= r.bound_ub
        assert r.analytic_avg is None and r.analytic_peak is not None


# -- CLI ----------------------------------------------------------------------------------

def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, SMALL.replace("arrival: {rate: 0.9}", "arrival: {rate: 0.2}"), "good.yaml")
    assert main(["run", str(good), "--out", str(tmp_path / "g.csv")]) == 0
    assert (tmp_path / "g.csv").exists() and (tmp_path / "g_long.csv").exists()
    mixed = write(tmp_path, SMALL, "mixed.yaml")
    assert main(["run", str(mixed), "--out", str(tmp_path / "m.csv")]) == 1
    broken = write(tmp_path, "cases:\n  - name: a\n    discipline: nope\n", "broken.yaml")
    assert main(["run", str(broken)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_cli_list_cases_and_stdout(tmp_path, capsys):
    p = write(tmp_path, SWEEP)
    assert main(["run", str(p), "--list-cases"]) == 0
    names = capsys.readouterr().out.split()
    assert len(names) == 12 and names[0] == "v/rate=0.3/family=deterministic/mean=1"
    main(["run", str(p), "--quiet", "--seed", "5"])
    out = capsys.readouterr().out
    assert out.startswith("case_name,discipline,lambda")


def test_cli_output_key_is_relative_to_config(tmp_path):
    p = write(tmp_path, "output: out/res.csv\n" + SMALL.replace("rate: 0.9", "rate: 0.2"))
    assert main(["run", str(p), "--quiet"]) == 0
    assert (tmp_path / "out" / "res.csv").exists()


def test_cli_trace_export(tmp_path):
    p = write(tmp_path, SMALL)
    assert main(["trace", str(p), "--case", "lcfs", "--slots", "40", "--out-dir", str(tmp_path / "t")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "t" / "slots.csv")))
    assert len(rows) == 40
    assert main(["trace", str(p), "--case", "nope"]) == 2


def test_module_entry_point(tmp_path):
    p = write(tmp_path, SWEEP)
    res = subprocess.run([sys.executable, "-m", "aoiq", "run", str(p), "--list-cases"], capture_output=True, text=True)
    assert res.returncode == 0 and len(res.stdout.split()) == 12
