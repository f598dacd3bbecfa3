"""Configuration-driven comparison of closed forms against simulation.

An experiment file is YAML::

    seed: 7
    output: results/ber_g1.csv
    defaults: {total_slots: 1000000, warmup_slots: 10000, tolerance: 0.01}
    cases:
      - name: bg1
        discipline: fcfs_ber_g_1
        arrival: {rate: 0.3}
        service: {family: geometric, p: 0.75}
      - name: vac                       # a sweep block: cartesian product of `vary`
        discipline: fcfs_ber_g_1_vacation
        arrival: {rate: 0.3}
        service: {family: geometric, p: 0.75}
        vacation: {family: deterministic, mean: 1}
        vary:
          arrival.rate: [0.3, 0.6]
          vacation.mean: [1, 2, 3]

Cases without their own ``seed`` use the global one, so the cases of a sweep
share arrival and service draws (common random numbers).
"""
from __future__ import annotations

import copy
import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from . import analytic
from .analytic import FCFS_VACATION, QueueSpec
from .dist import DiscreteDist, from_config
from .errors import AoIError, ConfigError
from .sim import SimConfig, check_trace, estimate_from_trace, simulate_trace

OUTPUT_KINDS = ("analytic", "simulated", "bounds")
DEFAULTS = {
    "total_slots": 1_000_000,
    "warmup_slots": 10_000,
    "tolerance": 0.01,
    "outputs": ["analytic", "simulated"],
    "generation_lag": None,
    "check_invariants": False,
}
CASE_KEYS = {"name", "discipline", "arrival", "service", "vacation", "seed", "vary"} | set(DEFAULTS)
TOP_KEYS = {"seed", "output", "defaults", "cases"}

CSV_COLUMNS = (
    "case_name", "discipline", "lambda", "service_family", "service_mean",
    "vacation_family", "vacation_mean", "analytic_peak", "analytic_avg",
    "bound_lb", "bound_ub", "sim_peak", "sim_peak_se", "sim_avg", "sim_avg_se",
    "rel_err_peak", "rel_err_avg", "status",
)
RESULT_COLUMNS = CSV_COLUMNS[7:17]
LONG_COLUMNS = ("case_name", "discipline", "lambda", "vacation_family", "vacation_mean", "metric", "value")


# -- YAML with line numbers ---------------------------------------------------

class _LineDict(dict):
    line: Optional[int] = None


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    d = _LineDict(loader.construct_pairs(node, deep=True))
    d.line = node.start_mark.line + 1
    return d


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _line(node):
    return getattr(node, "line", None)


# -- configuration --------------------------------------------------------------

@dataclass(frozen=True)
class CaseSpec:
    name: str
    spec: QueueSpec
    total_slots: int
    warmup_slots: int
    seed: int
    tolerance: float
    outputs: frozenset
    generation_lag: Optional[int] = None
    check_invariants: bool = False

    def sim_config(self, trace=False) -> SimConfig:
        return SimConfig(self.spec, self.total_slots, self.warmup_slots, self.seed, trace, self.generation_lag)


@dataclass
class ExperimentConfig:
    cases: list
    seed: int = 0
    output: Optional[str] = None


def load_config(path, seed_override=None) -> ExperimentConfig:
    text = Path(path).read_text()
    return parse_config(text, seed_override)


def parse_config(text: str, seed_override=None) -> ExperimentConfig:
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None) from None
    if not isinstance(doc, dict):
        raise ConfigError("experiment file must be a mapping with a 'cases' list", 1)
    _reject_unknown(doc, TOP_KEYS, "")
    seed = doc.get("seed", 0) if seed_override is None else seed_override
    seed = _as_int(seed, "seed", _line(doc), minimum=0)
    defaults = dict(DEFAULTS)
    user_defaults = doc.get("defaults") or {}
    if not isinstance(user_defaults, dict):
        raise ConfigError("'defaults' must be a mapping", _line(doc), "defaults")
    _reject_unknown(user_defaults, set(DEFAULTS), "defaults")
    defaults.update(user_defaults)
    raw_cases = doc.get("cases")
    if not isinstance(raw_cases, list) or not raw_cases:
        raise ConfigError("'cases' must be a non-empty list", _line(doc), "cases")

    cases = []
    for i, raw in enumerate(raw_cases):
        where = f"cases[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError("each case must be a mapping", _line(doc), where)
        _reject_unknown(raw, CASE_KEYS, where)
        for name, node in _expand(raw, where):
            cases.append(_build_case(name, node, defaults, seed, where))
    names = [c.name for c in cases]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigError(f"duplicate case names: {dupes}", None, "cases")
    return ExperimentConfig(cases, seed, doc.get("output"))


def _reject_unknown(node, allowed, where):
    unknown = sorted(set(node) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", _line(node), where or None)


def _expand(raw, where):
    """Yield (case name, case node); sweep blocks yield one per grid point."""
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("case needs a non-empty string 'name'", _line(raw), where)
    vary = raw.get("vary")
    if vary is None:
        yield name, raw
        return
    if not isinstance(vary, dict) or not vary:
        raise ConfigError("'vary' must map parameter paths to value lists", _line(raw), f"{where}.vary")
    keys = list(vary)
    for k in keys:
        vals = vary[k]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"sweep values for {k!r} must be a non-empty list", _line(vary), f"{where}.vary")
        for v in vals:
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"sweep value {v!r} for {k!r} is not finite", _line(vary), f"{where}.vary")
    base = {k: v for k, v in raw.items() if k != "vary"}
    for combo in itertools.product(*(vary[k] for k in keys)):
        node = copy.deepcopy(base)
        node_line = _line(raw)
        parts = []
        for path, value in zip(keys, combo):
            _set_path(node, path, value, where, node_line)
            parts.append(f"{path.split('.')[-1]}={value}")
        yield f"{name}/" + "/".join(parts), _with_line(node, node_line)


def _with_line(node, line):
    d = _LineDict(node)
    d.line = line
    return d


def _set_path(node, path, value, where, line):
    keys = path.split(".")
    cur = node
    for k in keys[:-1]:
        nxt = cur.get(k)
        if nxt is None:
            nxt = cur[k] = {}
        elif not isinstance(nxt, dict):
            if k == "arrival" and keys[-1] == "rate":
                nxt = cur[k] = {}
            else:
                raise ConfigError(f"cannot set {path!r}: {k!r} is not a mapping", line, f"{where}.vary")
        cur = nxt
    if keys[-1] == "mean" and isinstance(cur, dict):
        # switching to a mean-parameterized law drops the explicit parameters
        for k in ("p", "value", "low", "high"):
            cur.pop(k, None)
    cur[keys[-1]] = value


def _as_int(x, what, line, minimum=None):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not float(x).is_integer():
        raise ConfigError(f"{what} must be an integer, got {x!r}", line, what)
    x = int(x)
    if minimum is not None and x < minimum:
        raise ConfigError(f"{what} must be >= {minimum}, got {x}", line, what)
    return x


def _dist(node, key, where) -> DiscreteDist:
    if not isinstance(node[key], dict):
        raise ConfigError(f"'{key}' must be a distribution mapping", _line(node), f"{where}.{key}")
    return from_config(node[key], f"{where}.{key}")


def _build_case(name, node, defaults, seed, where) -> CaseSpec:
    line = _line(node)
    opts = {k: node.get(k, defaults[k]) for k in DEFAULTS}
    discipline = node.get("discipline")
    if discipline not in analytic.DISCIPLINES:
        raise ConfigError(f"discipline must be one of {analytic.DISCIPLINES}, got {discipline!r}", line, f"{where}.discipline")
    if "service" not in node:
        raise ConfigError("missing 'service' distribution", line, where)
    service = _dist(node, "service", where)
    vacation = _dist(node, "vacation", where) if node.get("vacation") is not None else None

    arrival = node.get("arrival")
    rate = interarrival = None
    if isinstance(arrival, (int, float)) and not isinstance(arrival, bool):
        rate = float(arrival)
    elif isinstance(arrival, dict) and "rate" in arrival:
        _reject_unknown(arrival, {"rate"}, f"{where}.arrival")
        rate = arrival["rate"]
        if isinstance(rate, bool) or not isinstance(rate, (int, float)):
            raise ConfigError(f"arrival rate must be a number, got {rate!r}", _line(arrival), f"{where}.arrival.rate")
    elif isinstance(arrival, dict):
        interarrival = from_config(arrival, f"{where}.arrival")
    else:
        raise ConfigError("'arrival' must be a rate or a distribution mapping", line, f"{where}.arrival")

    try:
        spec = QueueSpec(discipline, service, arrival_rate=rate, interarrival=interarrival, vacation=vacation)
    except ValueError as exc:
        raise ConfigError(str(exc), line, where) from None

    outputs = opts["outputs"]
    if not isinstance(outputs, list) or not set(outputs) <= set(OUTPUT_KINDS):
        raise ConfigError(f"outputs must be a list drawn from {OUTPUT_KINDS}", line, f"{where}.outputs")
    total = _as_int(opts["total_slots"], "total_slots", line, minimum=1000)
    warmup = _as_int(opts["warmup_slots"], "warmup_slots", line, minimum=0)
    if warmup >= total:
        raise ConfigError("warmup_slots must be below total_slots", line, where)
    tol = opts["tolerance"]
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not 0 < tol < 1:
        raise ConfigError(f"tolerance must be a number in (0, 1), got {tol!r}", line, f"{where}.tolerance")
    lag = opts["generation_lag"]
    if lag is not None:
        lag = _as_int(lag, "generation_lag", line, minimum=0)
    case_seed = _as_int(node["seed"], "seed", line, minimum=0) if "seed" in node else seed
    return CaseSpec(name, spec, total, warmup, case_seed, float(tol), frozenset(outputs), lag, bool(opts["check_invariants"]))


# -- running --------------------------------------------------------------------

@dataclass
class ResultRow:
    case_name: str
    discipline: str
    lam: float
    service: DiscreteDist
    vacation: Optional[DiscreteDist]
    analytic_peak: Optional[float] = None
    analytic_avg: Optional[float] = None
    bound_lb: Optional[float] = None
    bound_ub: Optional[float] = None
    sim_peak: Optional[float] = None
    sim_peak_se: Optional[float] = None
    sim_avg: Optional[float] = None
    sim_avg_se: Optional[float] = None
    status: str = "ok"
    notes: list = field(default_factory=list)
    invariant_violations: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def rel_err_peak(self):
        return _rel(self.sim_peak, self.analytic_peak)

    @property
    def rel_err_avg(self):
        return _rel(self.sim_avg, self.analytic_avg)

    def blank_results(self):
        for col in RESULT_COLUMNS:
            if not col.startswith("rel_err"):
                setattr(self, col, None)


def _rel(sim, ana):
    if sim is None or ana is None:
        return None
    return (sim - ana) / ana


def _within(ana, sim, se, tol):
    return abs(ana - sim) <= max(tol * abs(ana), 3.0 * se)


def run_case(case: CaseSpec) -> ResultRow:
    spec = case.spec
    row = ResultRow(case.name, spec.discipline, spec.lam, spec.service, spec.vacation)
    try:
        if "analytic" in case.outputs or "bounds" in case.outputs:
            res = analytic.analyze(spec, bounds="bounds" in case.outputs)
            if "analytic" in case.outputs:
                row.analytic_peak = res.peak_age
                row.analytic_avg = res.avg_age
            if "bounds" in case.outputs and spec.discipline == FCFS_VACATION:
                row.bound_lb = res.avg_age_lower
                row.bound_ub = res.avg_age_upper
                row.notes.append(f"effective upper bound min(A_UB, A_p) = {res.effective_upper!r}")
                eff_upper = res.effective_upper
        if "simulated" in case.outputs:
            trace = simulate_trace(case.sim_config())
            est = estimate_from_trace(trace.ages, case.warmup_slots)
            row.sim_peak, row.sim_peak_se = est.peak_age, est.peak_stderr
            row.sim_avg, row.sim_avg_se = est.avg_age, est.avg_stderr
            if case.check_invariants:
                row.invariant_violations = check_trace(trace)
            del trace
    except AoIError as exc:
        row.status = exc.token
        row.notes.append(str(exc))
        row.blank_results()
        return row

    failures = []
    if row.sim_peak is not None and row.analytic_peak is not None:
        if not _within(row.analytic_peak, row.sim_peak, row.sim_peak_se, case.tolerance):
            failures.append("peak_mismatch")
    if row.sim_avg is not None and row.analytic_avg is not None:
        if not _within(row.analytic_avg, row.sim_avg, row.sim_avg_se, case.tolerance):
            failures.append("avg_mismatch")
    if row.sim_avg is not None and row.bound_lb is not None:
        slack = 3.0 * row.sim_avg_se
        if not row.bound_lb - slack <= row.sim_avg <= eff_upper + slack:
            failures.append("outside_bounds")
    if any(row.invariant_violations.values()):
        failures.append("invariant_violation")
    if failures:
        row.status = "+".join(failures)
    return row


def run_experiments(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """Run every case; rows come back in config order whatever the job count."""
    if jobs <= 1:
        return [run_case(c) for c in cfg.cases]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_case, cfg.cases))


# -- output ---------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _family(d: Optional[DiscreteDist]):
    return "" if d is None else d.family


def _mean(d: Optional[DiscreteDist]):
    return None if d is None else d.mean()


def row_values(row: ResultRow) -> list:
    return [
        row.case_name, row.discipline, row.lam, _family(row.service), _mean(row.service),
        _family(row.vacation), _mean(row.vacation), row.analytic_peak, row.analytic_avg,
        row.bound_lb, row.bound_ub, row.sim_peak, row.sim_peak_se, row.sim_avg, row.sim_avg_se,
        row.rel_err_peak, row.rel_err_avg, row.status,
    ]


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(v) for v in row_values(row)])
    return buf.getvalue()


def long_csv_text(rows) -> str:
    """One metric per line, for plotting tools."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LONG_COLUMNS)
    for row in rows:
        vals = dict(zip(CSV_COLUMNS, row_values(row)))
        for metric in RESULT_COLUMNS:
            if vals[metric] is None:
                continue
            w.writerow([_fmt(v) for v in (
                row.case_name, row.discipline, row.lam, vals["vacation_family"],
                vals["vacation_mean"], metric, vals[metric],
            )])
    return buf.getvalue()


def long_path(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_long{path.suffix or '.csv'}")


def emit_csv(rows, path) -> Path:
    """Write the wide CSV and its long-format sibling; returns the wide path."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(csv_text(rows))
        long_path(path).write_text(long_csv_text(rows))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
    return path


def emit_summary(rows) -> str:
    bad = [r for r in rows if not r.ok]
    good = [r for r in rows if r.ok]
    lines = []
    for r in bad:
        detail = "; ".join(x for x in [_compare_text(r), *r.notes] if x)
        lines.append(f"FAIL {r.case_name}: {r.status} ({detail})")
    for r in good:
        lines.append(f"ok   {r.case_name}: {_compare_text(r)}")
    lines.append(f"{len(good)}/{len(rows)} cases ok")
    return "\n".join(lines)


def _compare_text(r: ResultRow) -> str:
    parts = []
    for label, ana, sim, se in (
        ("peak", r.analytic_peak, r.sim_peak, r.sim_peak_se),
        ("avg", r.analytic_avg, r.sim_avg, r.sim_avg_se),
    ):
        if sim is None and ana is None:
            continue
        a = "-" if ana is None else f"{ana:.4f}"
        s = "-" if sim is None else f"{sim:.4f}+/-{se:.4f}"
        parts.append(f"{label} analytic {a} sim {s}")
    if r.bound_lb is not None:
        parts.append(f"bounds [{r.bound_lb:.4f}, {r.bound_ub:.4f}]")
    return ", ".join(parts)
