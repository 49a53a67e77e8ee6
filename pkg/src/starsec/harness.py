"""Monte Carlo experiment runner: sweeps, aggregation, and figure protocols."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .conic import SolveSettings
from .driver import run_ao
from .metrics import check_feasibility
from .scenario import (
    SystemConfig,
    derive_run_seed,
    desk_default,
    paper_default,
    sample_geometry,
    with_targets,
)
from .channel import sample_channels
from .subproblems import BASELINES, sensing_only

CSV_HEADER = "param,value,baseline,mean_omega,stderr_omega,mean_iters,n_infeasible,n_runs"

SWEEPABLE = (
    "power_dbm",
    "n_ris_elements",
    "n_bs_antennas",
    "n_comm_users",
    "beampattern_ratio_db",
    "n_sense_targets",
)

FEASIBILITY_TOL = 1e-5


@dataclass(frozen=True)
class SweepSpec:
    """One parameter sweep over a set of baselines and seeds."""

    param: str
    values: tuple
    baselines: tuple
    runs: int
    master_seed: int
    figure: str = ""
    scale: str = "desk"
    secondary_param: Optional[str] = None
    secondary_values: tuple = ()
    convergence: bool = False    # emit per-iteration rows instead of per-value rows

    def validate(self) -> "SweepSpec":
        if self.param not in SWEEPABLE:
            raise ValueError(f"unknown sweep parameter {self.param!r}")
        if not self.values:
            raise ValueError("value list must be nonempty")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        for b in self.baselines:
            if b not in BASELINES:
                raise ValueError(f"unknown baseline {b!r}")
        if self.secondary_param is not None and self.secondary_param not in SWEEPABLE:
            raise ValueError(f"unknown secondary parameter {self.secondary_param!r}")
        return self


@dataclass
class RunRecord:
    """Everything persisted about one realization."""

    figure: str
    param: str
    value: float
    baseline: str
    run_index: int
    seed: int
    status: str
    feasible: bool
    worst_slack: float
    omega: float                 # oracle min total secrecy at the final design
    omega_solver: float
    iterations: int
    omega_trace: list
    solver_time_s: float
    n_bs_antennas: int
    n_ris_elements: int
    n_comm_users: int
    n_sense_targets: int
    power_dbm: float
    beampattern_ratio_db: float
    label: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def apply_param(config: SystemConfig, param: str, value) -> SystemConfig:
    if param == "power_dbm":
        return replace(config, power_budget_dbm=float(value)).validate()
    if param == "n_ris_elements":
        return replace(config, n_ris_elements=int(value)).validate()
    if param == "n_bs_antennas":
        return replace(config, n_bs_antennas=int(value)).validate()
    if param == "n_comm_users":
        return replace(config, n_comm_users=int(value)).validate()
    if param == "beampattern_ratio_db":
        return replace(config, beampattern_ratio_db=float(value)).validate()
    if param == "n_sense_targets":
        return with_targets(config, int(value))
    raise ValueError(f"unknown parameter {param!r}")


def run_single(
    config: SystemConfig,
    baseline: str,
    seed: int,
    settings: Optional[SolveSettings] = None,
) -> tuple:
    """One realization end to end: geometry, channels, AO, feasibility audit.

    Returns ``(trace, feasibility_report)``.
    """
    geometry = sample_geometry(config, seed)
    channels = sample_channels(config, geometry, seed)
    consts = sensing_only(channels, config, settings)
    trace = run_ao(channels, config, baseline, seed, settings=settings, consts=consts)
    feas = check_feasibility(
        channels, trace.final_design, trace.final_report, trace.final_sensing, config
    )
    return trace, feas


def _record_from_trace(
    trace, feas, config, figure, param, value, baseline, run_index, seed, label
) -> RunRecord:
    return RunRecord(
        figure=figure,
        param=param,
        value=float(value),
        baseline=baseline,
        run_index=run_index,
        seed=seed,
        status=trace.status,
        feasible=bool(trace.status != "infeasible" and feas.feasible(FEASIBILITY_TOL)),
        worst_slack=float(feas.worst),
        omega=float(trace.oracle_omega),
        omega_solver=float(trace.solver_omega),
        iterations=trace.n_iterations,
        omega_trace=[float(w) for w in trace.omega_values],
        solver_time_s=float(trace.total_time),
        n_bs_antennas=config.n_bs_antennas,
        n_ris_elements=config.n_ris_elements,
        n_comm_users=config.n_comm_users,
        n_sense_targets=config.n_sense_targets,
        power_dbm=config.power_budget_dbm,
        beampattern_ratio_db=config.beampattern_ratio_db,
        label=label,
    )


def _run_task(args) -> RunRecord:
    (base_dict, param, value, secondary_param, secondary_value,
     baseline, run_index, master_seed, figure) = args
    from .scenario import config_from_dict

    label = baseline
    if secondary_param is not None:
        label = f"{baseline}|{secondary_param}={secondary_value:g}"
    seed = derive_run_seed(master_seed, run_index)
    config = None
    try:
        config = apply_param(config_from_dict(base_dict), param, value)
        if secondary_param is not None:
            config = apply_param(config, secondary_param, secondary_value)
        trace, feas = run_single(config, baseline, seed)
        return _record_from_trace(
            trace, feas, config, figure, param, value, baseline, run_index, seed, label
        )
    except Exception as exc:  # a hard failure is recorded, the sweep continues
        if config is None:
            config = config_from_dict(base_dict)
        return RunRecord(
            figure=figure, param=param, value=float(value), baseline=baseline,
            run_index=run_index, seed=seed, status=f"error:{type(exc).__name__}",
            feasible=False, worst_slack=float("-inf"), omega=float("nan"),
            omega_solver=float("nan"), iterations=0, omega_trace=[],
            solver_time_s=0.0, n_bs_antennas=config.n_bs_antennas,
            n_ris_elements=config.n_ris_elements, n_comm_users=config.n_comm_users,
            n_sense_targets=config.n_sense_targets, power_dbm=config.power_budget_dbm,
            beampattern_ratio_db=config.beampattern_ratio_db, label=label,
        )


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list
    rows: list          # aggregated CSV rows (dicts)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for row in self.rows:
            lines.append(
                f"{row['param']},{row['value']:g},{row['baseline']},"
                f"{row['mean_omega']:.10g},{row['stderr_omega']:.10g},"
                f"{row['mean_iters']:.6g},{row['n_infeasible']},{row['n_runs']}"
            )
        return "\n".join(lines) + "\n"


def _aggregate_point(param, value, label, records) -> dict:
    good = [r for r in records if r.feasible]
    omegas = np.array([r.omega for r in good], dtype=float)
    iters = np.array([r.iterations for r in good], dtype=float)
    n = omegas.shape[0]
    mean = float(np.mean(omegas)) if n else float("nan")
    stderr = float(np.std(omegas, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return {
        "param": param,
        "value": float(value),
        "baseline": label,
        "mean_omega": mean,
        "stderr_omega": stderr,
        "mean_iters": float(np.mean(iters)) if n else float("nan"),
        "n_infeasible": len(records) - n,
        "n_runs": len(records),
    }


def _aggregate_convergence(spec: SweepSpec, records) -> list:
    """Per-iteration mean objective, shorter traces padded with their last value."""
    rows = []
    labels = sorted({r.label for r in records})
    for label in labels:
        recs = [r for r in records if r.label == label and r.feasible and r.omega_trace]
        if not recs:
            continue
        depth = max(len(r.omega_trace) for r in recs)
        for it in range(depth):
            vals = np.array(
                [r.omega_trace[min(it, len(r.omega_trace) - 1)] for r in recs]
            )
            n = vals.shape[0]
            rows.append(
                {
                    "param": "iteration",
                    "value": float(it + 1),
                    "baseline": label,
                    "mean_omega": float(np.mean(vals)),
                    "stderr_omega": float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
                    "mean_iters": float(np.mean([r.iterations for r in recs])),
                    "n_infeasible": sum(
                        1 for r in records if r.label == label and not r.feasible
                    ),
                    "n_runs": sum(1 for r in records if r.label == label),
                }
            )
    return rows


def run_sweep(
    spec: SweepSpec,
    base_config: Optional[SystemConfig] = None,
    jobs: int = 1,
    out_dir=None,
) -> SweepResult:
    """Execute every (value, baseline, run) cell and aggregate.

    Run seeds depend only on the run index, so every sweep value and baseline
    sees the same channel draws (paired comparisons). Aggregation sorts the
    records first and is therefore independent of execution order.
    """
    spec.validate()
    if base_config is None:
        base_config = desk_default() if spec.scale == "desk" else paper_default()
    from .scenario import config_to_dict

    base_dict = config_to_dict(base_config)
    secondary = (
        [(spec.secondary_param, v) for v in spec.secondary_values]
        if spec.secondary_param is not None
        else [(None, None)]
    )
    tasks = []
    for value in spec.values:
        for sec_param, sec_value in secondary:
            for baseline in spec.baselines:
                for run_index in range(spec.runs):
                    tasks.append(
                        (base_dict, spec.param, value, sec_param, sec_value,
                         baseline, run_index, spec.master_seed, spec.figure)
                    )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]

    records.sort(key=lambda r: (r.value, r.label, r.run_index))
    if spec.convergence:
        rows = _aggregate_convergence(spec, records)
    else:
        rows = []
        for value in spec.values:
            labels = sorted({r.label for r in records if r.value == float(value)})
            for label in labels:
                cell = [
                    r for r in records
                    if r.value == float(value) and r.label == label
                ]
                rows.append(_aggregate_point(spec.param, value, label, cell))

    result = SweepResult(spec=spec, records=records, rows=rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = spec.figure or spec.param
        (out / f"{stem}.csv").write_text(result.to_csv(), encoding="utf-8")
        with open(out / f"{stem}_runs.jsonl", "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(rec.to_json() + "\n")
    return result


# ---------------------------------------------------------------------------
# figure protocols
# ---------------------------------------------------------------------------

_ALL = BASELINES
_CONV_BASELINES = ("rsma-star-opt", "rsma-ris-conv", "rsma-star-rand", "sdma-star-opt")
_RIS_BASELINES = ("rsma-star-opt", "rsma-ris-conv", "rsma-star-rand", "rsma-no-ris")
_MA_BASELINES = ("rsma-star-opt", "sdma-star-opt")


def figure_protocols(name: str, scale: str = "desk", master_seed: int = 20250101) -> SweepSpec:
    """Canned sweep grids for the shipped figure panels.

    ``paper`` scale uses the full-size scenario with 200 runs; ``desk`` scale
    shrinks the array sizes and run count for quick turnaround while keeping
    the same sweep axes.
    """
    if scale not in ("desk", "paper"):
        raise ValueError("scale must be 'desk' or 'paper'")
    runs = 200 if scale == "paper" else 20
    if name == "fig2":
        return SweepSpec(
            param="power_dbm", values=(30.0,), baselines=_CONV_BASELINES,
            runs=runs, master_seed=master_seed, figure="fig2", scale=scale,
            convergence=True,
        ).validate()
    if name == "fig3a":
        values = (10.0, 15.0, 20.0, 25.0, 30.0) if scale == "paper" else (10.0, 20.0, 30.0)
        return SweepSpec(
            param="power_dbm", values=values, baselines=_ALL,
            runs=runs, master_seed=master_seed, figure="fig3a", scale=scale,
        ).validate()
    if name == "fig3b":
        values = (8, 16, 32, 64) if scale == "paper" else (4, 8, 16)
        return SweepSpec(
            param="n_ris_elements", values=values, baselines=_RIS_BASELINES,
            runs=runs, master_seed=master_seed, figure="fig3b", scale=scale,
        ).validate()
    if name == "fig3c":
        if scale == "paper":
            values, users = (6, 8, 10, 12), (4, 6)
        else:
            values, users = (4, 6, 8), (2, 3)
        return SweepSpec(
            param="n_bs_antennas", values=values, baselines=_MA_BASELINES,
            runs=runs, master_seed=master_seed, figure="fig3c", scale=scale,
            secondary_param="n_comm_users", secondary_values=users,
        ).validate()
    if name == "fig3d":
        values = (-3.0, -2.0, -1.0, -0.5, -0.3) if scale == "paper" else (-3.0, -1.0, -0.3)
        return SweepSpec(
            param="beampattern_ratio_db", values=values, baselines=_MA_BASELINES,
            runs=runs, master_seed=master_seed, figure="fig3d", scale=scale,
            secondary_param="n_sense_targets", secondary_values=(2, 3),
        ).validate()
    raise ValueError(f"unknown figure {name!r}")


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def selftest(verbose: bool = True) -> int:
    """Fast invariant suites; returns the number of failures."""
    import numpy.random as npr

    from . import conic as cn
    from .metrics import rate_report, transmit_power, zero_design, no_ris_profile
    from .scenario import db_to_linear, linear_to_db
    from .surrogate import mm_coefficients, surrogate_rate, tangent_log

    failures = 0

    def check(label: str, ok: bool) -> None:
        nonlocal failures
        if verbose:
            print(f"[selftest] {label}: {'PASS' if ok else 'FAIL'}")
        if not ok:
            failures += 1

    # conversion round-trip
    xs = np.linspace(-100, 100, 41)
    check(
        "db round-trip",
        all(abs(linear_to_db(db_to_linear(x)) - x) < 1e-12 for x in xs),
    )

    # geometry quotas
    cfg = desk_default()
    ok = True
    for i in range(50):
        geo = sample_geometry(cfg, derive_run_seed(cfg.master_seed, i))
        ok &= geo.cu_regions.count("T") == cfg.n_transmission_users
        ok &= bool(np.all(geo.cu_distances_to(geo.ris_position) <= cfg.geometry.cu_radius_m + 1e-9))
    check("geometry quotas and radius", ok)

    # channel determinism
    geo = sample_geometry(cfg, 7)
    ch1 = sample_channels(cfg, geo, 1234)
    ch2 = sample_channels(cfg, geo, 1234)
    check("channel determinism", bool(np.array_equal(ch1.h_bs_ris, ch2.h_bs_ris)))

    # surrogate tightness on one random instance
    rng = npr.default_rng(0)
    from .subproblems import apply_baseline, initial_design
    dp = initial_design(ch1, cfg, apply_baseline("rsma-star-opt"), seed=99)
    coeffs = mm_coefficients(ch1, dp)
    rep = rate_report(ch1, dp)
    tight = max(
        abs(surrogate_rate(coeffs, ch1, dp, "p", k) - rep.private_rate[k])
        for k in range(cfg.n_comm_users)
    )
    check("surrogate tightness", tight < 1e-9)

    # tangent dominance on a grid
    grid = np.linspace(0.1, 10.0, 25)
    check(
        "tangent dominance",
        all(tangent_log(d, db) >= math.log2(d) - 1e-12 for d in grid for db in grid),
    )

    # hermitian embedding round-trip
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = (h + h.conj().T) / 2
    back = cn.extract_hermitian(cn.embed_hermitian(h))
    check("embedding round-trip", float(np.max(np.abs(back - h))) < 1e-12)

    # tiny conic solve
    prog = cn.ConicProgram("lp")
    t = prog.add_real("t", 1)
    prog.add_nonneg(cn.AffineExpr.constant([5.0]) - prog.expr(t), "cap")
    prog.set_objective_max(prog.expr(t))
    res = cn.solve(prog)
    check("lp solve", res.ok and abs(res.objective - 5.0) < 1e-6)

    # transmit power oracle
    dp0 = zero_design(4, 2, no_ris_profile(8))
    check("zero design power", transmit_power(dp0) == 0.0)

    if verbose:
        print(f"[selftest] {'OK' if failures == 0 else f'{failures} failure(s)'}")
    return failures
