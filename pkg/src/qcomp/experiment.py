"""Seeded Monte Carlo sweeps over target SINR and DAC resolution.

Every sweep point ``(sinr_db[g], bits[b], realization r)`` draws one
channel set and solves both designs on it. Results are written as CSV:

``runs.csv``
    one row per ``(algorithm, sinr_db, bits, realization)``.
``summary.csv``
    per ``(algorithm, sinr_db, bits)``: counts, means and percentiles.
``antenna_cdf.csv``
    (preset ``antenna_cdf``) empirical CDF of all antenna powers.
``papr_table.csv``
    (preset ``papr_table``) mean PAPR of both designs and the reduction.
``trace.csv``
    (preset ``single_run``) dual objective and max antenna power per
    outer iteration.

Columns ending in ``_mW`` are linear, ``_dBm`` absolute, ``_dB`` ratios,
``_dB_rel_noise`` relative to the receiver noise power, ``_rel`` unitless.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import outer
from .config import ExperimentSpec
from .dual import SolverError
from .metrics import empirical_cdf
from .netgen import realize
from .quant import format_bits

log = logging.getLogger(__name__)

ALGORITHMS = ("baseline", "pa")

RUN_COLUMNS = (
    "preset", "algorithm", "sinr_db", "bits", "realization",
    "n_cells", "n_users", "n_antennas",
    "converged", "stop_reason", "error",
    "outer_iterations", "inner_iterations", "best_iteration",
    "noise_power_mW",
    "max_antenna_power_mW", "max_antenna_power_dBm", "max_antenna_power_dB_rel_noise",
    "total_power_mW", "total_power_dBm",
    "dual_objective_mW", "duality_gap_rel",
    "papr_dB", "operating_range_dB",
    "min_achieved_sinr_dB", "max_sinr_error_rel",
    "gain_vs_baseline_dB",
)

SUMMARY_STATS = (
    "max_antenna_power_dBm", "max_antenna_power_dB_rel_noise", "total_power_dBm",
    "papr_dB", "operating_range_dB", "duality_gap_rel", "gain_vs_baseline_dB",
)
PERCENTILES = (10, 50, 90)

CDF_COLUMNS = ("algorithm", "sinr_db", "bits", "realization", "antenna_power_mW", "antenna_power_dBm", "cdf")
PAPR_COLUMNS = ("sinr_db", "bits", "n_runs", "papr_baseline_dB", "papr_pa_dB", "papr_reduction_dB")
TRACE_COLUMNS = ("iteration", "dual_objective_mW", "dual_bound_per_antenna_mW", "max_antenna_power_mW", "max_antenna_power_dBm")


@dataclass
class RunResult:
    """Outcome of one sweep point: both designs on one channel set."""

    index: tuple
    rows: list
    powers: dict
    trace: Optional[list] = None


@dataclass
class ExperimentResult:
    runs: list
    summary: list
    files: list
    all_converged: bool


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else float("nan")


def _task(args) -> RunResult:
    spec, gi, bi, r = args
    net = spec.network_for(spec.sinr_db[gi], spec.bits[bi])
    key = (r,) if spec.common_channels else (r, gi, bi)
    ch = realize(net, *key)
    quant = net.quant
    gamma = net.target_sinr()
    noise = ch.noise_var
    base = dict(
        preset=spec.preset, sinr_db=spec.sinr_db[gi], bits=format_bits(spec.bits[bi]), realization=r,
        n_cells=net.n_cells, n_users=net.n_users, n_antennas=net.n_antennas, noise_power_mW=noise,
    )
    rows, powers, trace = [], {}, None
    p0 = {}
    for algo in ALGORITHMS:
        row = dict(base, algorithm=algo)
        solve = outer.solve_baseline if algo == "baseline" else outer.solve_pa
        try:
            _, _, rep = solve(ch, quant, gamma, spec.solver)
        except SolverError as exc:
            log.warning("%s failed at sinr=%s bits=%s r=%d: %s", algo, base["sinr_db"], base["bits"], r, exc)
            row.update(converged=False, stop_reason="error", error=str(exc).replace("\n", " "))
            rows.append(row)
            continue
        p0[algo] = rep.max_antenna_power
        sinr = rep.achieved_sinr
        row.update(
            converged=rep.converged,
            stop_reason=rep.stop_reason or "single_solve",
            error="",
            outer_iterations=rep.outer_iterations,
            inner_iterations=rep.inner_iterations,
            best_iteration=rep.best_iteration,
            max_antenna_power_mW=rep.max_antenna_power,
            max_antenna_power_dBm=_db(rep.max_antenna_power),
            max_antenna_power_dB_rel_noise=_db(rep.max_antenna_power / noise),
            total_power_mW=rep.total_power,
            total_power_dBm=_db(rep.total_power),
            dual_objective_mW=rep.dual_objective,
            duality_gap_rel=rep.duality_gap_rel,
            papr_dB=rep.papr_db,
            operating_range_dB=rep.operating_range_db,
            min_achieved_sinr_dB=_db(float(np.min(sinr))),
            max_sinr_error_rel=rep.sinr_error(gamma),
        )
        powers[algo] = rep.antenna_power.reshape(-1)
        if algo == "pa" and spec.preset == "single_run":
            trace = list(zip(range(1, len(rep.dual_trace) + 1), rep.dual_trace, rep.primal_trace))
        rows.append(row)
    if "baseline" in p0 and "pa" in p0:
        rows[-1]["gain_vs_baseline_dB"] = _db(p0["baseline"] / p0["pa"])
    return RunResult(index=(gi, bi, r), rows=rows, powers=powers, trace=trace)


def tasks(spec: ExperimentSpec) -> list:
    """Sweep points in output order: SINR, then bits, then realization."""
    return [
        (spec, gi, bi, r)
        for gi in range(len(spec.sinr_db))
        for bi in range(len(spec.bits))
        for r in range(spec.n_realizations)
    ]


def _execute(spec: ExperimentSpec, jobs: int) -> list:
    work = tasks(spec)
    if jobs <= 1 or len(work) == 1:
        return [_task(t) for t in work]
    with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
        # map keeps submission order regardless of completion order
        return list(pool.map(_task, work, chunksize=1))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def write_csv(path: Path, columns: Iterable[str], rows: Iterable[dict]) -> Path:
    columns = list(columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    return path


def summarize(rows: list) -> list:
    """Aggregate run rows per ``(algorithm, sinr_db, bits)``, in first-seen order."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row["algorithm"], row["sinr_db"], row["bits"]), []).append(row)
    out = []
    for (algo, sinr_db, bits), members in groups.items():
        ok = [m for m in members if m.get("converged")]
        entry = dict(algorithm=algo, sinr_db=sinr_db, bits=bits, n_runs=len(members), n_converged=len(ok))
        lin = [m["max_antenna_power_mW"] for m in ok]
        entry["max_antenna_power_mW_mean"] = float(np.mean(lin)) if lin else float("nan")
        for stat in SUMMARY_STATS:
            vals = np.array([m[stat] for m in ok if m.get(stat) is not None], dtype=float)
            entry[f"{stat}_mean"] = float(np.mean(vals)) if vals.size else float("nan")
            for q in PERCENTILES:
                entry[f"{stat}_p{q}"] = float(np.percentile(vals, q)) if vals.size else float("nan")
        out.append(entry)
    return out


def summary_columns() -> list:
    cols = ["algorithm", "sinr_db", "bits", "n_runs", "n_converged", "max_antenna_power_mW_mean"]
    for stat in SUMMARY_STATS:
        cols.append(f"{stat}_mean")
        cols.extend(f"{stat}_p{q}" for q in PERCENTILES)
    return cols


def papr_rows(summary: list) -> list:
    by_key = {(s["algorithm"], s["sinr_db"], s["bits"]): s for s in summary}
    rows = []
    for s in summary:
        if s["algorithm"] != "pa":
            continue
        b = by_key.get(("baseline", s["sinr_db"], s["bits"]))
        if b is None:
            continue
        rows.append(dict(
            sinr_db=s["sinr_db"], bits=s["bits"], n_runs=s["n_runs"],
            papr_baseline_dB=b["papr_dB_mean"], papr_pa_dB=s["papr_dB_mean"],
            papr_reduction_dB=b["papr_dB_mean"] - s["papr_dB_mean"],
        ))
    return rows


def cdf_rows(results: list, spec: ExperimentSpec) -> list:
    rows = []
    for res in results:
        gi, bi, r = res.index
        for algo in ALGORITHMS:
            if algo not in res.powers:
                continue
            xs, ps = empirical_cdf(res.powers[algo])
            for x, p in zip(xs, ps):
                rows.append(dict(
                    algorithm=algo, sinr_db=spec.sinr_db[gi], bits=format_bits(spec.bits[bi]), realization=r,
                    antenna_power_mW=float(x), antenna_power_dBm=_db(float(x)), cdf=float(p),
                ))
    return rows


def format_summary(summary: list) -> str:
    """Fixed-width console table of the aggregate results."""
    head = f"{'algorithm':<9} {'sinr_dB':>7} {'bits':>4} {'ok/n':>7} {'p0_dBm':>8} {'p0/noise_dB':>11} {'PAPR_dB':>7} {'gain_dB':>7} {'gap_rel':>9}"
    lines = [head, "-" * len(head)]
    for s in summary:
        gain = s["gain_vs_baseline_dB_mean"]
        lines.append(
            f"{s['algorithm']:<9} {s['sinr_db']:>7.2f} {s['bits']:>4} "
            f"{s['n_converged']:>3}/{s['n_runs']:<3} {s['max_antenna_power_dBm_mean']:>8.2f} "
            f"{s['max_antenna_power_dB_rel_noise_mean']:>11.2f} {s['papr_dB_mean']:>7.2f} "
            f"{'' if math.isnan(gain) else f'{gain:.2f}':>7} {s['duality_gap_rel_mean']:>9.2e}"
        )
    return "\n".join(lines)


def run_experiment(
    spec: ExperimentSpec,
    out_dir,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
    figures: bool = True,
) -> ExperimentResult:
    """Run every sweep point, write the CSV files (and figures) to ``out_dir``."""
    if seed is not None:
        spec = dataclasses.replace(spec, network=dataclasses.replace(spec.network, seed=int(seed)))
    jobs = (os.cpu_count() or 1) if jobs is None else int(jobs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    results = _execute(spec, jobs)
    runs = [row for res in results for row in res.rows]
    summary = summarize(runs)
    files = [
        write_csv(out / "runs.csv", RUN_COLUMNS, runs),
        write_csv(out / "summary.csv", summary_columns(), summary),
    ]
    cdf = papr = trace = None
    if spec.preset == "antenna_cdf":
        cdf = cdf_rows(results, spec)
        files.append(write_csv(out / "antenna_cdf.csv", CDF_COLUMNS, cdf))
    if spec.preset == "papr_table":
        papr = papr_rows(summary)
        files.append(write_csv(out / "papr_table.csv", PAPR_COLUMNS, papr))
    if spec.preset == "single_run" and results[0].trace:
        n_tx = spec.network.n_cells * spec.network.n_antennas
        trace = [
            dict(iteration=n, dual_objective_mW=d, dual_bound_per_antenna_mW=d / n_tx,
                 max_antenna_power_mW=p, max_antenna_power_dBm=_db(p))
            for n, d, p in results[0].trace
        ]
        files.append(write_csv(out / "trace.csv", TRACE_COLUMNS, trace))

    if figures:
        from . import plotting

        files.extend(plotting.render(spec.preset, out, summary=summary, cdf=cdf, papr=papr, trace=trace))

    all_ok = all(row.get("converged") for row in runs)
    return ExperimentResult(runs=runs, summary=summary, files=files, all_converged=all_ok)
