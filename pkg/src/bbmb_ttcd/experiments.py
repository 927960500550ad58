"""Experiment driver: ladders of TTCD/NCD runs, error tables, energies, CSV output.

Every run is internally sequential. Independent runs (ladder rungs, parameter
pairs, schemes) fan out over a thread pool when ``threads > 1``; results are
merged in config order so the CSV content does not depend on scheduling.
"""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import diagnostics
from .errors import SolverError
from .mesh import make_space_grid
from .problems import builtin_problems
from .schemes import IterationPolicy, solve_ncd
from .twogrid import run_ttcd

ERROR_FMT = "%.5e"
RATE_FMT = "%.4f"
TIME_FMT = "%.2f"
ENERGY_FMT = "%.12f"

TABLE_COLUMNS = [
    "problem", "mu", "lambda", "axis", "tau_c", "tau_f", "h", "M", "N_c", "N_f", "metric",
    "error_ttcd", "rate_ttcd", "cpu_ttcd", "error_ncd", "rate_ncd", "cpu_ncd", "iter_max",
]


@dataclass
class RunResult:
    """One scheme run at one rung; ``traj`` is the fine-step trajectory."""

    scheme: str
    mu: float
    lam: float
    h: Fraction
    tau_c: Fraction
    beta_tau: int
    traj: object
    cpu: float
    iterations: int
    coarse: object = None
    timings: dict = field(default_factory=dict)


@dataclass
class RunReport:
    command: str
    config: object
    rows: list = field(default_factory=list)
    records: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    perturbation: list = field(default_factory=list)
    max_iterations: int = 0
    files: list = field(default_factory=list)

    def summary_lines(self):
        out = []
        for r in self.rows:
            out.append(
                f"mu={r['mu']} lambda={r['lambda']} tau_c={r['tau_c']} h={r['h']} "
                f"{r['metric']}: ttcd={r['error_ttcd'] or '-'} (rate {r['rate_ttcd'] or '-'}, {r['cpu_ttcd'] or '-'} s) "
                f"ncd={r['error_ncd'] or '-'} (rate {r['rate_ncd'] or '-'}, {r['cpu_ncd'] or '-'} s)"
            )
        for e in self.energies:
            out.append(f"{e['scheme']} mu={e['mu']} lambda={e['lambda']}: E0={ENERGY_FMT % e['E0']} "
                       f"max|E^k-E^0|={e['drift']:.3e}")
            if self.command == "invariant":
                t, values = e["t"], e["series"].values
                for whole in range(int(np.floor(t[-1] + 1e-9)) + 1):
                    k = int(np.argmin(np.abs(t - whole)))
                    out.append(f"    t={whole}: E={ENERGY_FMT % values[k]}")
        for p in self.perturbation:
            out.append(f"mu={p['mu']} lambda={p['lambda']} zeta={p['zeta_amp']:.3e}: response {p['response']:.5e}")
        out.append(f"max fixed-point iterations per step: {self.max_iterations}")
        return out


# -- building blocks ---------------------------------------------------------

def make_params(cfg, mu, lam):
    prob = builtin_problems()[cfg.problem]
    if cfg.problem == "custom":
        return prob.make(mu, lam, amplitude=cfg.amplitude, mode=cfg.mode, a=float(cfg.a), L=float(cfg.L))
    return prob.make(mu, lam)


def has_exact(cfg):
    return builtin_problems()[cfg.problem].has_exact


def policy_of(cfg):
    return IterationPolicy(cfg.tol, cfg.max_iter, cfg.guard)


def run_scheme(cfg, scheme, mu, lam, h=None, tau_c=None, params=None):
    """One TTCD run, or one NCD run on the fine step ``tau_c / beta_tau``."""
    h = cfg.h if h is None else h
    tau_c = cfg.tau_c if tau_c is None else tau_c
    cfg_run = replace(cfg, h=h, tau_c=tau_c)
    grid = make_space_grid(float(cfg.a), float(cfg.L), cfg_run.M)
    params = params or make_params(cfg, mu, lam)
    policy = policy_of(cfg)
    context = dict(scheme=scheme, mu=mu, lam=lam, h=str(h), tau_c=str(tau_c))
    try:
        if scheme == "ttcd":
            run = run_ttcd(grid, params, float(cfg.T), cfg_run.N_c, cfg.beta_tau, policy, cfg.source_rule)
            return RunResult(scheme, mu, lam, h, tau_c, cfg.beta_tau, run.fine, run.timings["total"],
                             run.max_iterations, run.coarse, dict(run.timings))
        traj = solve_ncd(grid, params, cfg_run.N_f, float(cfg_run.tau_f), policy, cfg.source_rule)
        return RunResult(scheme, mu, lam, h, tau_c, cfg.beta_tau, traj, traj.wall_time,
                         traj.max_iterations, timings={"total": traj.wall_time})
    except SolverError as exc:
        raise exc.with_context(**context)


def _schemes(cfg):
    return ("ttcd", "ncd") if cfg.scheme == "both" else (cfg.scheme,)


def _steps(cfg):
    """Rungs to run; self-convergence gets one extra halving as reference."""
    if cfg.axis == "none":
        return [cfg.tau_c]
    ladder = list(cfg.ladder)
    if not has_exact(cfg):
        ladder.append(ladder[-1] / 2)
    return ladder


def _job_args(cfg, step):
    if cfg.axis == "space":
        return dict(h=step, tau_c=cfg.tau_c)
    if cfg.axis == "time":
        return dict(h=cfg.h, tau_c=step)
    return dict(h=cfg.h, tau_c=cfg.tau_c)


def _execute(jobs, threads):
    """Run ``jobs`` (callables) and return results in order.

    On failure returns ``(results_prefix, exc)`` where the prefix holds
    every job before the first failing one.
    """
    results = []
    if threads <= 1:
        for job in jobs:
            try:
                results.append(job())
            except SolverError as exc:
                return results, exc
        return results, None
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        for i, fut in enumerate(futures):
            try:
                results.append(fut.result())
            except SolverError as exc:
                for rest in futures[i + 1:]:
                    rest.cancel()
                return results, exc
    return results, None


# -- tables ------------------------------------------------------------------

def _fmt(fmt, value):
    return "" if value is None or (isinstance(value, float) and math.isnan(value)) else fmt % value


def _errors_for(cfg, runs, params):
    """Error per rung (``None`` when it cannot be formed) and the metric name."""
    if has_exact(cfg):
        return [diagnostics.max_error_vs_exact(r.traj, params.exact) for r in runs], "inf"
    if cfg.axis == "time":
        out = [diagnostics.self_error_time(a.traj, b.traj) for a, b in zip(runs, runs[1:])]
        return out + [None] * (len(runs) - len(out)), "inf_t"
    if cfg.axis == "space":
        out = [diagnostics.self_error_space(a.traj, b.traj) for a, b in zip(runs, runs[1:])]
        return out + [None] * (len(runs) - len(out)), "inf_s"
    return [None] * len(runs), "none"


def _rates(errors):
    out = [None]
    for e0, e1 in zip(errors, errors[1:]):
        out.append(math.log2(e0 / e1) if e0 and e1 and e0 > 0 and e1 > 0 else None)
    return out


def _rows_for_pair(cfg, mu, lam, by_scheme, n_rows, records):
    params = make_params(cfg, mu, lam)
    cols = {}
    for scheme, runs in by_scheme.items():
        errs, metric = _errors_for(cfg, runs, params)
        errs = errs[:n_rows]
        cols[scheme] = (errs, _rates(errs) if cfg.rates else [None] * len(errs), runs, metric)
    metric = next(iter(cols.values()))[3] if cols else "none"
    steps = _steps(cfg)[:n_rows]
    rows = []
    for i, step in enumerate(steps):
        args = _job_args(cfg, step)
        rc = replace(cfg, **args)
        row = {
            "problem": cfg.problem, "mu": f"{mu:g}", "lambda": f"{lam:g}", "axis": cfg.axis,
            "tau_c": str(rc.tau_c), "tau_f": str(rc.tau_f), "h": str(rc.h), "M": str(rc.M),
            "N_c": str(rc.N_c), "N_f": str(rc.N_f), "metric": metric,
        }
        iters = []
        for scheme in ("ttcd", "ncd"):
            if scheme in cols and i < len(cols[scheme][0]):
                errs, rts, runs, _ = cols[scheme]
                records.append({"scheme": scheme, "mu": mu, "lambda": lam, "h": rc.h, "tau_c": rc.tau_c,
                                "metric": metric, "error": errs[i], "rate": rts[i], "cpu": runs[i].cpu,
                                "timings": runs[i].timings, "iterations": runs[i].iterations})
                row[f"error_{scheme}"] = _fmt(ERROR_FMT, errs[i])
                row[f"rate_{scheme}"] = _fmt(RATE_FMT, rts[i])
                row[f"cpu_{scheme}"] = _fmt(TIME_FMT, runs[i].cpu)
                iters.append(runs[i].iterations)
            else:
                row[f"error_{scheme}"] = row[f"rate_{scheme}"] = row[f"cpu_{scheme}"] = ""
        row["iter_max"] = str(max(iters)) if iters else ""
        rows.append(row)
    return rows


def _write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow(r)


def _write_table_files(out_dir, cfg, rows, report):
    os.makedirs(out_dir, exist_ok=True)
    table = os.path.join(out_dir, "table.csv")
    _write_csv(table, TABLE_COLUMNS, rows)
    pareto_rows, blocks = [], []
    step_col = "h" if cfg.axis == "space" else "tau_f"
    for scheme in _schemes(cfg):
        for mu, lam in cfg.pairs:
            sel = [r for r in rows if r["mu"] == f"{mu:g}" and r["lambda"] == f"{lam:g}" and r[f"error_{scheme}"]]
            for r in sel:
                pareto_rows.append({"scheme": scheme, "mu": r["mu"], "lambda": r["lambda"],
                                    "step": r[step_col], "cpu_seconds": r[f"cpu_{scheme}"],
                                    "error": r[f"error_{scheme}"]})
            if sel:
                lines = [f"# scheme={scheme} mu={mu:g} lambda={lam:g} x={step_col} y=error"]
                for r in sel:
                    lines.append(f"{float(Fraction(r[step_col])):.10g} {r[f'error_{scheme}']} {r[f'cpu_{scheme}']}")
                blocks.append("\n".join(lines))
    pareto = os.path.join(out_dir, "pareto.csv")
    _write_csv(pareto, ["scheme", "mu", "lambda", "step", "cpu_seconds", "error"], pareto_rows)
    order = os.path.join(out_dir, "order.dat")
    with open(order, "w", encoding="utf-8") as fh:
        # gnuplot: one data block per (scheme, pair), addressed with `index`
        fh.write("\n\n\n".join(blocks) + ("\n" if blocks else ""))
    report.files += [table, pareto, order]


def _energy_rows(traj, mu, lam, series, scheme_label):
    t = traj.t
    return [
        {"scheme": scheme_label, "mu": f"{mu:g}", "lambda": f"{lam:g}", "k": str(k),
         "t": "%.10g" % t[k], "energy": ENERGY_FMT % v, "drift": "%.3e" % (v - series.values[0])}
        for k, v in enumerate(series.values)
    ]


def _energies(results, report, energy_rows):
    for res in results:
        series = diagnostics.energy_fine(res.traj, res.mu, res.lam)
        energy_rows += _energy_rows(res.traj, res.mu, res.lam, series, res.scheme)
        report.energies.append({"scheme": res.scheme, "mu": res.mu, "lambda": res.lam,
                                "E0": float(series.values[0]), "drift": series.max_abs_drift,
                                "series": series, "t": res.traj.t})
        if res.coarse is not None:
            cs = diagnostics.energy_coarse(res.coarse, res.mu, res.lam)
            energy_rows += _energy_rows(res.coarse, res.mu, res.lam, cs, "ncd-coarse")
            report.energies.append({"scheme": "ncd-coarse", "mu": res.mu, "lambda": res.lam,
                                    "E0": float(cs.values[0]), "drift": cs.max_abs_drift,
                                    "series": cs, "t": res.coarse.t})


ENERGY_COLUMNS = ["scheme", "mu", "lambda", "k", "t", "energy", "drift"]


# -- commands ----------------------------------------------------------------

def run_experiment(cfg, out_dir=None, serial=False, command="run"):
    """Run the configured sweep (or single run) and write ``table.csv``,
    ``pareto.csv`` and ``order.dat`` (plus ``energy.csv`` when requested).

    On a solver failure the rows completed so far are written before the
    error is re-raised.
    """
    out_dir = out_dir or cfg.out_dir
    threads = 1 if serial else cfg.threads
    steps = _steps(cfg)
    schemes = _schemes(cfg)
    keys = [(pi, si, scheme) for pi in range(len(cfg.pairs)) for si in range(len(steps)) for scheme in schemes]

    def job(key):
        pi, si, scheme = key
        mu, lam = cfg.pairs[pi]
        return lambda: run_scheme(cfg, scheme, mu, lam, **_job_args(cfg, steps[si]))

    results, failure = _execute([job(k) for k in keys], threads)
    report = RunReport(command, cfg)
    done = dict(zip(keys, results))
    n_show = len(cfg.ladder) if cfg.axis != "none" else 1
    for pi, (mu, lam) in enumerate(cfg.pairs):
        by_scheme = {}
        for scheme in schemes:
            runs = []
            for si in range(len(steps)):
                if (pi, si, scheme) not in done:
                    break
                runs.append(done[(pi, si, scheme)])
            by_scheme[scheme] = runs
        complete = min(len(r) for r in by_scheme.values())
        if not has_exact(cfg) and cfg.axis != "none":
            complete = max(complete - 1, 0)
        complete = min(complete, n_show)
        report.rows += _rows_for_pair(cfg, mu, lam, by_scheme, complete, report.records)
    report.max_iterations = max((r.iterations for r in results), default=0)
    _write_table_files(out_dir, cfg, report.rows, report)
    if cfg.energy:
        energy_rows = []
        _energies(results, report, energy_rows)
        path = os.path.join(out_dir, "energy.csv")
        _write_csv(path, ENERGY_COLUMNS, energy_rows)
        report.files.append(path)
    for res in results:
        res.traj = res.coarse = None  # drop the large arrays
    if failure is not None:
        raise failure.with_context(partial_rows=len(report.rows), out_dir=out_dir)
    return report


def run_convergence(cfg, axis, out_dir=None, serial=False):
    return run_experiment(cfg.with_axis(axis), out_dir, serial, command=f"converge-{axis}")


def run_invariant(cfg, out_dir=None, serial=False):
    """Energy study: one run per (mu, lambda) pair, full ``energy.csv``."""
    cfg = replace(cfg, axis="none", energy=True)
    return run_experiment(cfg, out_dir, serial, command="invariant")


def zeta_mode(cfg, amp):
    a, L = float(cfg.a), float(cfg.L)

    def zeta(x):
        return amp * np.sin(2.0 * np.pi * (np.asarray(x) - a) / L)

    return zeta


def _source_perturbed(params, cfg, amp):
    if amp == 0.0:
        return params
    r = zeta_mode(cfg, amp)
    base = params.source
    return replace(params, source=lambda x, t: (base(x, t) if base else 0.0) + r(x), exact=None)


def run_perturbation(cfg, zeta_amp=None, out_dir=None, serial=False):
    """Initial-data (and optional source) perturbation study at ``zeta`` and ``zeta/2``."""
    zeta_amp = cfg.zeta_amp if zeta_amp is None else zeta_amp
    if not zeta_amp > 0:
        raise ValueError(f"zeta amplitude must be positive, got {zeta_amp}")
    out_dir = out_dir or cfg.out_dir
    scheme = "ncd" if cfg.scheme == "ncd" else "ttcd"
    report = RunReport("perturb", cfg)
    jobs = []
    for mu, lam in cfg.pairs:
        base = make_params(cfg, mu, lam)
        jobs.append(lambda mu=mu, lam=lam, p=base: run_scheme(cfg, scheme, mu, lam, params=p))
        for amp in (zeta_amp, zeta_amp / 2):
            frac = amp / zeta_amp
            pert = _source_perturbed(base.perturbed(zeta_mode(cfg, amp)), cfg, cfg.source_amp * frac)
            jobs.append(lambda mu=mu, lam=lam, p=pert: run_scheme(cfg, scheme, mu, lam, params=p))
    results, failure = _execute(jobs, 1 if serial else cfg.threads)
    if failure is not None:
        raise failure
    rows = []
    for i, (mu, lam) in enumerate(cfg.pairs):
        base, full, half = results[3 * i:3 * i + 3]
        r_full = diagnostics.perturbation_response(base.traj, full.traj)
        r_half = diagnostics.perturbation_response(base.traj, half.traj)
        for amp, resp in ((zeta_amp, r_full), (zeta_amp / 2, r_half)):
            report.perturbation.append({"mu": mu, "lambda": lam, "zeta_amp": amp, "response": resp})
            rows.append({"scheme": scheme, "mu": f"{mu:g}", "lambda": f"{lam:g}", "zeta_amp": "%.6e" % amp,
                         "source_amp": "%.6e" % (cfg.source_amp * amp / zeta_amp),
                         "response": ERROR_FMT % resp,
                         "ratio": RATE_FMT % (r_full / r_half) if amp == zeta_amp and r_half > 0 else ""})
    report.max_iterations = max(r.iterations for r in results)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "perturb.csv")
    _write_csv(path, ["scheme", "mu", "lambda", "zeta_amp", "source_amp", "response", "ratio"], rows)
    report.files.append(path)
    return report
