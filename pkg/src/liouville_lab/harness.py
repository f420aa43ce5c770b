"""Simulation campaigns and the universal-bound envelope fit.

A campaign runs a family of initial data through one (nonlinearity, geometry,
perturbation) problem, drops runs that leave the prescribed cone, and fits the
smallest constants (C_tilde, C) with

    |U(t)|_inf <= C_tilde + C (t^{-beta} + (T - t)^{-beta})

at every recorded sample, where T is the run's estimated blow-up time
(T = inf for global runs, which removes the second term).

Campaign config (a plain dict, usually loaded from JSON)::

    {
      "id": "nodal-p3",
      "nonlinearity": {"kind": "gradient-coupled", "q": 0, "beta": 1},
      "geometry": {"kind": "line", "size": 10, "left": "neumann", "right": "neumann"},
      "perturbation": {"lam": 0, "gamma": 0},
      "solver": {"nx": 400},
      "cone": {"preset": "K", "caps": [4, 4, 4, 4]},
      "initial_data": {"kind": "random-in-cone", "amplitude": 1, "modes": 4},
      "runs": 20, "seed": 7, "scale": 1.0,
      "t_stop": 5.0, "save_every": 10
    }

`initial_data` may also be a list of explicit presets, one per run.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from . import io
from .dynamics import (Geometry, HeatSolver, Perturbation, SolverConfig, SolverError, fit_blowup_rate,
                       initial_data, ode_flat_solution, Line)
from .nonlinearity import ScalarPower, from_config as field_from_config
from .zeronumber import ConeSpec, cone_membership

log = logging.getLogger(__name__)

THREADS_ENV = "LIOUVILLE_LAB_THREADS"


class EmptyCampaign(ValueError):
    pass


class MissingTrace(FileNotFoundError):
    pass


@dataclass
class RunResult:
    run_id: str
    status: str  # "ok", "excluded" (left the cone) or "failed"
    t: np.ndarray = None
    sup: np.ndarray = None
    dt: np.ndarray = None
    blowup: bool = False
    T: float = math.inf
    beta_fit: float = math.nan
    message: str = ""
    trace_ref: str = ""


@dataclass
class EnvelopeReport:
    campaign_id: str
    beta: float
    C_tilde: float
    C: float
    violations: int
    samples: int
    runs: list  # (run id, trace ref) of runs used in the fit
    T: dict  # run id -> horizon
    excluded: list
    failures: list  # (run id, message)
    whole_space: bool
    results: list = field(default_factory=list, repr=False)
    config: dict = field(default_factory=dict, repr=False)
    out_dir: str = ""

    def bound(self, t, T) -> np.ndarray:
        return self.C_tilde + self.C * envelope_g(np.asarray(t, float), T, self.beta)

    def summary(self) -> dict:
        return {
            "campaign_id": self.campaign_id, "beta": self.beta, "C_tilde": self.C_tilde, "C": self.C,
            "violations": self.violations, "samples": self.samples, "whole_space": self.whole_space,
            "runs": [list(r) for r in self.runs], "T": dict(self.T), "excluded": list(self.excluded),
            "failures": [list(f) for f in self.failures],
        }


def envelope_g(t: np.ndarray, T: float, beta: float) -> np.ndarray:
    """t^{-beta} + (T - t)^{-beta}, the second term dropped when T = inf."""
    g = t ** (-beta)
    if math.isfinite(T):
        g = g + (T - t) ** (-beta)
    return g


def fit_envelope(samples, beta: float, force_zero_offset: bool):
    """Minimal (C_tilde, C) dominating every (t, |U|, T) sample.

    With `force_zero_offset`, C_tilde = 0 and C = max |U| / g.  Otherwise the
    linear programme  min C_tilde + C  s.t.  C_tilde + C g_i >= |U_i|, both
    constants nonnegative, is solved.
    """
    g = np.concatenate([envelope_g(t, T, beta) for t, _, T in samples])
    u = np.concatenate([s for _, s, _ in samples])
    if force_zero_offset:
        return 0.0, float(np.max(u / g))
    res = linprog(c=[1.0, 1.0], A_ub=-np.column_stack([np.ones_like(g), g]), b_ub=-u,
                  bounds=[(0, None), (0, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"envelope fit failed: {res.message}")
    Ct = float(res.x[0])
    # raise C to absorb the LP's feasibility tolerance: every sample is dominated exactly
    C = max(float(res.x[1]), float(np.max((u - Ct) / g)))
    return Ct, C


def _run_presets(config: dict) -> list:
    data = config["initial_data"]
    if isinstance(data, list):
        presets = [dict(p) for p in data]
    else:
        count = int(config.get("runs", 1))
        seed = int(config.get("seed", 0))
        presets = [dict(data, seed=seed + i) for i in range(count)]
    return presets


def _one_run(args) -> RunResult:
    run_id, preset, config = args
    try:
        geom = Geometry.from_config(config["geometry"])
        fld = field_from_config(config["nonlinearity"])
        pert = Perturbation(**config.get("perturbation", {}))
        solver = HeatSolver(geom, fld, pert, SolverConfig(**config.get("solver", {})))
        U0 = float(config.get("scale", 1.0)) * initial_data(geom, solver.x, fld.N, preset)
        trace = solver.run_until(solver.state(U0), t_stop=float(config.get("t_stop", 10.0)),
                                 save_every=int(config.get("save_every", 10)))
        if trace.reason and trace.reason != "sup-norm":
            raise SolverError(f"solver stopped: {trace.reason}")
        res = RunResult(run_id, "ok", trace.t, trace.sup, trace.dt, blowup=trace.blowup)
        if "cone" in config:
            spec = ConeSpec.from_config(config["cone"])
            for snap in trace.snapshots:
                if not cone_membership(snap, spec).in_cone:
                    res.status = "excluded"
                    res.message = f"left the cone at t = {snap.t:.6g}"
                    break
        if trace.blowup:
            rep = fit_blowup_rate(trace)
            res.T, res.beta_fit = float(rep.T_est), float(rep.beta_fit)
        return res
    except Exception as exc:  # one bad run must not sink the campaign
        return RunResult(run_id, "failed", message=f"{type(exc).__name__}: {exc}")


def workers_from_env(default: int = None) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    return default or (os.cpu_count() or 1)


def run_campaign(config: dict, out_dir=None, workers: int = None) -> EnvelopeReport:
    """Run every configured simulation, filter by cone, and fit the envelope.

    With `out_dir`, each run's history goes to runs/<id>/trace.csv and the
    fitted report to campaign.json.
    """
    presets = _run_presets(config)
    if not presets:
        raise EmptyCampaign("the campaign lists no runs")
    fld = field_from_config(config["nonlinearity"])
    beta = 1.0 / (fld.p - 1.0)
    geom = Geometry.from_config(config["geometry"])
    pert = Perturbation(**config.get("perturbation", {}))
    whole = geom.whole_space_like and pert.is_zero

    jobs = [(f"run-{i:03d}", p, config) for i, p in enumerate(presets)]
    n_workers = min(workers or workers_from_env(), len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    results.sort(key=lambda r: r.run_id)

    failures = [(r.run_id, r.message) for r in results if r.status == "failed"]
    excluded = [r.run_id for r in results if r.status == "excluded"]
    for rid, msg in failures:
        log.warning("run %s failed: %s", rid, msg)
    for rid in excluded:
        log.info("run %s excluded (left the cone)", rid)
    used = [r for r in results if r.status == "ok"]
    if not used:
        raise EmptyCampaign("no run survived (all failed or left the cone)")

    samples = []
    for r in used:
        keep = r.t > 0
        samples.append((r.t[keep], r.sup[keep], r.T))
    Ct, C = fit_envelope(samples, beta, whole)
    viol = sum(int(np.sum(s > (Ct + C * envelope_g(t, T, beta)) * (1 + 1e-12))) for t, s, T in samples)

    out = Path(out_dir) if out_dir is not None else None
    for r in results:
        if r.status != "failed":
            r.trace_ref = f"runs/{r.run_id}/trace.csv"
            if out is not None:
                io.write_csv(out / r.trace_ref, ["t", "sup", "dt"], zip(r.t, r.sup, r.dt))
    rep = EnvelopeReport(
        campaign_id=str(config.get("id", "campaign")), beta=beta, C_tilde=Ct, C=C, violations=viol,
        samples=int(sum(s[0].size for s in samples)), runs=[(r.run_id, r.trace_ref) for r in used],
        T={r.run_id: r.T for r in results if r.status != "failed"}, excluded=excluded, failures=failures,
        whole_space=whole, results=results, config=config, out_dir=str(out) if out is not None else "")
    if out is not None:
        io.write_json(out / "campaign.json", {"config": config, "envelope": rep.summary(),
                                              "status": {r.run_id: r.status for r in results}})
    return rep


def scaled(config: dict, factor: float) -> dict:
    """Same campaign with initial data multiplied by `factor`."""
    out = dict(config)
    out["scale"] = float(config.get("scale", 1.0)) * factor
    out["id"] = f"{config.get('id', 'campaign')}-x{factor:g}"
    return out


# ---------------------------------------------------------------- reports

def _load(source):
    if isinstance(source, EnvelopeReport):
        if not source.out_dir:
            raise MissingTrace("campaign was run without an output directory; traces were not written")
        return Path(source.out_dir), source.summary(), {r.run_id: r.status for r in source.results}
    base = Path(source)
    path = base / "campaign.json"
    if not path.exists():
        raise MissingTrace(f"{path} not found")
    import json

    data = json.loads(path.read_text())
    return base, data["envelope"], data["status"]


def report(source, out_dir=None) -> dict:
    """Write report.md, envelope.svg and summary.csv next to the run traces.

    `source` is an EnvelopeReport produced with an output directory, or that
    directory itself.  Traces are read back from runs/<id>/trace.csv; a
    missing file raises MissingTrace.  Output is a pure function of the files.
    """
    base, env, status = _load(source)
    out = Path(out_dir) if out_dir is not None else base
    beta, Ct, C = float(env["beta"]), float(env["C_tilde"]), float(env["C"])
    T = {k: float(v) for k, v in env["T"].items()}
    failures = dict((rid, msg) for rid, msg in env["failures"])

    rows, series = [], []
    for rid in sorted(status):
        if status[rid] == "failed":
            rows.append([rid, "failed", "", "", "", "", ""])
            continue
        path = base / "runs" / rid / "trace.csv"
        if not path.exists():
            raise MissingTrace(f"trace for {rid} missing: {path}")
        _, data = io.read_csv(path)
        t, sup = data[:, 0], data[:, 1]
        keep = t > 0
        ratio = sup[keep] / (Ct + C * envelope_g(t[keep], T[rid], beta))
        rows.append([rid, status[rid], int(math.isfinite(T[rid])), T[rid], float(sup.max()), int(keep.sum()),
                     float(ratio.max()) if ratio.size else math.nan])
        if status[rid] == "ok":
            horizon = T[rid] if math.isfinite(T[rid]) else float(t[-1])
            series.append((rid, t[keep] / horizon, ratio))
    header = ["run_id", "status", "blowup", "T", "max_sup", "samples", "max_ratio"]
    io.write_csv(out / "summary.csv", header, rows)
    io.write_text(out / "envelope.svg", io.svg_lineplot(
        series, title=f"|U| / envelope, C_tilde = {Ct:.4g}, C = {C:.4g}", xlabel="t / T",
        ylabel="|U(t)| / bound", hline=1.0))

    lines = [f"# Envelope campaign `{env['campaign_id']}`", "",
             f"Bound: |U(t)| <= C_tilde + C (t^-beta + (T - t)^-beta), beta = {beta:.6g}", "",
             "| quantity | value |", "|---|---|",
             f"| C_tilde | {Ct:.6g} |", f"| C | {C:.6g} |",
             f"| C_tilde forced to 0 (whole-space geometry, no linear terms) | {'yes' if env['whole_space'] else 'no'} |",
             f"| samples | {env['samples']} |", f"| violations | {env['violations']} |",
             f"| runs used | {len(env['runs'])} |", f"| runs excluded (left the cone) | {len(env['excluded'])} |",
             f"| failed runs | {len(failures)} |", "",
             "## Runs", "", "| run | status | T | max sup | max ratio |", "|---|---|---|---|---|"]
    for r in rows:
        if r[1] == "failed":
            lines.append(f"| {r[0]} | failed | | | |")
        else:
            lines.append(f"| {r[0]} | {r[1]} | {r[3]:.6g} | {r[4]:.6g} | {r[6]:.6g} |")
    lines += ["", "## Failures", ""]
    lines += [f"- {rid}: {msg}" for rid, msg in sorted(failures.items())] or ["none"]
    lines += ["", "## Excluded runs", ""]
    lines += [f"- {rid}" for rid in env["excluded"]] or ["none"]
    io.write_text(out / "report.md", "\n".join(lines) + "\n")
    return {"report": out / "report.md", "svg": out / "envelope.svg", "summary": out / "summary.csv"}


# ---------------------------------------------------------------- rate table

def rate_table(ps=(2.0, 3.0, 4.0), u0: float = 2.0, nx: int = 32, safety: float = 0.05) -> list:
    """Blow-up exponent fitted from flat data on a reflecting segment, per p.

    Rows are dicts with p, beta_exact = 1/(p-1), beta_fit, T_fit and the
    closed-form T = u0^{1-p}/(p-1); a sanity sample of the ODE solution is
    compared at t = T/2.
    """
    rows = []
    for p in ps:
        geom = Line(1.0, "neumann", "neumann")
        solver = HeatSolver(geom, ScalarPower(p=float(p)), config=SolverConfig(nx=nx, safety=safety))
        trace = solver.run_until(solver.state(np.full((1, nx + 1), u0)))
        fit = fit_blowup_rate(trace)
        T = u0 ** (1 - p) / (p - 1)
        mid = int(np.argmin(np.abs(trace.t - T / 2)))
        rows.append({"p": float(p), "beta_exact": 1 / (p - 1), "beta_fit": fit.beta_fit, "T_fit": fit.T_est,
                     "T_exact": T,
                     "ode_rel_err_mid": float(abs(trace.sup[mid] / ode_flat_solution(u0, p, trace.t[mid]) - 1))})
    return rows
