"""Command-line entry point: ``liouville-lab <subcommand> [--config PATH] [--seed INT] [--out DIR]``.

Exit codes: 0 success, 1 invalid input (schema, domain or missing files),
2 numerical failure.  Every output lands under the output directory and is a
pure function of (config, seed).
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from . import io

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2
COMMANDS = ("nl-check", "simulate", "rescale", "zeros", "shoot", "schedule", "bounds", "report")


class NumericalFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- shared builders

def _problem(c: dict, seed: int):
    from .dynamics import Geometry, HeatSolver, Perturbation, SolverConfig, initial_data
    from .nonlinearity import from_config

    geom = Geometry.from_config(c["geometry"])
    fld = from_config(c["nonlinearity"])
    solver = HeatSolver(geom, fld, Perturbation(**c.get("perturbation", {})), SolverConfig(**c.get("solver", {})))
    preset = dict(c["initial_data"])
    preset.setdefault("seed", seed)
    U0 = initial_data(geom, solver.x, fld.N, preset)
    return geom, fld, solver, U0


def _simulate(c: dict, seed: int):
    geom, fld, solver, U0 = _problem(c, seed)
    trace = solver.run_until(solver.state(U0), t_stop=c.get("t_stop"), sup_stop=c.get("sup_stop"),
                             save_every=int(c.get("save_every", 50)),
                             max_steps=int(c.get("max_steps", 2_000_000)),
                             with_energy=bool(c.get("with_energy", False)))
    return geom, fld, solver, trace


def _save_trace(trace, out: Path):
    io.write_csv(out / "trace.csv", ["t", "sup_norm", "dt"], zip(trace.t, trace.sup, trace.dt))
    index = []
    for i, snap in enumerate(trace.snapshots):
        name = f"snapshots/snap-{i:05d}.csv"
        cols = [f"u{j + 1}" for j in range(snap.N)]
        io.write_csv(out / name, ["x", *cols], zip(snap.x, *snap.fields))
        entry = {"index": i, "t": snap.t, "step": snap.step, "file": name, "sup_norm": snap.sup_norm}
        if trace.energy is not None:
            entry["energy"] = float(trace.energy[i])
        index.append(entry)
    io.write_json(out / "snapshots.json", {"blowup": trace.blowup, "reason": trace.reason, "snapshots": index})


# ---------------------------------------------------------------- subcommands

def cmd_nl_check(c, seed, out):
    from .nonlinearity import check_identities, from_config

    fld = from_config(c["nonlinearity"])
    rep = check_identities(fld, samples=int(c.get("samples", 1000)), tol=float(c.get("tol", 1e-10)),
                           fd_tol=float(c.get("fd_tol", 1e-6)), seed=seed)
    data = {"nonlinearity": c["nonlinearity"], "seed": seed, **rep.as_dict()}
    io.write_json(out / "nl_check.json", data)
    print(f"{fld.name}: p = {fld.p:g}, N = {fld.N}, samples = {rep.samples}")
    print(f"  Euler residual        {rep.euler:.3e}  (tol {rep.tol:g})")
    print(f"  homogeneity residual  {rep.homogeneity:.3e}  (tol {rep.tol:g})")
    print(f"  gradient residual     {rep.gradient:.3e}  (tol {rep.fd_tol:g})")
    print("  PASSED" if rep.passed else "  FAILED")
    if not rep.passed:
        raise NumericalFailure("identity residuals exceed tolerance")


def cmd_simulate(c, seed, out):
    from .dynamics import InsufficientGrowth, fit_blowup_rate

    _, fld, _, trace = _simulate(c, seed)
    _save_trace(trace, out)
    summary = {"final_t": float(trace.t[-1]), "final_sup": float(trace.sup[-1]), "steps": int(trace.t.size - 1),
               "blowup": trace.blowup, "reason": trace.reason}
    if trace.blowup:
        try:
            fit = fit_blowup_rate(trace)
            summary.update(T_est=fit.T_est, beta_fit=fit.beta_fit, beta_exact=1 / (fld.p - 1),
                           fit_residual=fit.residual)
        except InsufficientGrowth as exc:
            summary["fit_error"] = str(exc)
    io.write_json(out / "summary.json", summary)
    print(io.dumps(summary), end="")


def cmd_rescale(c, seed, out):
    from .selfsimilar import (RescaledFrame, blowup_anchor, check_energy_nonnegative, monotonicity_defect,
                              rescaled_energy_run, verify_GK1, verify_GK2, y_grid)

    geom, fld, solver, U0 = _problem(c, seed)
    frame_cfg = dict(c.get("frame", {}))
    k, a = frame_cfg.get("k", "auto"), frame_cfg.get("a", "auto")
    if k == "auto" or a == "auto":
        k_fit, a_fit = blowup_anchor(solver, U0)
        k = k_fit if k == "auto" else k
        a = a_fit if a == "auto" else a
    if geom.radial:
        a = 0.0
    frame = RescaledFrame(float(k), 1.0 / (fld.p - 1), float(a))
    y = y_grid(frame_cfg.get("radius", 12.0), frame_cfg.get("h", 0.02), radial=geom.radial)
    et = rescaled_energy_run(solver, U0, frame, float(frame_cfg.get("span", 2.0)),
                             float(frame_cfg.get("ds", 0.05)), y=y)
    io.write_csv(out / "energy_trace.csv", ["s", "E", "D", "mass", "gradterm"], et.rows())
    io.write_text(out / "energy.svg", io.svg_lineplot([("E(s)", et.s, et.E), ("D(s)", et.s, et.D)],
                                                      title="Rescaled energy and dissipation", xlabel="s"))
    tol = float(c.get("tol", 1e-6))
    gk2, gk1 = verify_GK2(et, tol), verify_GK1(et, tol)
    summary = {"frame": {"k": frame.k, "a": frame.a, "beta": frame.beta},
               "decay_identity_residual": gk2.max_residual, "decay_identity_scale": gk2.scale, "energy_increases": gk2.violations,
               "mass_identity_residual": gk1.max_residual, "mass_identity_scale": gk1.scale,
               "E_min": float(et.E.min()), "E_nonnegative": check_energy_nonnegative(et),
               "monotonicity_defect": monotonicity_defect(et), "tail_bound": et.tail_bound,
               "samples": int(et.s.size)}
    io.write_json(out / "identities.json", summary)
    print(io.dumps(summary), end="")


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9+-]+", "_", label).strip("_") or "combo"


def cmd_zeros(c, seed, out):
    from .zeronumber import ConeSpec, cone_membership, nonincreasing_after_first, zero_number_trace

    spec = ConeSpec.from_config(c["cone"])
    _, _, _, trace = _simulate(c, seed)
    z = zero_number_trace(trace, spec)
    t = [s.t for s in trace.snapshots]
    labels = list(z)
    io.write_csv(out / "zeros.csv", ["t", *labels], zip(t, *(z[k] for k in labels)))
    for k in labels:
        io.write_csv(out / "zeros" / f"{_slug(k)}.csv", ["t", "z"], zip(t, z[k]))
    summary = {"snapshots": len(t), "initially_in_cone": cone_membership(trace.snapshots[0], spec).in_cone,
               "blowup": trace.blowup,
               "combos": {k: {"initial": int(z[k][0]), "final": int(z[k][-1]),
                              "nonincreasing_after_first": nonincreasing_after_first(z[k])} for k in labels}}
    io.write_json(out / "zeros_summary.json", summary)
    print(io.dumps(summary), end="")


def _xi_grid(spec, N):
    if isinstance(spec, dict):
        ts = np.linspace(spec["start"], spec["stop"], spec["num"])
        d = np.asarray(spec.get("direction", [1.0] * N), float)
        if d.size != N:
            raise ValueError(f"xi direction needs {N} components")
        return [t * d for t in ts]
    return [np.atleast_1d(np.asarray(v, float)) for v in spec]


def cmd_shoot(c, seed, out):
    from .nonlinearity import from_config
    from .stationary import scan
    from .zeronumber import ConeSpec

    fld = from_config(c["nonlinearity"])
    cone = ConeSpec.from_config(c["cone"]) if "cone" in c else ConeSpec()
    kw = {"decay_tol": c["decay_tol"]} if "decay_tol" in c else {}
    table = scan(fld, int(c["n"]), _xi_grid(c["xi"], fld.N), r_max=float(c.get("r_max", 200.0)), cone=cone,
                 mode=c.get("mode", "radial"), **kw)
    rows = table.to_csv_rows()
    io.write_csv(out / "scan.csv", rows[0], rows[1:])
    md = table.markdown()
    io.write_text(out / "scan.md", md)
    print(md, end="")


def cmd_schedule(c, seed, out):
    from .machinery import bootstrap_schedule, ladder, verify_schedule
    import dataclasses

    n, p = int(c["n"]), float(c["p"])
    eta = float(c.get("eta", 1e-3))
    sched = bootstrap_schedule(n, p, c.get("gamma"), eta)
    if c.get("ladder", False):
        lad = ladder(n, p, eta)
        sched = dataclasses.replace(sched, gamma_ladder=lad.gammas, M=lad.M)
    cert = sched.certificate()
    io.write_json(out / "certificate.json", cert)
    print(sched.table())
    strict = [v["slack"] for v in cert["slacks"].values() if v["kind"] == "strict"]
    print(f"\nminimum strict slack = {min(strict):.6g}")
    print(f"certificate verified: {'yes' if verify_schedule(sched) else 'NO'}")
    if not cert["verified"]:
        raise NumericalFailure("schedule failed independent verification")


def cmd_bounds(c, seed, out):
    from .harness import report, run_campaign

    c = dict(c)
    c.setdefault("seed", seed)
    c.pop("output_dir", None)
    env = run_campaign(c, out_dir=out)
    report(env)
    print(f"campaign {env.campaign_id}: C_tilde = {env.C_tilde:.6g}, C = {env.C:.6g}, "
          f"violations = {env.violations}, runs used = {len(env.runs)}, excluded = {len(env.excluded)}, "
          f"failed = {len(env.failures)}")


def cmd_report(c, seed, out):
    from .harness import report

    paths = report(c["campaign_dir"], out_dir=out)
    for k, v in paths.items():
        print(f"{k}: {v}")


HANDLERS = {"nl-check": cmd_nl_check, "simulate": cmd_simulate, "rescale": cmd_rescale, "zeros": cmd_zeros,
            "shoot": cmd_shoot, "schedule": cmd_schedule, "bounds": cmd_bounds, "report": cmd_report}


# ---------------------------------------------------------------- argument handling

class _Parser(argparse.ArgumentParser):
    """Usage errors are invalid input (exit 1); argparse's own code 2 is reserved for numerical failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="liouville-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    parsers = {}
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON run config")
        sp.add_argument("--seed", type=int, help="random seed (overrides the config)")
        sp.add_argument("--out", type=Path, help="output directory (overrides the config)")
        sp.add_argument("--print-schema", action="store_true", help="print the config schema and exit")
        sp.add_argument("-v", "--verbose", action="store_true")
        parsers[name] = sp
    p = parsers["nl-check"]
    p.add_argument("--kind")
    for flag in ("--p", "--q", "--beta", "--delta", "--tol", "--fd-tol"):
        p.add_argument(flag, type=float)
    p.add_argument("--samples", type=int)
    p = parsers["schedule"]
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--ladder", action="store_true", default=None)
    parsers["shoot"].add_argument("--n", type=int)
    parsers["shoot"].add_argument("--r-max", type=float)
    parsers["bounds"].add_argument("--runs", type=int)
    parsers["bounds"].add_argument("--scale", type=float)
    parsers["report"].add_argument("--from", dest="campaign_dir")
    for name in ("simulate", "rescale", "zeros"):
        parsers[name].add_argument("--t-stop", type=float)
    return ap


def _overrides(args) -> dict:
    cmd, o = args.command, {}
    if cmd == "nl-check":
        nl = {k: getattr(args, k) for k in ("kind", "p", "q", "beta", "delta") if getattr(args, k) is not None}
        if nl:
            o["nonlinearity"] = nl
        for k, attr in (("samples", "samples"), ("tol", "tol"), ("fd_tol", "fd_tol")):
            if getattr(args, attr) is not None:
                o[k] = getattr(args, attr)
    elif cmd == "schedule":
        o = {k: getattr(args, k) for k in ("n", "p", "gamma", "eta", "ladder") if getattr(args, k) is not None}
        if "n" in o:
            o["n"] = int(o["n"])
    elif cmd == "shoot":
        if args.n is not None:
            o["n"] = args.n
        if args.r_max is not None:
            o["r_max"] = args.r_max
    elif cmd == "bounds":
        o = {k: getattr(args, k) for k in ("runs", "scale") if getattr(args, k) is not None}
    elif cmd == "report" and args.campaign_dir is not None:
        o["campaign_dir"] = args.campaign_dir
    elif cmd in ("simulate", "rescale", "zeros") and args.t_stop is not None:
        o["t_stop"] = args.t_stop
    return o


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and "kind" not in v:
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cmd = args.command
    if args.print_schema:
        print(cfg.schema_help(cmd))
        return EXIT_OK
    from .dynamics import SolverError
    from .harness import EmptyCampaign, MissingTrace
    from .machinery import NoAdmissibleTime
    from .stationary import StepFailure

    try:
        c = cfg.load(args.config) if args.config else {}
        c = _merge(c, _overrides(args))
        cfg.validate(cmd, c)
        seed = args.seed if args.seed is not None else int(c.get("seed", 20240607))
        out = args.out or Path(c.get("output_dir", f"lab-output/{cmd}"))
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[cmd](c, seed, out)
    except cfg.ConfigError as exc:
        print(f"liouville-lab {cmd}: invalid config: {exc}", file=sys.stderr)
        if exc.schema_path:
            print(f"  schema location: {exc.schema_path}", file=sys.stderr)
        print(f"  run `liouville-lab {cmd} --print-schema` for the full schema", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, EmptyCampaign, SolverError, StepFailure, NoAdmissibleTime, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"liouville-lab {cmd}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, MissingTrace) as exc:
        print(f"liouville-lab {cmd}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
