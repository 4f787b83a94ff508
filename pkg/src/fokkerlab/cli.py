"""Command-line entry point: one subcommand per experiment.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
Outputs are byte-identical across reruns unless ``--timings`` is given.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .consistency import defect_order_study
from .convergence import config_digest, output_times, run_convergence, synthetic_report
from .diagnostics import (
    check_contraction,
    conditional_order_experiment,
    probe_boundary_decay,
    probe_derivative_conjecture,
    probe_times,
    smallest_passing_rate,
)
from .errors import NumericalError, ValidationError
from .fpde import discrete_stationary, discretize_fp, solve_fp
from .grid import GridFunction
from .master import build_generator, initial_pair, solve_master
from .rates import InitialFunction, extend_initial, load_model, validate_rate_model
from .ssa import SsaConfig, noise_envelope, simulate_checkpoints, tv_distance, tv_ladder


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


class Run:
    """Output directory, format switches and the manifest for one command."""

    def __init__(self, args, command: str, config: dict):
        self.args = args
        self.command = command
        self.config = config
        self.digest = config_digest(config)
        self.out = Path(args.out)
        self.start = time.perf_counter()

    @property
    def csv(self) -> bool:
        return self.args.format in ("csv", "both")

    @property
    def json(self) -> bool:
        return self.args.format in ("json", "both")

    @property
    def figures(self) -> bool:
        return not self.args.no_figures

    def path(self, name: str) -> Path:
        # created on first write, so rejected input leaves nothing behind
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def finish(self) -> int:
        self.out.mkdir(parents=True, exist_ok=True)
        wall = time.perf_counter() - self.start if self.args.timings else None
        io.write_manifest(self.out, self.command, self.config, self.digest, wall)
        print(f"{self.command}: wrote {self.out}")
        return 0


def _model(args):
    model, u0 = load_model(args.model)
    if getattr(args, "u0", None):
        u0 = InitialFunction(tuple(args.u0))
    return model, u0


def _base_config(args, model, u0) -> dict:
    return {
        "model": {"a": model.a_coeffs, "c": model.c_coeffs, "eta": model.eta, "label": model.label},
        "u0": u0.u0_coeffs,
    }


def cmd_validate(args) -> int:
    model, u0 = _model(args)
    config = _base_config(args, model, u0) | {"N": args.N}
    run = Run(args, "validate", config)
    report = validate_rate_model(model, raise_on_failure=False)
    summary = report.to_dict() | {"u0_violations": u0.violations(), "u0_third_derivative_match": u0.third_derivative_match()}
    if run.json:
        io.write_json(run.path("validation.json"), summary)
    if run.csv:
        io.write_csv(run.path("validation.csv"), ["check", "passed"], sorted(report.checks.items()))
    run.finish()
    if report.failure:
        raise ValidationError(report.failure)
    if args.N is not None and args.N <= report.N0:
        raise ValidationError(f"N={args.N} must exceed the admissibility bound N0={report.N0}")
    print(f"model {model.label!r} is valid, N0 = {report.N0}")
    return 0


def cmd_master(args) -> int:
    model, u0 = _model(args)
    config = _base_config(args, model, u0) | {"N": args.N, "t0": args.t0, "k0": args.k0}
    run = Run(args, "master", config)
    gen = build_generator(model, args.N, enforce_n0=True)
    if args.k0 is not None:
        if not 0 <= args.k0 <= args.N:
            raise ValidationError(f"k0 must lie in 0..{args.N}")
        p0 = np.zeros(args.N + 1)
        p0[args.k0] = 1.0
    else:
        p0, _, _ = initial_pair(extend_initial(u0, args.N), args.N)
    times = output_times(args.t0)
    traj = solve_master(gen, p0, times)
    if run.csv:
        io.write_csv(run.path("trajectory.csv"), ["t", "k", "p"], io.trajectory_rows(traj.times, traj.states))
        io.write_gnuplot(run.path("trajectory.gp"), "trajectory.csv", [(2, 3, "p_k(t)")], "k", "p", f"master equation, N={args.N}")
    if run.json:
        io.write_json(
            run.path("conservation.json"),
            {
                "N": args.N,
                "times": traj.times,
                "totals": traj.totals(),
                "max_conservation_error": traj.max_conservation_error(),
                "min_probability": float(traj.states.min()),
                "steps": traj.steps,
                "rejected": traj.rejected,
            },
        )
    if run.figures:
        from .plotting import trajectory_figure

        trajectory_figure(traj.times, np.arange(args.N + 1), traj.states, run.path("trajectory.png"), "k", "p_k(t)")
    return run.finish()


def cmd_fp(args) -> int:
    model, u0 = _model(args)
    config = _base_config(args, model, u0) | {"N": args.N, "t0": args.t0, "r": args.r, "initial": args.initial}
    run = Run(args, "fp", config)
    disc = discretize_fp(model, args.N, args.r)
    if args.initial == "zero":
        v0 = GridFunction(disc.grid, np.zeros(disc.grid.M))
    elif args.initial == "stationary":
        v0 = discrete_stationary(disc)
    else:
        _, v0, _ = initial_pair(extend_initial(u0, args.N, disc.grid), args.N)
    traj = solve_fp(disc, v0, output_times(args.t0))
    if run.csv:
        io.write_csv(run.path("field.csv"), ["t", "x", "u"], io.field_rows(traj.times, disc.grid.nodes, traj.fields))
        io.write_gnuplot(run.path("field.gp"), "field.csv", [(2, 3, "u(t,x)")], "x", "u", f"Fokker-Planck field, N={args.N}")
    if run.json:
        io.write_json(
            run.path("field.json"),
            {
                "N": args.N,
                "r": args.r,
                "dx": disc.grid.dx,
                "dt": traj.dt,
                "label": model.label,
                "times": traj.times,
                "masses": traj.masses(),
                "max_mass_error": traj.max_mass_error(),
                "richardson_diff": traj.richardson_diff,
                "max_cell_peclet": disc.max_cell_peclet(),
                "min_value": float(traj.fields.min()),
            },
        )
    if run.figures:
        from .plotting import trajectory_figure

        trajectory_figure(traj.times, disc.grid.nodes, traj.fields, run.path("field.png"), "x", "u(t, x)")
    return run.finish()


def _convergence_outputs(run: Run, report, stem: str = "convergence") -> None:
    if run.csv:
        io.write_csv(
            run.path(f"{stem}.csv"),
            ["N", "sup_error", "error_at_t0", "seconds"],
            [(e.N, e.sup_error, e.error_at_t0, e.seconds if run.args.timings else None) for e in report.entries],
        )
        io.write_gnuplot(
            run.path(f"{stem}.gp"),
            f"{stem}.csv",
            [(1, 2, "sup_t max_k |v - p|"), (1, 3, "error at t0")],
            "N",
            "error",
            f"{report.label}: fitted order {report.fitted_order:.3f}",
            logscale="xy",
        )
    if run.figures:
        from .plotting import convergence_figure

        convergence_figure(report, run.path(f"{stem}.png"))


def cmd_converge(args) -> int:
    model, u0 = _model(args)
    config = _base_config(args, model, u0) | {"N_list": args.N_list, "t0": args.t0, "r": args.r, "synthetic": args.synthetic}
    run = Run(args, "converge", config)
    if args.synthetic is not None:
        report = synthetic_report(args.N_list, args.synthetic)
    else:
        report = run_convergence(model, u0, args.t0, args.N_list, args.r, args.jobs)
    _convergence_outputs(run, report)
    if run.json:
        io.write_json(run.path("convergence.json"), report.to_dict(timings=args.timings))
    print(f"fitted order {report.fitted_order:.4f} (R^2 {report.r2:.4f})")
    return run.finish()


def cmd_consistency(args) -> int:
    model, u0 = _model(args)
    f = tuple(args.f)
    config = _base_config(args, model, u0) | {"N_list": args.N_list, "f": f}
    run = Run(args, "consistency", config)
    study = defect_order_study(model, f, args.N_list)
    if run.csv:
        io.write_csv(
            run.path("defect.csv"),
            ["N", "defect_all", "defect_interior", "defect_boundary"],
            [(r.N, r.defect_all, r.defect_interior, r.defect_boundary) for r in study.reports],
        )
        io.write_gnuplot(
            run.path("defect.gp"),
            "defect.csv",
            [(1, 2, "all rows"), (1, 3, "interior rows"), (1, 4, "boundary rows")],
            "N",
            "defect",
            "generator defect",
            logscale="xy",
        )
    if run.json:
        io.write_json(run.path("defect.json"), study.to_dict())
    if run.figures:
        from .plotting import defect_figure

        defect_figure(study, run.path("defect.png"))
    print("slopes: " + ", ".join(f"{k} {v:.3f}" if v is not None else f"{k} n/a" for k, v in study.slopes.items()))
    return run.finish()


def cmd_conjectures(args) -> int:
    model, u0 = _model(args)
    config = _base_config(args, model, u0) | {"N_list": args.N_list, "t0": args.t0, "r": args.r}
    run = Run(args, "conjectures", config)
    report = run_convergence(model, u0, args.t0, args.N_list, args.r, args.jobs, keep_pairs=True)
    t_probe = probe_times(args.t0)
    probes = []
    for N in report.Ns:
        fp = report.pairs[N].fp
        for order in (2, 3):
            probes += probe_derivative_conjecture(model, u0, N, t_probe, order, args.r, trajectory=fp)
    decay = probe_boundary_decay(
        model, u0, report.Ns, t_probe, args.r, trajectories={N: p.fp for N, p in report.pairs.items()}
    )
    contraction = {}
    for N, pair in sorted(report.pairs.items()):
        contraction[N] = {
            "master_sup": check_contraction(model, pair.master).to_dict(),
            "fp_sup": check_contraction(model, pair.fp).to_dict(),
            "fp_c1_smallest_rate": smallest_passing_rate(model, pair.fp),
        }
    cond2 = conditional_order_experiment(model, u0, report.Ns, args.t0, 2, args.r, report=report)
    cond3 = conditional_order_experiment(model, u0, report.Ns, args.t0, 3, args.r, report=report)
    if run.csv:
        io.write_csv(
            run.path("probes.csv"),
            ["N", "t", "order", "boundary_max", "global_max", "margin"],
            [(p.N, p.t, p.order, p.boundary_max, p.global_max, p.margin) for p in probes],
        )
        io.write_csv(run.path("boundary_decay.csv"), ["N", "strip_max"], list(zip(decay.Ns, decay.strip_max)))
        io.write_gnuplot(
            run.path("boundary_decay.gp"),
            "boundary_decay.csv",
            [(1, 2, "max |u''| on strips")],
            "N",
            "strip maximum",
            "boundary-strip decay",
            logscale="xy",
        )
    _convergence_outputs(run, report)
    if run.json:
        by_order = {}
        for order in (2, 3):
            sel = [p for p in probes if p.order == order]
            by_order[order] = {
                "probes": len(sel),
                "supporting": sum(p.supports for p in sel),
                "min_margin": min(p.margin for p in sel),
                "endpoint_supporting": sum(p.endpoint_supports for p in sel),
            }
        io.write_json(
            run.path("conjectures.json"),
            {
                "second_derivative": by_order[2],
                "third_derivative": by_order[3] | {"u0_third_derivative_match": u0.third_derivative_match()},
                "boundary_decay": decay.to_dict(),
                "contraction": contraction,
                "conditional_order_2": cond2.to_dict(args.timings),
                "conditional_order_3": {k: v for k, v in cond3.to_dict(args.timings).items() if k != "report"},
            },
        )
    if run.figures:
        from .plotting import decay_figure

        decay_figure(decay, run.path("boundary_decay.png"))
    slope = "n/a" if decay.slope is None else f"{decay.slope:.3f} (R^2 {decay.r2:.3f})"
    print(f"boundary-decay slope {slope}; {cond2.annotation}")
    return run.finish()


def cmd_ssa(args) -> int:
    model, u0 = _model(args)
    checkpoints = tuple(sorted(set(args.checkpoints)))
    config = _base_config(args, model, u0) | {
        "N": args.N,
        "k0": args.k0,
        "t0": args.t0,
        "paths": args.paths,
        "seed": args.seed,
        "checkpoints": checkpoints,
        "ladder": args.ladder,
    }
    run = Run(args, "ssa", config)
    cfg = SsaConfig(args.N, args.t0, args.paths, args.seed, args.k0, checkpoints=checkpoints)
    snaps = simulate_checkpoints(model, cfg)
    p0 = np.zeros(args.N + 1)
    p0[args.k0] = 1.0
    exact = solve_master(build_generator(model, args.N), p0, np.union1d([0.0], [s.t for s in snaps])).states
    exact = {float(t): p for t, p in zip(np.union1d([0.0], [s.t for s in snaps]), exact)}
    summary = {"N": args.N, "k0": args.k0, "paths": args.paths, "seed": args.seed, "snapshots": []}
    for snap in snaps:
        name = f"ssa_t{snap.t:g}.csv"
        if run.csv:
            io.write_csv(run.path(name), ["k", "count"], [(k, int(c)) for k, c in enumerate(snap.counts)])
        summary["snapshots"].append(
            {
                "t": snap.t,
                "file": name,
                "mean": snap.mean(),
                "tv_to_master": tv_distance(snap, exact[snap.t]),
                "noise_envelope": noise_envelope(args.N, args.paths),
            }
        )
    if args.ladder:
        summary["tv_ladder"] = tv_ladder(model, cfg, exact[snaps[-1].t]).to_dict()
    if run.json:
        io.write_json(run.path("ssa.json"), summary)
    if run.csv:
        last = summary["snapshots"][-1]["file"]
        io.write_gnuplot(run.path("ssa.gp"), last, [(1, 2, "count")], "k", "paths", f"SSA at t={snaps[-1].t:g}")
    if run.figures:
        from .plotting import histogram_figure

        histogram_figure(snaps[-1], exact[snaps[-1].t], run.path("ssa.png"))
    print(f"TV distance to the master solution at t={snaps[-1].t:g}: {summary['snapshots'][-1]['tv_to_master']:.4g}")
    return run.finish()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="ehrenfest", help="builtin model name or model file (default: ehrenfest)")
    common.add_argument("--u0", type=_float_list, help="initial-profile polynomial coefficients, lowest degree first")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=_u64, default=0, help="64-bit seed (used by ssa only)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for ladders")
    common.add_argument("--format", choices=("csv", "json", "both"), default="both")
    common.add_argument("--timings", action="store_true", help="record wall times (outputs are then not reproducible)")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    parser = argparse.ArgumentParser(prog="fokkerlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a rate model and report N0")
    p.add_argument("--N", type=int)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("master", parents=[common], help="solve the master equations")
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--k0", type=int, help="start from a point mass instead of u0")
    p.set_defaults(func=cmd_master)

    p = sub.add_parser("fp", parents=[common], help="solve the Fokker-Planck equation")
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--r", type=int, default=8)
    p.add_argument("--initial", choices=("u0", "zero", "stationary"), default="u0")
    p.set_defaults(func=cmd_fp)

    p = sub.add_parser("converge", parents=[common], help="chain-versus-PDE convergence ladder")
    p.add_argument("--N-list", dest="N_list", type=_int_list, default=[50, 100, 200, 400])
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--r", type=int, default=8)
    p.add_argument("--synthetic", type=float, metavar="ORDER", help="self-test with exact errors N**ORDER")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("consistency", parents=[common], help="generator defect study")
    p.add_argument("--N-list", dest="N_list", type=_int_list, default=[40, 80, 160, 320])
    p.add_argument("--f", type=_float_list, default=[0.0, 0.0, 1.0, -2.0, 1.0], help="test polynomial coefficients")
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("conjectures", parents=[common], help="boundary-derivative probes and contraction checks")
    p.add_argument("--N-list", dest="N_list", type=_int_list, default=[50, 100, 200, 400])
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--r", type=int, default=8)
    p.set_defaults(func=cmd_conjectures)

    p = sub.add_parser("ssa", parents=[common], help="stochastic simulation cross-check")
    p.add_argument("--N", type=int, default=50)
    p.add_argument("--k0", type=int, default=0)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--checkpoints", type=_float_list, default=[])
    p.add_argument("--ladder", action="store_true", help="also fit TV against ensemble size")
    p.set_defaults(func=cmd_ssa)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ValidationError("--jobs must be at least 1")
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
