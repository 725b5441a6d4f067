"""Command line interface.

Subcommands: potential, repair, simulate, sweep, ring-demo, stats, gadget.
Exit codes: 0 success, 1 configuration error, 2 partial failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .engine import write_event_log
from .harness import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_PARTIAL,
    RunConfig,
    SweepPartialFailure,
    aggregate_stats,
    expand_grid,
    format_stats,
    read_rows,
    ring_demo,
    run_experiment,
    sweep,
)
from .potential import (
    OPEN_EMBEDDED,
    TORUS,
    LatticeParams,
    build_potential,
    write_potential_csv,
)
from .shadow import parse_spec_file, table_one_preset, write_repair_csv


def _add_potential(sub):
    p = sub.add_parser("potential", help="emit the anyon interaction U(r) as CSV")
    p.add_argument("--j", type=float, default=3.0, help="hopping J in units of g")
    p.add_argument("--mu-over-j", type=float, required=True)
    p.add_argument("--grid", type=int, default=20, help="k-grid side length")
    p.add_argument("--grid-y", type=int, default=None)
    p.add_argument("--geometry", choices=[TORUS, OPEN_EMBEDDED], default=TORUS)
    p.add_argument("-o", "--output", required=True)


def _cmd_potential(args) -> int:
    grid = (args.grid, args.grid_y or args.grid)
    params = LatticeParams(
        j=args.j, mu=args.mu_over_j * args.j, grid=grid, geometry=args.geometry
    )
    write_potential_csv(build_potential(params), args.output)
    return EXIT_OK


def _add_repair(sub):
    p = sub.add_parser("repair", help="emit repair-function curves Gamma_R(dE) as CSV")
    p.add_argument(
        "--preset",
        type=float,
        action="append",
        default=None,
        help="tabulated mu/J preset; repeatable (e.g. --preset -0.1 --preset -0.2)",
    )
    p.add_argument("--spec-file", default=None, help="shadow spec file instead of presets")
    p.add_argument("--emin", type=float, default=-0.5)
    p.add_argument("--emax", type=float, default=0.1)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("-o", "--output", required=True)


def _cmd_repair(args) -> int:
    if args.spec_file:
        specs = [parse_spec_file(args.spec_file)]
    else:
        presets = args.preset or [-0.1, -0.2, -0.4]
        specs = [table_one_preset(m) for m in presets]
    delta_e = np.arange(args.emin, args.emax + args.step / 2, args.step)
    write_repair_csv(specs, delta_e, args.output)
    return EXIT_OK


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run one config (n_runs lifetime runs)")
    p.add_argument("--config", required=True, help="JSON file of RunConfig fields")
    p.add_argument("--out", required=True, help="results directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true")
    p.add_argument(
        "--event-log",
        default=None,
        help="write a per-event debug log (first run only, n_runs forced to 1)",
    )


def _cmd_simulate(args) -> int:
    with open(args.config) as fh:
        config = RunConfig.from_dict(json.load(fh))
    if args.event_log:
        from .engine.simulate import run_single
        from dataclasses import replace

        config = replace(config, n_runs=1)
        geom, table, spec = harness.resolve_inputs(config)
        result, rows = run_single(
            geom,
            table,
            spec,
            config.gamma_p,
            integrator=config.integrator,
            dt=config.dt,
            update_radius=config.update_radius,
            seed=config.base_seed,
            max_time=config.max_time,
            collect_log=True,
        )
        from .engine.simulate import _row_to_outcome

        write_event_log(args.event_log, [_row_to_outcome(r) for r in rows])
        print(f"tau={result.tau:g} censored={result.censored} events={result.n_events}")
        return EXIT_OK
    record = run_experiment(config, out_dir=args.out, workers=args.workers, resume=args.resume)
    print(format_stats(aggregate_stats([record])))
    return EXIT_OK


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="run a grid of configs")
    p.add_argument(
        "--config",
        required=True,
        help='JSON file: {"base": {RunConfig fields}, "axes": {field: [values]}}',
    )
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true")


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        payload = json.load(fh)
    base = RunConfig.from_dict(payload["base"])
    configs = expand_grid(base, payload.get("axes", {}))
    try:
        records = sweep(configs, out_dir=args.out, workers=args.workers, resume=args.resume)
    except SweepPartialFailure as exc:
        print(exc, file=sys.stderr)
        print(format_stats(aggregate_stats(exc.records)) if exc.records else "")
        return EXIT_PARTIAL
    print(format_stats(aggregate_stats(records)))
    return EXIT_OK


def _add_ring(sub):
    p = sub.add_parser("ring-demo", help="three-qubit ring lifetime demo")
    p.add_argument("--j", type=float, default=1.0)
    p.add_argument("--gamma-p", type=float, required=True)
    p.add_argument("--omega-s", type=float, default=None, help="shadow energy (default 4J)")
    p.add_argument("--coupling", type=float, default=0.05)
    p.add_argument("--gamma-s", type=float, default=0.05)
    p.add_argument("--n-runs", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-time", type=float, default=1e9)


def _cmd_ring(args) -> int:
    omega_s = args.omega_s if args.omega_s is not None else 4.0 * args.j
    record = ring_demo(
        j=args.j,
        gamma_p=args.gamma_p,
        omega_s=omega_s,
        omega_coupling=args.coupling,
        gamma_s=args.gamma_s,
        n_runs=args.n_runs,
        seed=args.seed,
        max_time=args.max_time,
    )
    print(
        f"mean_tau={record.mean_tau:g} stderr={record.stderr_tau:g} "
        f"censored={record.n_censored}/{len(record.runs)}"
    )
    return EXIT_OK


def _add_stats(sub):
    p = sub.add_parser("stats", help="aggregate a results directory")
    p.add_argument("dir")


def _cmd_stats(args) -> int:
    rows = read_rows(args.dir)
    print(format_stats(aggregate_stats(rows)))
    return EXIT_OK


def _add_gadget(sub):
    p = sub.add_parser("gadget", help="exact diagonalization of the 3-/4-body gadgets")
    p.add_argument("--kind", choices=["three_body", "four_body"], default="three_body")
    p.add_argument("--kappa3", type=float, default=1.0, help="squeezing coupling / kappa")
    p.add_argument("--delta", type=float, default=4.0, help="resonator detuning / kappa")
    p.add_argument("--q5-detuning", type=float, default=2.0, help="(omega_Q5 - nu') / kappa")
    p.add_argument("--kappa-c", type=float, default=None)
    p.add_argument("--c3", type=float, default=None, help="c3 (or c5 for four_body)")
    p.add_argument("--tune", action="store_true", help="tune counterterms numerically")
    p.add_argument("--n-max", type=int, default=30)
    p.add_argument("-o", "--output", required=True)


def _cmd_gadget(args) -> int:
    from . import gadget as gadget_mod

    model = gadget_mod.GadgetModel(
        kind=args.kind,
        kappa=1.0,
        kappa3=args.kappa3,
        delta=args.delta,
        kappa_c=args.kappa_c if args.kappa_c is not None else 0.0,
        c3=args.c3 if args.c3 is not None else 0.0,
        qubit5_detuning=args.q5_detuning if args.kind == "four_body" else 0.0,
        n_max=args.n_max,
    )
    if args.tune:
        kappa_c, c3 = gadget_mod.tune_counterterms(model)
        model = gadget_mod.with_counterterms(model, kappa_c, c3)
        print(f"tuned: kappa_c={kappa_c:.6g} c3={c3:.6g}", file=sys.stderr)
    spec = gadget_mod.spectrum(model)
    gadget_mod.write_spectrum_csv(spec, args.output)
    print(f"extracted J={spec.j_extracted:.6g}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="anyonsim",
        description="lifetime simulator for a dissipatively corrected toric-code fabric",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_potential(sub)
    _add_repair(sub)
    _add_simulate(sub)
    _add_sweep(sub)
    _add_ring(sub)
    _add_stats(sub)
    _add_gadget(sub)
    args = parser.parse_args(argv)
    handlers = {
        "potential": _cmd_potential,
        "repair": _cmd_repair,
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "ring-demo": _cmd_ring,
        "stats": _cmd_stats,
        "gadget": _cmd_gadget,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
