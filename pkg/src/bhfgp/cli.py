"""Command line front end.

Each subcommand reads one study file (see `config`), runs the matching
pipeline stage, and writes its artifacts into --out-dir.  Payloads hold
only data derived from the inputs (no timestamps, no hostnames), keys
are sorted, and iteration orders are fixed, so rerunning a command on
the same inputs reproduces every artifact byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import struct
import sys

import numpy as np

from .config import AppConfig, load_config
from .errors import BhfgpError, ConfigurationError
from .gp import GPOptions, gp_minimize
from .grids_potentials import Grid, TrapSpec, check_assumption2, eval_potential
from .latticebhf import BHFOptions, BHFState, assemble, bhf_energy, minimize_bhf
from .pairstate import solve_ground_state
from .scaling import ScalingConfig, ScalingRow, scaling_study
from .trialstate import (
    build_trial,
    check_admissibility,
    normalize_for_trace,
    predict_expansion,
)

BHF_CSV_HEADER = (
    "iter", "total", "kinetic", "external", "pairing", "exchange",
    "direct", "constraint_residual",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(text)
    print(f"wrote {path}")


def _write_json(path: str, payload) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    print(f"wrote {path}")


def _dump_matrix(path: str, matrix: np.ndarray, spacing: float) -> None:
    n = matrix.shape[0]
    with open(path, "wb") as handle:
        handle.write(struct.pack("<I", n))
        handle.write(struct.pack("<d", spacing))
        handle.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    print(f"wrote {path}")


def _out(args, name: str) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _solve_reference(cfg: AppConfig):
    v_micro = eval_potential(cfg.potential, cfg.micro_grid.radii())
    return solve_ground_state(v_micro, cfg.micro_grid), v_micro


def _stability(cfg: AppConfig, v_micro):
    if cfg.certificate is None:
        return None
    return check_assumption2(
        v_micro,
        np.asarray(cfg.certificate, dtype=float),
        cfg.micro_grid,
        cfg.tol_pointwise,
        cfg.tol_fourier,
    )


def _coupling(cfg: AppConfig, bound, v_micro):
    from .coupling import coupling_total

    return coupling_total(bound, v_micro, _stability(cfg, v_micro))


def cmd_pair(args) -> int:
    cfg = load_config(args.config)
    bound, _ = _solve_reference(cfg)
    _write_text(_out(args, "pair.json"), bound.to_json())
    return 0


def cmd_coupling(args) -> int:
    cfg = load_config(args.config)
    bound, v_micro = _solve_reference(cfg)
    cc = _coupling(cfg, bound, v_micro)
    _write_json(
        _out(args, "coupling.json"),
        {
            "g_bcs": cc.g_bcs,
            "g_dir": cc.g_dir,
            "g_ex": cc.g_ex,
            "g": cc.g,
            "assumption2_passed": cc.assumption2_passed,
            "quadrature_error_estimate": cc.quadrature_error_estimate,
        },
    )
    return 0


def cmd_gp(args) -> int:
    cfg = load_config(args.config)
    if args.g is not None:
        g = args.g
    else:
        bound, v_micro = _solve_reference(cfg)
        g = _coupling(cfg, bound, v_micro).g
    opts = cfg.gp_opts
    if args.tol is not None:
        opts = GPOptions(step=opts.step, max_iter=opts.max_iter, tol=args.tol)
    history: list = []
    cond = gp_minimize(cfg.trap, g, cfg.grid, opts, history)
    _write_csv(_out(args, "gp.csv"), ("iteration", "energy", "residual"), history)
    _write_json(
        _out(args, "gp.json"),
        {
            "g": g,
            "energy": cond.energy,
            "chemical_potential": cond.chemical_potential,
            "residual": cond.residual,
            "norm": cond.norm,
            "iterations": cond.iterations,
            "converged": cond.converged,
        },
    )
    return 0


def _normalized_trial(cfg: AppConfig, h: float, cond, bound):
    probe = build_trial(h, cond, bound, cfg.grid, 1, cfg.slack_exponent)
    lam = normalize_for_trace(probe)
    psi = lam * np.asarray(cond.psi, dtype=float)
    return build_trial(h, psi, bound, cfg.grid, 1, cfg.slack_exponent), lam


def cmd_trial(args) -> int:
    cfg = load_config(args.config)
    bound, v_micro = _solve_reference(cfg)
    cc = _coupling(cfg, bound, v_micro)
    cond = gp_minimize(cfg.trap, cc.g, cfg.grid, cfg.gp_opts)
    trial, _ = _normalized_trial(cfg, args.h, cond, bound)
    report = check_admissibility(trial)
    trace = float(np.trace(trial.lattice_gamma)) * cfg.grid.spacing
    _write_json(
        _out(args, "trial.json"),
        {
            "h": args.h,
            "trace": trace,
            "guara_min": report.guara_min,
            "alpha_opnorm": report.alpha_opnorm,
            "predicted_energy": predict_expansion(args.h, cond, cc, bound.e_b),
        },
    )
    return 0


def cmd_bhf(args) -> int:
    cfg = load_config(args.potential_config)
    trap = cfg.trap
    if args.trap_config is not None:
        trap = load_config(args.trap_config).trap
    grid = cfg.grid
    if args.n is not None or args.length is not None:
        grid = Grid(
            1,
            "periodic",
            args.n if args.n is not None else grid.n,
            args.length if args.length is not None else grid.length,
        )
    opts = cfg.bhf_opts
    opts = BHFOptions(
        step=opts.step,
        max_iter=args.max_iter if args.max_iter is not None else opts.max_iter,
        tol=args.tol if args.tol is not None else opts.tol,
        backtracks=opts.backtracks,
    )

    bound, v_micro = _solve_reference(cfg)
    cc = _coupling(cfg, bound, v_micro)
    cond = gp_minimize(trap, cc.g, grid, cfg.gp_opts)
    work = dataclasses.replace(cfg, grid=grid)
    trial, lam = _normalized_trial(work, args.h, cond, bound)
    model = assemble(args.h, grid, cfg.potential, trap, bound)
    initial = BHFState(trial.lattice_gamma, trial.lattice_alpha)
    e_trial = bhf_energy(initial, model).total
    result = minimize_bhf(model, initial, opts=opts)

    _write_csv(_out(args, "bhf.csv"), BHF_CSV_HEADER, result.history)
    final = result.energy
    _write_json(
        _out(args, "bhf.json"),
        {
            "h": args.h,
            "n": grid.n,
            "length": grid.length,
            "lambda": lam,
            "e_trial": e_trial,
            "total": final.total,
            "kinetic": final.kinetic,
            "external": final.external,
            "pairing": final.pairing,
            "exchange": final.exchange,
            "direct": final.direct,
            "iterations": result.iterations,
            "converged": result.converged,
        },
    )
    if args.dump_matrices:
        _dump_matrix(
            _out(args, "gamma.bin"), result.state.gamma, grid.spacing
        )
        _dump_matrix(
            _out(args, "alpha.bin"), result.state.alpha, grid.spacing
        )
    return 0


def cmd_scaling(args) -> int:
    cfg = load_config(args.config)
    report = scaling_study(
        ScalingConfig(
            h_list=cfg.h_list,
            grid=cfg.grid,
            potential=cfg.potential,
            trap=cfg.trap,
            micro_grid=cfg.micro_grid,
            stability_certificate=cfg.certificate,
            gp_opts=cfg.gp_opts,
            minimize_rows=cfg.minimize_rows,
            bhf_opts=cfg.bhf_opts,
            slack_exponent=cfg.slack_exponent,
        )
    )
    fields = [f.name for f in dataclasses.fields(ScalingRow)]
    rows = [dataclasses.asdict(row) for row in report.rows]
    _write_json(
        _out(args, "report.json"),
        {
            "rows": rows,
            "e_b": report.e_b,
            "coupling": dataclasses.asdict(report.coupling),
            "gp_energy": report.gp_energy,
            "fitted_exponent": report.fitted_exponent,
            "fit_r2": report.fit_r2,
            "quartic_fit": report.quartic_fit,
            "remainder_monotone": report.remainder_monotone,
        },
    )
    _write_csv(
        _out(args, "scaling.csv"),
        fields,
        [[row[name] for name in fields] for row in rows],
    )
    for row in rows:
        _write_json(_out(args, "h_%.17g.state.json" % row["h"]), row)
    return 0


def cmd_check_stability(args) -> int:
    cfg = load_config(args.config)
    if cfg.certificate is None:
        raise ConfigurationError(
            "check-stability needs a constructed potential, whose"
            " self-convolution certificate the config carries"
        )
    v_micro = eval_potential(cfg.potential, cfg.micro_grid.radii())
    report = _stability(cfg, v_micro)
    _write_json(
        _out(args, "stability.json"),
        {
            "passed": report.passed,
            "margin_pointwise": report.margin_pointwise,
            "fourier_min": report.fourier_min,
            "tol_pointwise": report.tol_pointwise,
            "tol_fourier": report.tol_fourier,
        },
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bhfgp",
        description="Pair-condensate energy pipelines on 1D lattices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out-dir", default=".", help="artifact directory")

    p = sub.add_parser("pair", help="solve the microscale pair bound state")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("coupling", help="compute the coupling constants")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("gp", help="minimize the condensate functional")
    p.add_argument("--config", required=True)
    p.add_argument("--g", type=float, help="override the quartic coupling")
    p.add_argument("--tol", type=float, help="override the flow tolerance")
    common(p)
    p.set_defaults(func=cmd_gp)

    p = sub.add_parser("trial", help="build and grade the trial state")
    p.add_argument("--config", required=True)
    p.add_argument("--h", type=float, default=0.125)
    common(p)
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("bhf", help="minimize the lattice functional")
    p.add_argument("--potential-config", required=True)
    p.add_argument("--trap-config")
    p.add_argument("--h", type=float, default=0.125)
    p.add_argument("--n", type=int)
    p.add_argument("--length", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--dump-matrices", action="store_true")
    common(p)
    p.set_defaults(func=cmd_bhf)

    p = sub.add_parser("scaling", help="run the h sweep")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("check-stability", help="verify the interaction certificate")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_check_stability)

    return parser


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BhfgpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))
