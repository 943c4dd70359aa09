"""Command-line front end.

Each subcommand reads one JSON config, writes one results file plus a JSON
summary, and prints a short human-readable report. Exit codes: 0 success,
1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import harness
from .cellproblem import oscillating_mean_check, solve_cell_poisson
from .gauge import (GaugeError, assemble_transformed_loc, build_gauge_loc,
                    build_gauge_osc, transform_similarity)
from .hamiltonian import RandomField, assemble_loc
from .harness import ConfigError, ExperimentConfig
from .spectral import CellBox, smallest_eigs
from . import profiles

__all__ = ["cli_main", "main"]


def _out_paths(config, args, stem):
    outdir = args.output_dir or "."
    os.makedirs(outdir, exist_ok=True)
    csv_path = config.output_csv or os.path.join(outdir, f"{stem}.csv")
    summary_path = config.output_summary or os.path.join(outdir, f"{stem}.json")
    return csv_path, summary_path


def _cmd_hypothesis(config, args):
    setup = harness.build_setup(config)
    rep = setup.hypothesis
    _, summary_path = _out_paths(config, args, "hypothesis")
    harness.write_summary({"kind": rep.kind, "value": rep.value,
                           "error_estimate": rep.error_estimate,
                           "passes": rep.passes}, summary_path)
    status = "passes" if rep.passes else "fails"
    print(f"hypothesis[{rep.kind}]: value {rep.value:.6g} "
          f"(error estimate {rep.error_estimate:.2g}) -> {status}")
    return 0


def _cmd_ilse(config, args):
    records = harness.run_ilse_trials(config)
    csv_path, summary_path = _out_paths(config, args, "ilse")
    harness.write_trials_csv(records, csv_path)
    usable = [r for r in records if not r.degenerate and not r.failed]
    summary = {"trials": len(records), "usable": len(usable),
               "eps": config.eps_schedule[0], "N": config.n_schedule[0]}
    if len(usable) >= 10:
        c2, seed = harness.estimate_c2(records)
        summary["c2_hat"] = c2
        summary["c2_seed"] = seed
    harness.write_summary(summary, summary_path)
    print(f"ilse: {len(records)} trials -> {csv_path}")
    if "c2_hat" in summary:
        print(f"ilse: estimated c2 = {summary['c2_hat']:.6g}")
    return 0


def _cmd_scaling(config, args):
    result = harness.scaling_study(config)
    _, summary_path = _out_paths(config, args, "scaling")
    harness.write_summary(result, summary_path)
    print(f"scaling[{config.kind}]: slope {result.slope:.4f} "
          f"(expected {result.expected_exponent:.4f}), prefactor "
          f"{result.prefactor:.6g} vs theory {result.theory_coeff:.6g}, "
          f"sign {result.sign:+d}")
    return 0


def _cmd_probability(config, args):
    estimates = []
    for N in config.n_schedule:
        eps = None
        if config.c1_hat is not None and config.c2_hat is not None:
            iv = harness.interval_IN(config.kind, N, config.measure,
                                     config.c1_hat, config.c2_hat,
                                     config.gamma,
                                     config.perturbation.get("a", 0.5))
            if iv is None:
                raise ConfigError(f"I_N empty at N={N}")
            eps = iv[0]
        est = harness.run_probability_experiment(config, N=N, eps=eps)
        estimates.append(est)
        print(f"probability: N={N} eps={est.eps:.6g} freq={est.estimate:.4f} "
              f"upper95={est.upper95:.4f}")
    _, summary_path = _out_paths(config, args, "probability")
    freqs = [e.estimate for e in estimates]
    harness.write_summary({"estimates": estimates,
                           "nonincreasing": all(a >= b for a, b in
                                                zip(freqs, freqs[1:]))},
                          summary_path)
    return 0


def _cmd_ct(config, args):
    N = config.n_schedule[0]
    anchor = config.alpha[0]
    b1 = CellBox(beta=(anchor,), m=1)
    pairs = []
    step = max(2, N // 5)
    for j in range(4):
        beta = anchor + min(N - 1, 2 + j * step)
        pairs.append((b1, CellBox(beta=(beta,), m=1)))
    results = harness.run_ct_experiment(config, pairs)
    _, summary_path = _out_paths(config, args, "ct")
    harness.write_summary(results, summary_path)
    done = [r for r in results if not r.skipped]
    passed = sum(1 for r in done if r.passed)
    print(f"ct: {len(done)}/{len(results)} trials conditioned, "
          f"{passed}/{len(done) if done else 0} under the envelope")
    return 0


def _cmd_gauge_check(config, args):
    setup = harness.build_setup(config)
    omega = RandomField.constant(setup.grid.window, 1.0)
    eps = config.eps_schedule[0]
    if config.kind == "loc":
        gauge = build_gauge_loc(setup.grid, setup.spec, eps, omega)
        op = assemble_loc(setup.grid, setup.spec, eps, omega, base=setup.base)
        sim = transform_similarity(op, gauge)
        lam_direct = smallest_eigs(op, k=1).lambda_min
        lam_sim = smallest_eigs(sim, k=1, sigma=lam_direct - 1.0).lambda_min
        ana = assemble_transformed_loc(setup.grid, setup.spec, eps, omega,
                                       base=setup.base)
        lam_ana = smallest_eigs(ana, k=1, sigma=lam_direct - 1.0).lambda_min
        summary = {"eps": eps, "gauge_min": gauge.min_value,
                   "gauge_deviation": gauge.deviation,
                   "lambda_direct": lam_direct, "lambda_similarity": lam_sim,
                   "lambda_analytic": lam_ana,
                   "similarity_defect": abs(lam_sim - lam_direct),
                   "cross_method_gap": abs(lam_ana - lam_sim)}
    elif config.kind == "osc":
        gauge = build_gauge_osc(setup.grid, setup.spec, eps, omega)
        summary = {"eps": eps, "gauge_min": gauge.min_value,
                   "gauge_deviation": gauge.deviation,
                   "deviation_scale": gauge.deviation_scale}
    else:
        raise ConfigError("gauge-check supports loc and osc kinds")
    _, summary_path = _out_paths(config, args, "gauge_check")
    harness.write_summary(summary, summary_path)
    for key, val in summary.items():
        print(f"gauge-check: {key} = {val:.8g}" if isinstance(val, float)
              else f"gauge-check: {key} = {val}")
    return 0


def _cmd_cell_check(config, args):
    # single-mode corrector identity
    m = 64
    grid = np.arange(m) / m
    xi1 = np.meshgrid(grid, grid, indexing="ij")[0]
    sl = solve_cell_poisson(np.cos(2 * np.pi * xi1))
    pts = np.stack([xi1, np.meshgrid(grid, grid, indexing="ij")[1]], axis=-1)
    exact = -np.cos(2 * np.pi * xi1) / (4 * np.pi**2)
    err = float(np.max(np.abs(sl.value(pts) - exact)))
    energy_err = abs(sl.energy - 1.0 / (8 * np.pi**2))

    # averaging-order fit for the configured cell box
    ell = config.lattice.basis_lengths[0]
    d = config.grid.d
    env = profiles.product_window([(-0.4 * ell, -0.25 * ell, 0.25 * ell, 0.4 * ell),
                                   (0.1 * d, 0.25 * d, 0.75 * d, 0.9 * d)])
    w = profiles.cosine_mode(env, freq=1, amplitude=1.0)
    fit = oscillating_mean_check(w, [1 / 20, 1 / 40, 1 / 80, 1 / 160],
                                 box=((-ell / 2, ell / 2), (0.0, d)))
    _, summary_path = _out_paths(config, args, "cell_check")
    harness.write_summary({"single_mode_error": err,
                           "energy_error": energy_err,
                           "oscillation_slope": fit.slope,
                           "oscillation_errors": list(fit.errors)},
                          summary_path)
    print(f"cell-check: single-mode corrector error {err:.3g}, "
          f"energy error {energy_err:.3g}")
    print(f"cell-check: oscillating-mean fitted order {fit.slope:.3f}")
    return 0


COMMANDS = {
    "hypothesis": _cmd_hypothesis,
    "ilse": _cmd_ilse,
    "scaling": _cmd_scaling,
    "ct": _cmd_ct,
    "probability": _cmd_probability,
    "gauge-check": _cmd_gauge_check,
    "cell-check": _cmd_cell_check,
}


def cli_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="striploc",
        description="Spectral experiments for randomly perturbed strip waveguides")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the JSON experiment config")
        p.add_argument("--trials", type=int, default=None,
                       help="override the configured trial count")
        p.add_argument("--output-dir", default=None,
                       help="directory for result files")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0

    try:
        config = ExperimentConfig.from_file(args.config)
        if args.trials is not None:
            config = ExperimentConfig.from_dict(
                {**_config_dict(config), "trials": args.trials})
        return COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, GaugeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def _config_dict(config):
    from dataclasses import asdict

    raw = asdict(config)
    raw["lattice"] = {"n": config.lattice.n,
                      "basis_lengths": list(config.lattice.basis_lengths)}
    raw["grid"] = asdict(config.grid)
    raw["measure"] = {k: v for k, v in asdict(config.measure).items()
                      if v not in ((), None)}
    return raw


def main():
    sys.exit(cli_main())
