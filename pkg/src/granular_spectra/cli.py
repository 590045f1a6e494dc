"""Command-line front end.

Subcommands: equilibrium, spectrum, dispersion, verify, clustering-scan.
Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import outputs, plots
from .config import ConfigError, RunConfig
from .dispersion import InternalConsistencyError, dispersion_roots
from .pipeline import Scenario
from .spectrum import EigensolverError
from .verification import run_all

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="granular-spectra",
        description="Velocity-space kinetic solver and spectral analysis "
                    "for diffusively heated granular gases.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("equilibrium", "solve the heated equilibrium and export profiles"),
            ("spectrum", "branch continuation, expansion fits and plot data"),
            ("dispersion", "closed-form dispersion targets and consistency checks"),
            ("verify", "run the full acceptance suite"),
            ("clustering-scan", "stability margin of the leading mode across alpha")):
        q = sub.add_parser(name, help=helptext)
        q.add_argument("--config", type=Path, default=None,
                       help="flat key = value configuration file")
        q.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory (created if missing)")
        q.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        q.add_argument("--threads", type=int, default=None,
                       help="parallel eigensolves for parameter sweeps")
    return p


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig().validate()
    cfg = cfg.with_overrides(args.set)
    if args.threads is not None:
        cfg = cfg.with_overrides([f"threads={args.threads}"])
    return cfg


def _alpha_tag(alpha: float) -> str:
    return f"a{alpha:.4f}".replace(".", "p")


def cmd_equilibrium(cfg: RunConfig, out: Path) -> int:
    sc = Scenario(cfg)
    code = EXIT_OK
    for alpha in sorted(cfg.alphas):
        res = sc.equilibrium(alpha)
        tag = _alpha_tag(alpha)
        outputs.write_profile_csv(out / f"profile_{tag}.csv", res.profile,
                                  cfg.config_hash)
        outputs.write_profile_binary(out / f"profile_{tag}.bin", res.profile)
        diag = {
            "alpha": alpha,
            "converged": res.converged,
            "iterations": res.iterations,
            "residual_norm": res.residual_norm,
            "balance_residual": res.balance,
            "balance_relative": res.balance / (2.0 * cfg.d),
            "temperature": res.macro.temperature,
            "T1": sc.T1,
            "temperature_rel_dev": abs(res.macro.temperature - sc.T1) / sc.T1,
            "mass": res.macro.mass,
            "momentum": list(res.macro.momentum),
            "clipped_mass": res.clipped_mass,
            "leakage": res.leakage,
            "method": res.method,
            "residual_history": res.history,
        }
        outputs.write_json(out / f"equilibrium_{tag}.json", diag, cfg.config_hash)
        if cfg.plots:
            plots.equilibrium_profile(res.profile, sc.T1, out / f"profile_{tag}.png")
        if not res.converged:
            code = EXIT_NUMERICAL
    return code


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    sc = Scenario(cfg)
    all_branches = []
    fits_payload = {}
    branches_by_alpha = {}
    essential = None
    c = sc.sound
    for alpha in sorted(cfg.alphas, reverse=True):
        branches, summaries = sc.branches(alpha)
        branches_by_alpha[alpha] = branches
        all_branches.extend(branches)
        if alpha == max(cfg.alphas):
            from .spectrum import essential_bound_check
            F = sc.equilibrium(alpha).profile
            nu = sc.model.loss_potential(F).values
            speed = np.sqrt(sc.grid.speed_sq)
            essential = essential_bound_check(summaries,
                                              float((nu / (1 + speed)).min()))
        fits = sc.fits(alpha) if alpha == 1.0 else None
        if fits:
            for j, fit in sorted(fits.items()):
                target = 1j * np.sign(j) * c if abs(j) == 1 else 0.0
                entry = {
                    "lambda0": fit.lambda0,
                    "lambda1": fit.lambda1,
                    "lambda1_target": target,
                    "lambda1_rel_err": (abs(fit.lambda1 - target) / c),
                    "lambda2": fit.lambda2,
                    "lambda1_spread": fit.lambda1_spread,
                    "lambda2_spread": fit.lambda2_spread,
                }
                if j == 0:
                    entry["e1"] = fit.e1
                    entry["e1_target"] = 3.0 / sc.T1
                    entry["e1_rel_err"] = abs(fit.e1 - 3.0 / sc.T1) * sc.T1 / 3.0
                fits_payload[str(j)] = entry
        failed = [br for br in branches if br.failed_at is not None]
        if failed:
            fits_payload.setdefault("continuation_failures", []).extend(
                {"alpha": alpha, "j": br.label, "rho": br.failed_at} for br in failed)
    outputs.write_branches_csv(out / "branches.csv", all_branches, cfg.config_hash)
    outputs.write_json(out / "fits.json", {
        "T1": sc.T1, "sound_speed": c, "branches": fits_payload,
        "essential_bound": essential}, cfg.config_hash)
    if cfg.plots:
        plots.dispersion_curves(branches_by_alpha, out / "dispersion_curves.png")
    return EXIT_NUMERICAL if any(br.failed_at is not None for br in all_branches) \
        else EXIT_OK


def cmd_dispersion(cfg: RunConfig, out: Path) -> int:
    sc = Scenario(cfg)
    rep = sc.dispersion_report()
    outputs.write_json(out / "dispersion_report.json", rep, cfg.config_hash)
    if cfg.plots:
        plots.dispersion_roots_plot(dispersion_roots(cfg.d, sc.T1), sc.sound,
                                    out / "dispersion_roots.png")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    results, sc = run_all(cfg, progress=print)
    payload = {
        "all_passed": all(r.passed for r in results),
        "criteria": [{
            "num": r.num, "name": r.name, "passed": r.passed,
            "detail": r.detail, "elapsed_s": r.elapsed} for r in results],
    }
    outputs.write_json(out / "verify_report.json", payload, cfg.config_hash)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY


def cmd_clustering_scan(cfg: RunConfig, out: Path) -> int:
    sc = Scenario(cfg)
    table = sc.clustering_table()
    cols = {k: [row[k] for row in table] for k in table[0]}
    outputs.write_csv(out / "clustering_scan.csv", cols, cfg.config_hash)
    outputs.write_json(out / "clustering_scan.json", {"rows": table},
                       cfg.config_hash)
    if cfg.plots:
        plots.clustering_scan(table, out / "clustering_scan.png")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    handlers = {
        "equilibrium": cmd_equilibrium,
        "spectrum": cmd_spectrum,
        "dispersion": cmd_dispersion,
        "verify": cmd_verify,
        "clustering-scan": cmd_clustering_scan,
    }
    try:
        return handlers[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigensolverError, InternalConsistencyError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
