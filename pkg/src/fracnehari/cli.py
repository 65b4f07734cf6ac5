"""Command-line front end: ``fracnehari {validate,solve,compare,checks}``.

Exit status: 0 ok, 1 a check or validation failed, 2 usage or configuration
error, 3 a solve did not converge.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .functional import KAPPA_CEILING, estimate_kappa, estimate_nu, estimate_Sq
from .grid import GridError
from .model import ASYMPTOTIC, asymptotic_potentials, periodic_potentials, theta0, validate_nonlinearity, validate_potentials
from .solver import GroundStateResult, compare_levels, minimize_ground_state
from .suite import REGISTRY, Context

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNCONVERGED = 0, 1, 2, 3

log = logging.getLogger("fracnehari")


def fmt(x: float) -> str:
    """17 significant digits, always readable back as a float."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.17g}"
    return s if any(c in s for c in ".e") else s + ".0"


class _Dumper(yaml.SafeDumper):
    pass


def _float_repr(dumper, value):
    text = {"nan": ".nan", "inf": ".inf", "-inf": "-.inf"}.get(fmt(value), fmt(value))
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


_Dumper.add_representer(float, _float_repr)
_Dumper.add_representer(tuple, lambda d, v: d.represent_list(list(v)))


def dump_yaml(data) -> str:
    return yaml.dump(data, Dumper=_Dumper, sort_keys=False)


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# ---------------------------------------------------------------------------
# building module inputs from the config


def build_potentials(cfg: RunConfig):
    """(active set, periodic set); unvalidated."""
    grid = cfg.make_grid()
    per = periodic_potentials(grid, cfg.potentials.periodic_params())
    if cfg.potentials.flavor == ASYMPTOTIC:
        return asymptotic_potentials(grid, per, cfg.potentials.bump, cfg.potentials.edge_tol), per
    return per, per


def _validation_reports(cfg: RunConfig, pot):
    reports = [validate_nonlinearity(s) for s in cfg.nonlinearity]
    if pot.flavor == ASYMPTOTIC:
        reports.append(validate_potentials(pot.periodic_limit()))
    reports.append(validate_potentials(pot))
    return reports


def _ensure_valid(cfg: RunConfig, pot) -> bool:
    bad = [(r.subject, e) for r in _validation_reports(cfg, pot) for e in r.entries if e.status == "fail"]
    for subject, e in bad:
        print(f"invalid {subject}: {e.name} {e.detail}".rstrip())
    return not bad


def _output_dir(cfg: RunConfig, override: str | None) -> Path:
    out = Path(override or cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# result persistence


def result_summary(res: GroundStateResult) -> dict:
    return {
        "energy": res.energy,
        "grad_norm": res.grad_norm,
        "nehari_residual": res.nehari_residual,
        "lagrange_multiplier_est": res.lagrange_multiplier_est,
        "iterations": res.iterations,
        "start_index": res.start_index,
        "converged": res.converged,
        "n_converged": res.n_converged,
        "n_starts": len(res.starts),
        "tail_mass": res.tail_mass,
        "domain_too_small": res.domain_too_small,
        "recenter_shifts": [int(z) for z in res.recenter_shifts],
        "min_bound_margin": res.min_bound_margin,
        "abs_energy_increase": res.abs_energy_increase,
        "starts": [
            {"index": s.index, "energy": s.energy, "grad_norm": s.grad_norm, "iterations": s.iterations, "converged": s.converged,
             "min_bound_margin": s.min_bound_margin}
            for s in res.starts
        ],
    }


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_solve_outputs(out: Path, cfg: RunConfig, pot, res: GroundStateResult, command: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    record = {"command": command, "version": version_string(), "result": result_summary(res), "config": cfg.to_dict()}
    (out / "run_summary.yaml").write_text(dump_yaml(record))
    V1, V2, lam = pot.active()
    x = pot.grid.x
    u, v = res.state.u.values, res.state.v.values
    _write_csv(out / "profile.csv", ["x", "u", "v", "V1", "V2", "lambda"], zip(*(map(float, a) for a in (x, u, v, V1, V2, lam))))
    _write_csv(out / "trace.csv", ["iteration", "energy"], ((i, float(e)) for i, e in enumerate(res.trace)))


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg: RunConfig, args) -> int:
    pot, per = build_potentials(cfg)
    reports = _validation_reports(cfg, pot)
    ok = True
    for rep in reports:
        print(f"[{rep.subject}]")
        for line in rep.lines():
            print("  " + line)
        ok &= rep.passed
    try:
        n = cfg.estimator_starts
        seed = cfg.solver.rng_seed
        kappas = [estimate_kappa(V, n, seed) for V in (per.V1, per.V2)]
        nus = [estimate_nu(V, n, seed) for V in (per.V1, per.V2)]
        nl1, nl2 = cfg.nonlinearity
        print("estimates (upper bounds from multi-start minimisation):")
        for i, (k, nu) in enumerate(zip(kappas, nus), start=1):
            print(f"  kappa_{i} = {fmt(k.value)}  (spread {k.spread:.3g})")
            print(f"  nu_{i} = {fmt(nu.value)}  (spread {nu.spread:.3g})")
        if nl1.q != nl2.q or nl1.theta != nl2.theta:
            print("theta0: n/a (q and theta differ between components)")
        else:
            Sq = estimate_Sq(per, nl1.q, n, seed)
            print(f"  S_q = {fmt(Sq.value)}  (q = {nl1.q:g}, spread {Sq.spread:.3g})")
            th0 = theta0(per.delta, [nl1.mu, nl2.mu], nl1.q, [nl1.alpha0, nl2.alpha0], cfg.omega, [min(k.value, KAPPA_CEILING) for k in kappas], Sq.value)
            print(f"theta0 = {fmt(th0)}  (omega = {fmt(cfg.omega)}, kappa capped at 1/(2 pi))")
            print(f"theta > theta0: {'yes' if nl1.theta > th0 else 'no'}")
            if nl1.theta <= th0:
                log.warning("theta = %g does not exceed the estimated theta0 = %g", nl1.theta, th0)
    except (ValueError, ArithmeticError) as exc:
        print(f"estimates: n/a ({exc})")
    print("validation: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_solve(cfg: RunConfig, args) -> int:
    out = _output_dir(cfg, args.output_dir)
    pot, _ = build_potentials(cfg)
    if not _ensure_valid(cfg, pot):
        return EXIT_FAIL
    res = minimize_ground_state(pot.grid, pot, cfg.nonlinearity, cfg.solver, threads=args.threads, omega=cfg.omega)
    write_solve_outputs(out, cfg, pot, res, "solve")
    print(f"energy = {fmt(res.energy)}")
    print(f"grad_norm = {fmt(res.grad_norm)}  converged starts: {res.n_converged}/{len(res.starts)}")
    print(f"nehari_residual = {fmt(res.nehari_residual)}  lagrange_multiplier_est = {fmt(res.lagrange_multiplier_est)}")
    print(f"results written to {out}")
    if not res.converged:
        print("UNCONVERGED: no start reached grad_tol")
        return EXIT_UNCONVERGED
    return EXIT_OK


def cmd_compare(cfg: RunConfig, args) -> int:
    if cfg.potentials.flavor != ASYMPTOTIC:
        raise ConfigError(f"compare needs potentials.flavor = {ASYMPTOTIC!r}")
    out = _output_dir(cfg, args.output_dir)
    pot, per = build_potentials(cfg)
    if not _ensure_valid(cfg, pot):
        return EXIT_FAIL
    rep = compare_levels(pot.grid, per, pot, cfg.nonlinearity, cfg.solver, threads=args.threads)
    periodic_cfg = dataclasses.replace(cfg, potentials=dataclasses.replace(cfg.potentials, flavor="periodic"))
    write_solve_outputs(out / "periodic", periodic_cfg, per, rep.periodic, "compare")
    write_solve_outputs(out / "asymptotic", cfg, pot, rep.asymptotic, "compare")
    threshold = 5.0 * cfg.solver.grad_tol
    record = {
        "command": "compare",
        "version": version_string(),
        "c_periodic": rep.c_periodic,
        "c_asymptotic": rep.c_asymptotic,
        "certificate": rep.certificate,
        "certificate_t0": rep.certificate_t0,
        "margin": rep.margin,
        "certificate_margin": rep.certificate_margin,
        "threshold": threshold,
        "converged": rep.converged,
        "passed": rep.passed(threshold),
        "config": cfg.to_dict(),
    }
    (out / "comparison.yaml").write_text(dump_yaml(record))
    print(f"c_periodic   = {fmt(rep.c_periodic)}")
    print(f"c_asymptotic = {fmt(rep.c_asymptotic)}")
    print(f"certificate  = {fmt(rep.certificate)}")
    print(f"margin       = {fmt(rep.margin)}  (threshold {fmt(threshold)})")
    if not rep.converged:
        print("UNCONVERGED: a ground-state solve did not reach grad_tol")
        return EXIT_UNCONVERGED
    ok = rep.passed(threshold)
    print("ordering c_asymptotic < c_periodic: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_checks(cfg: RunConfig, args) -> int:
    pot, _ = build_potentials(cfg)
    ctx = Context(pot.grid, pot, cfg.nonlinearity, cfg.omega, cfg.tm_family, cfg.solver.rng_seed)
    failed = []
    for name in cfg.checks:
        rep = REGISTRY[name](ctx)
        print(rep.line())
        if not rep.passed:
            failed.append(name)
    print(f"{len(cfg.checks)} checks run, {len(failed)} failed" + (f": {', '.join(failed)}" if failed else ""))
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "compare": cmd_compare, "checks": cmd_checks}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracnehari", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--output-dir", default=None, help="overrides output_dir from the config")
        sp.add_argument("--seed", type=int, default=None, help="overrides solver.rng_seed")
        sp.add_argument("--threads", type=int, default=1, help="parallel solver starts")
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg = dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, rng_seed=args.seed))
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
