import argparse
import csv
import datetime
import hashlib
import json
import logging
import os
import sys

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel

from . import __version__
from . import errors
from . import models
from .config_loader import GameConfigFile
from .lab import Laboratory
from .models import Source, StrategyProfile, ThresholdMode, CommandReport, RunManifest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_CAP = 4
EXIT_OUTPUT = 5

EXIT_CODES = f"""exit codes:
  {EXIT_OK}  success
  {EXIT_VALIDATION}  invalid flags, configuration, sample or profile
  {EXIT_NUMERICAL}  numerical failure (vacuous bound, no interior critical pair)
  {EXIT_CAP}  enumeration cap exceeded
  {EXIT_OUTPUT}  output path not writable
"""

MANIFEST_LOG = "manifest.jsonl"
SEED_ENV = "POGG_SEED"


def _int_list(value: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in value.split(",") if part.strip())


def _float_list(value: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in value.split(",") if part.strip())


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--b", type=int, help="number of groups")
    common.add_argument("--n", type=int, help="players per group (symmetric)")
    common.add_argument("--sizes", type=_int_list, help="comma separated group sizes n_1,...,n_b")
    common.add_argument("--m", type=int, help="sample window (default 1)")
    common.add_argument("--r", type=float, help="return on the common fund")
    common.add_argument("--config", help="game configuration file of `key = value` lines")
    common.add_argument("--out", help="artifact path; reports go to stdout when omitted")
    common.add_argument("--seed", type=int, help=f"random seed (default ${SEED_ENV} or 0)")
    common.add_argument("--debug", action="store_true", help="debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="pogg",
        description="Grouped sequential public-goods game with position uncertainty",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sweep = commands.add_parser("sweep-h", parents=[common], help="H(gamma) curve from closed forms and oracle")
    sweep.add_argument("--points", type=int, default=2048, help="gamma grid size")
    sweep.add_argument("--overlay", type=_int_list, help="group sizes to overlay at the fixed N, e.g. 1,2,4")
    sweep.set_defaults(handler=cmd_sweep_h)

    solve = commands.add_parser("solve", parents=[common], help="mixed equilibrium roots at --r")
    solve.add_argument("--source", choices=[s.value for s in Source], default=Source.closedform.value)
    solve.add_argument("--tol", type=float, default=1e-10)
    solve.set_defaults(handler=cmd_solve)

    rsharp = commands.add_parser("rsharp", parents=[common], help="critical return r_sharp and gamma_sharp")
    rsharp.add_argument("--source", choices=[s.value for s in Source], default=Source.closedform.value)
    rsharp.set_defaults(handler=cmd_rsharp)

    threshold = commands.add_parser("threshold", parents=[common], help="pure strategy thresholds on r")
    threshold.add_argument("--mode", choices=[m.value for m in ThresholdMode], default=ThresholdMode.max.value)
    threshold.set_defaults(handler=cmd_threshold)

    verify = commands.add_parser("verify", parents=[common], help="one-shot deviation check of a profile")
    verify.add_argument("--gamma", type=float, help="forgiving profile with this gamma (grim when omitted)")
    verify.add_argument("--tol", type=float, default=1e-8)
    verify.add_argument("--brute", action="store_true", help="also enumerate every play (N <= 12)")
    verify.set_defaults(handler=cmd_verify)

    simulate = commands.add_parser("simulate", parents=[common], help="seeded Monte Carlo of full plays")
    simulate.add_argument("--gamma", type=float, help="forgiving profile with this gamma (grim when omitted)")
    simulate.add_argument("--runs", type=int, default=10_000)
    simulate.add_argument("--eps", type=float, default=0.0, help="tremble probability")
    simulate.set_defaults(handler=cmd_simulate)

    reconcile = commands.add_parser("reconcile", parents=[common], help="closed forms against the oracle")
    reconcile.add_argument("--points", type=int, default=11)
    reconcile.set_defaults(handler=cmd_reconcile)

    explore = commands.add_parser("explore", parents=[common], help="mixed roots for m > 1 over a grid of r")
    explore.add_argument("--r-grid", type=_float_list, required=True, help="comma separated returns")
    explore.add_argument("--tol", type=float, default=1e-10)
    explore.set_defaults(handler=cmd_explore)

    return parser


def game_config(args: argparse.Namespace) -> models.GameConfig:
    """Config file values first, flags on top."""
    data: Dict[str, Any] = {}
    if args.config:
        loader = GameConfigFile(args.config)
        loader.load()
        data.update(loader.values)

    for key in ("b", "m", "r"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.n is not None:
        data.pop("sizes", None)
        data["n"] = args.n
    if args.sizes is not None:
        data.pop("n", None)
        data["sizes"] = args.sizes
        data.setdefault("b", len(args.sizes))

    if "b" not in data:
        raise errors.PoggConfigError(err=None, message="The number of groups is missing, use --b or --config")
    return models.build_model(model=models.GameConfig, data=data)


def resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError as e:
        raise errors.PoggConfigError(err=e, message=f"${SEED_ENV} must be an integer, got '{raw}'")


def _profile(gamma: Optional[float]) -> StrategyProfile:
    return StrategyProfile.grim() if gamma is None else StrategyProfile.forgiving(gamma)


def make_manifest(
    command: str, config: models.GameConfig, params: Dict[str, Any], seeds: List[int], outputs: List[str]
) -> RunManifest:
    """manifest_id hashes the inputs only, so equal inputs give equal artifacts."""
    snapshot = {"game": config.model_dump(mode="json"), "params": params}
    payload = json.dumps(
        {"command": command, "config": snapshot, "version": __version__, "seeds": seeds}, sort_keys=True
    )
    manifest_id = hashlib.sha256(payload.encode()).hexdigest()
    return RunManifest(
        manifest_id=manifest_id, command=command, config=snapshot, version=__version__, seeds=seeds, outputs=outputs
    )


def _append_manifest(manifest: RunManifest, out: Optional[str]) -> None:
    if not out:
        return
    log_path = Path(out).parent / MANIFEST_LOG
    stamped = manifest.model_copy(update={"created_at": datetime.datetime.now(datetime.timezone.utc).isoformat()})
    try:
        with open(log_path, "a") as file:
            file.write(stamped.model_dump_json() + "\n")
    except OSError as e:
        raise errors.PoggOutputError(err=e, path=str(log_path))


def emit_report(
    command: str,
    config: models.GameConfig,
    params: Dict[str, Any],
    result: Dict[str, Any],
    summary: str,
    out: Optional[str],
    seeds: Sequence[int] = (),
) -> CommandReport:
    manifest = make_manifest(command, config, params, list(seeds), [out] if out else [])
    report = CommandReport(manifest=manifest, result=result)
    text = report.model_dump_json(indent=2)
    if out:
        try:
            Path(out).write_text(text + "\n")
        except OSError as e:
            raise errors.PoggOutputError(err=e, path=out)
        _append_manifest(manifest, out)
        print(summary)
    else:
        print(text)
    return report


def _dump(model: BaseModel) -> Dict[str, Any]:
    return model.model_dump(mode="json")


def cmd_sweep_h(args: argparse.Namespace) -> int:
    config = game_config(args)
    if args.points < 2:
        raise errors.PoggBuildModelError(err=f"points={args.points}", message="A sweep needs at least 2 grid points")
    gammas = np.linspace(0.0, 1.0, args.points)
    params = {"points": args.points, "overlay": list(args.overlay) if args.overlay else None}

    configs = [config]
    if args.overlay:
        configs = []
        for n in args.overlay:
            if config.N % n:
                raise errors.PoggBuildModelError(err=f"N={config.N}, n={n}", message="Overlay sizes must divide N")
            data = {"b": config.N // n, "n": n, "m": config.m, "r": config.r}
            configs.append(models.build_model(model=models.GameConfig, data=data))

    rows = []
    for overlay_config in configs:
        lab = Laboratory.from_config(overlay_config)
        closedform, oracle = lab.closedform, lab.oracle
        for gamma in gammas:
            gamma = float(gamma)
            rows.append(
                {
                    "n": overlay_config.sizes[0],
                    "gamma": gamma,
                    "h_closedform": closedform.H_asym(config.r, gamma) if overlay_config.m == 1 else None,
                    "h_oracle": oracle.oracle_H(config.r, gamma),
                }
            )

    manifest = make_manifest("sweep-h", config, params, [], [args.out] if args.out else [])
    fieldnames = ["n", "gamma", "h_closedform", "h_oracle"] if args.overlay else ["gamma", "h_closedform", "h_oracle"]
    try:
        file = open(args.out, "w", newline="") if args.out else sys.stdout
    except OSError as e:
        raise errors.PoggOutputError(err=e, path=args.out)
    try:
        file.write(f"# manifest_id={manifest.manifest_id}\n")
        file.write(f"# command={manifest.command} version={manifest.version}\n")
        file.write(f"# config={json.dumps(manifest.config, sort_keys=True)}\n")
        writer = csv.DictWriter(file, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            file.close()
    _append_manifest(manifest, args.out)
    if args.out:
        print(f"Wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    config = game_config(args)
    lab = Laboratory.from_config(config)
    roots = lab.solver.find_mixed_roots(config.r, source=Source(args.source), tol=args.tol)
    checks = [lab.oracle.verify_equilibrium(StrategyProfile.forgiving(g), tol=1e-6) for g in roots.roots]
    summary = f"{len(roots.roots)} roots at r={config.r}: " + ", ".join(
        f"gamma={g:.10f} (|H|={res:.1e}, {check.verdict})"
        for g, res, check in zip(roots.roots, roots.residuals, checks)
    )
    result = {"roots": _dump(roots), "checks": [_dump(check) for check in checks]}
    emit_report("solve", config, {"source": args.source, "tol": args.tol}, result, summary, args.out)
    return EXIT_OK


def cmd_rsharp(args: argparse.Namespace) -> int:
    config = game_config(args)
    pair = Laboratory.from_config(config).solver.find_r_sharp(source=Source(args.source))
    summary = f"r_sharp={pair.r_sharp:.10f} at gamma_sharp={pair.gamma_sharp:.10f} (max S={pair.max_s:.10f})"
    emit_report("rsharp", config, {"source": args.source}, _dump(pair), summary, args.out)
    return EXIT_OK


def cmd_threshold(args: argparse.Namespace) -> int:
    config = game_config(args)
    lab = Laboratory.from_config(config)
    mode = ThresholdMode(args.mode)
    if config.m == 1:
        lower, upper = lab.closedform.pure_interval_m1()
        result = {"mode": mode.value, "interval": [lower, upper]}
        summary = f"grim is an equilibrium for r in [{lower:.10g}, {upper:.10g}]"
    else:
        bound = lab.closedform.pure_threshold_m_gt_1(mode)
        exact = lab.solver.pure_threshold_exact_m_gt_1()
        result = {"mode": mode.value, "bound": bound, "exact": exact}
        summary = f"bound ({mode.value}) = {bound:.10g}, exact threshold = {exact:.10g}"
    emit_report("threshold", config, {"mode": mode.value}, result, summary, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    config = game_config(args)
    lab = Laboratory.from_config(config)
    profile = _profile(args.gamma)
    report = lab.oracle.verify_equilibrium(profile, tol=args.tol)
    result = {"report": _dump(report)}
    if args.brute:
        result["enumeration"] = _dump(lab.oracle.brute_force_enumerate(profile))
    summary = (
        f"{report.verdict}: gains root={report.gain_root:.3e} "
        f"clean={report.gain_clean:.3e} dirty={report.gain_dirty:.3e}"
    )
    params = {"gamma": args.gamma, "tol": args.tol, "brute": args.brute}
    emit_report("verify", config, params, result, summary, args.out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = game_config(args)
    seed = resolve_seed(args)
    stats = Laboratory.from_config(config).montecarlo.simulate(
        _profile(args.gamma), runs=args.runs, seed=seed, tremble_eps=args.eps
    )
    summary = (
        f"mean total contribution {stats.mean_total_contribution:.6f} +- {stats.std_error:.6f} over {stats.runs} runs"
    )
    params = {"gamma": args.gamma, "runs": args.runs, "eps": args.eps}
    emit_report("simulate", config, params, _dump(stats), summary, args.out, seeds=[seed])
    return EXIT_OK


def cmd_reconcile(args: argparse.Namespace) -> int:
    config = game_config(args)
    report = Laboratory.from_config(config).solver.reconcile(np.linspace(0.0, 1.0, args.points))
    gap = f"{report.max_h_diff:.3e}" if report.max_h_diff is not None else "n/a"
    summary = f"max |H closedform - H oracle| = {gap}; {report.note}"
    emit_report("reconcile", config, {"points": args.points}, _dump(report), summary, args.out)
    return EXIT_OK


def cmd_explore(args: argparse.Namespace) -> int:
    config = game_config(args)
    table = Laboratory.from_config(config).solver.conjecture_explore(args.r_grid, tol=args.tol)
    summary = f"{len(table.rows)} returns explored, smallest r with mixed roots: {table.critical_r}"
    emit_report("explore", config, {"r_grid": list(args.r_grid), "tol": args.tol}, _dump(table), summary, args.out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    if args.debug:
        logging.basicConfig(level=logging.DEBUG)

    try:
        return args.handler(args)
    except errors.PoggEnumerationCapError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    except (errors.PoggVacuousBoundError, errors.PoggNoCriticalPairError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except errors.PoggOutputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OUTPUT
    except errors.PoggError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
