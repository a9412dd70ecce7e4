"""Command-line entry point: ``umblt <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import UMBLTError
from .experiments import (
    ExperimentConfig,
    ExperimentSetup,
    add_noise,
    load_config,
    noise_seed,
    preset_config,
    run_experiment,
    write_pgm,
)
from .functional import InternalFunctional
from .grid import read_csv, relative_l2_error, write_csv

log = logging.getLogger("umblt")


class CLIError(Exception):
    """Bad invocation; reported like any other failure."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(message)


def _noise_list(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from None


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="TOML experiment config")
    p.add_argument("--preset", type=int, choices=(1, 2, 3, 4), help="start from a built-in experiment")
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=_noise_list, help="noise levels, e.g. 0,0.01,0.05")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"), help="forward grid")
    p.add_argument("--recon-grid", type=int, nargs=2, metavar=("NX", "NY"), help="reconstruction grid")
    p.add_argument("--directions", type=int, metavar="M")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="umblt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("forward", parents=[common], help="solve the forward RTE for a configured source")
    sp.add_argument("--source", type=int, default=0, help="index into the configured sources")
    sub.add_parser("adjoint", parents=[common], help="solve the adjoint RTE with the configured outflow data")
    sp = sub.add_parser("synthesize", parents=[common], help="write the internal functional (with noise) as CSV")
    sp.add_argument("--source", type=int, default=0)
    sp = sub.add_parser("invert", parents=[common], help="reconstruct a source from an internal functional")
    sp.add_argument("--method", choices=("neumann", "fredholm"))
    sp.add_argument("--measurement", type=Path, help="H CSV on the reconstruction grid; synthesized if omitted")
    sp.add_argument("--truth", type=Path, help="ground-truth CSV for the error report")
    sp.add_argument("--source", type=int, default=0)
    sp = sub.add_parser("experiment", parents=[common], help="run one of the four built-in experiments")
    sp.add_argument("number", type=int, choices=(1, 2, 3, 4))
    sub.add_parser("audit", parents=[common], help="well-posedness and contraction report")
    sub.add_parser("show-config", parents=[common], help="print the resolved config as TOML")
    return parser


def resolve_config(args, preset=None) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif preset is not None or args.preset is not None:
        cfg = preset_config(preset if preset is not None else args.preset)
    else:
        cfg = ExperimentConfig()
    return cfg.with_overrides(
        seed=args.seed,
        noise=args.noise,
        out=args.out,
        grid=args.grid,
        recon_grid=args.recon_grid,
        directions=args.directions,
        method=getattr(args, "method", None),
    )


def _source_index(cfg, index):
    n = len(cfg["sources"])
    if not 0 <= index < n:
        raise CLIError(f"--source {index} out of range; config has {n} source(s)")
    return index


def cmd_forward(args, cfg):
    setup = ExperimentSetup(cfg)
    i = _source_index(cfg, args.source)
    sol = setup.forward_solution(i)
    out = cfg.output_dir
    sol.field.write_csvs(out, "u")
    write_csv(setup.source(i), out / "source.csv")
    print(f"forward solve: {sol.iterations} sweeps, final relative update {sol.final_residual:.3e}")
    print(f"wrote {cfg.directions.M} direction files to {out}")


def cmd_adjoint(args, cfg):
    setup = ExperimentSetup(cfg)
    v0 = setup.v0_forward
    out = cfg.output_dir
    v0.write_csvs(out, "v0")
    print(f"adjoint solve: max v0 = {v0.values.max():.6g}, min v0 = {v0.values.min():.6g}")
    print(f"wrote {cfg.directions.M} direction files to {out}")


def cmd_synthesize(args, cfg):
    setup = ExperimentSetup(cfg)
    i = _source_index(cfg, args.source)
    H = setup.measurement(i)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_csv(setup.truth(i), out / "truth.csv")
    for li, level in enumerate(cfg.noise_levels):
        Hn = add_noise(H, level, noise_seed(cfg.require_seed(), i, li))
        path = out / f"H_noise_{level * 100:g}pct.csv"
        write_csv(Hn.h, path)
        print(f"wrote {path}")


def cmd_invert(args, cfg):
    setup = ExperimentSetup(cfg)
    i = _source_index(cfg, args.source)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if args.measurement is not None:
        h = read_csv(args.measurement)
        if h.grid != setup.recon_grid:
            raise CLIError("measurement grid does not match the reconstruction grid of the config")
        H = InternalFunctional(h, {"file": str(args.measurement)})
        truth = read_csv(args.truth) if args.truth is not None else None
    else:
        level = cfg.noise_levels[0] if cfg.noise_levels else 0.0
        H = add_noise(setup.measurement(i), level, noise_seed(cfg.require_seed(), i, 0))
        truth = setup.truth(i)
    result = setup.invert(H)
    write_csv(result.source, out / "reconstruction.csv")
    if cfg["output"].get("pgm", True):
        write_pgm(result.source, out / "reconstruction.pgm")
    lines = [f"method {result.method}", f"converged {result.converged}"]
    if result.method == "neumann":
        lines.append(f"iterations {result.iterations_or_rank}")
        lines.append("residual_history " + " ".join(f"{r:.3e}" for r in result.residual_history))
    else:
        lines.append(f"effective_rank {result.effective_rank}/{result.basis_size}")
        lines.append(f"gram_residual {result.gram_residual:.3e}")
    if truth is not None:
        lines.append(f"relative_l2_error {relative_l2_error(result.source, truth):.6e}")
        write_csv(truth - result.source, out / "difference.csv")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


def cmd_experiment(args, cfg):
    report = run_experiment(cfg)
    failed = [e for e in report.entries if e.get("error_message")]
    print(f"wrote {cfg.output_dir / 'report.json'}")
    if failed:
        raise UMBLTError(f"{len(failed)} of {len(report.entries)} runs failed; see report.json")


def cmd_audit(args, cfg):
    setup = ExperimentSetup(cfg)
    audit = setup.audit()
    wp = audit.wellposedness
    print(f"well-posedness: {wp.summary()}")
    print(f"contraction:    {audit.summary()}")
    if not audit.neumann_guaranteed:
        print("the Neumann series is not certified to converge for this medium")


def cmd_show_config(args, cfg):
    sys.stdout.write(cfg.to_toml())


COMMANDS = {
    "forward": cmd_forward,
    "adjoint": cmd_adjoint,
    "synthesize": cmd_synthesize,
    "invert": cmd_invert,
    "experiment": cmd_experiment,
    "audit": cmd_audit,
    "show-config": cmd_show_config,
}


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"status": "error", "type": kind, "message": str(message)}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CLIError as exc:
        return _fail("UsageError", exc, 2)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = resolve_config(args, args.number if args.command == "experiment" and args.config is None else None)
        COMMANDS[args.command](args, cfg)
    except CLIError as exc:
        return _fail("UsageError", exc, 2)
    except UMBLTError as exc:
        return _fail(type(exc).__name__, exc, 1)
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__, exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
