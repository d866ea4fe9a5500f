"""Command-line entry point.

Subcommands mirror the experiments: ``demo1d``, ``mms``, ``spinodal``, and
``restriction dump``. Imports are deferred per subcommand so the quick
matrix dump does not pay for the solver stack. Exit code 0 means every
internal sanity assertion passed.
"""
from __future__ import annotations

import argparse
import sys

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_demo = sub.add_parser("demo1d", help="1D coarsening demo (three integrals)")
    p_demo.add_argument("--basis", choices=("linear", "quad"), default="linear")
    p_demo.add_argument("--config", default=None)
    p_demo.add_argument("--out", default=None)

    p_mms = sub.add_parser("mms", help="manufactured-solution diffusion run")
    p_mms.add_argument("--config", required=True)
    p_mms.add_argument("--mode", choices=("injection", "conservative"), default=None)
    p_mms.add_argument("--out", default=None)

    p_sp = sub.add_parser("spinodal", help="Cahn-Hilliard spinodal decomposition")
    p_sp.add_argument("--config", required=True)
    p_sp.add_argument("--mode", choices=("injection", "conservative"), default=None)
    p_sp.add_argument("--out", default=None)

    p_rest = sub.add_parser("restriction", help="restriction-operator utilities")
    rest_sub = p_rest.add_subparsers(dest="action", required=True)
    p_dump = rest_sub.add_parser("dump", help="print the 1D restriction matrix")
    p_dump.add_argument("--p", type=int, required=True, choices=(1, 2))
    p_dump.add_argument("--nq", type=int, default=None)

    return parser


def _cmd_restriction_dump(args) -> int:
    from .restriction import build_restriction_1d

    op = build_restriction_1d(args.p, args.nq)
    for row in op.matrix:
        print(" ".join(f"{v:.17g}" for v in row))
    return 0


def _cmd_demo1d(args) -> int:
    from .config import parse_config
    from .runs import emit_outputs, run_demo1d

    degree = 1 if args.basis == "linear" else 2
    out_dir = args.out
    if args.config:
        cfg = parse_config(args.config)
        degree = cfg.degree
        out_dir = out_dir or cfg.directory
    report = run_demo1d(degree)
    print(f"original     {report['original']:.6f}")
    print(f"injection    {report['injection']:.6f}")
    print(f"conservative {report['conservative']:.6f}")
    if out_dir:
        from .config import ExperimentConfig

        emit_outputs(report, ExperimentConfig(kind="demo1d", degree=degree), out_dir)
    if abs(report["conservative"] - report["original"]) > 1e-10:
        print("FAIL: conservative transfer changed the integral", file=sys.stderr)
        return 1
    return 0


def _cmd_mms(args) -> int:
    from .config import parse_config
    from .runs import emit_outputs, run_mms

    cfg = parse_config(args.config)
    out_dir = args.out or cfg.directory
    modes = (cfg.mode,) if cfg.mode != "both" else ("conservative", "injection")
    if args.mode:
        modes = (args.mode,)
    ok = True
    for mode in modes:
        result = run_mms(cfg, mode)
        emit_outputs(result, cfg, out_dir, mode)
        print(
            f"mms level={cfg.level} p={cfg.degree} mode={mode} "
            f"l2_error={result.l2_error:.6e} drift={result.mass_drift_final:.3e}"
        )
        if not (result.l2_error < 1.0):
            ok = False
    return 0 if ok else 1


def _cmd_spinodal(args) -> int:
    from .config import parse_config
    from .runs import emit_outputs, run_spinodal

    cfg = parse_config(args.config)
    out_dir = args.out or cfg.directory
    modes = (cfg.mode,) if cfg.mode != "both" else ("conservative", "injection")
    if args.mode:
        modes = (args.mode,)
    ok = True
    for mode in modes:
        result = run_spinodal(cfg, mode, out_dir=out_dir)
        emit_outputs(result, cfg, out_dir, mode)
        print(
            f"spinodal mode={mode} max|dm|={result.max_abs_drift:.3e} "
            f"events={len(result.delta_e_events)} completed={result.completed}"
        )
        if not result.completed:
            print(f"FAIL: {result.failure}", file=sys.stderr)
            ok = False
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "restriction":
        return _cmd_restriction_dump(args)
    if args.command == "demo1d":
        return _cmd_demo1d(args)
    if args.command == "mms":
        return _cmd_mms(args)
    if args.command == "spinodal":
        return _cmd_spinodal(args)
    raise AssertionError(f"unhandled command {args.command}")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
