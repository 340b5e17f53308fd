"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 validation or forge precondition
failure, 3 a certificate did not pass.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine, figures, forge, verify
from .engine import DEFAULT_SEED
from .instance import Instance, validate_instance
from .policies import Fixed, format_policy, parse_policy

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_CERT_FAIL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")


def _forge_from_args(args) -> tuple[Instance, forge.UcbForgeParams | None]:
    kind = args.kind
    if kind is None:
        raise UsageError("--kind is required")
    if args.T is None or args.K is None:
        raise UsageError("--T and --K are required")
    if args.d is not None:
        gamma = args.d if args.gamma is None else args.gamma
        return forge.forge_restart_composite(args.T, args.K, args.d, gamma, kind, args.m), None
    if kind == "ucb":
        return forge.forge_ucb(args.T, args.K)
    if kind == "etc" and args.m is None:
        raise UsageError("--m is required for --kind etc")
    return forge.forge_single(kind, args.T, args.K, args.m), None


def _policy(text: str):
    try:
        return parse_policy(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_instance(args) -> Instance:
    if args.instance:
        inst = Instance.load(args.instance)
    else:
        inst, _ = _forge_from_args(args)
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.violations))
    return inst


def cmd_forge(args) -> int:
    inst, params = _forge_from_args(args)
    if args.output is None:
        _write(inst.to_json(), None)
        return EXIT_OK
    inst.save(args.output)
    if params is not None:
        sidecar = Path(args.output).with_suffix(".params.json")
        sidecar.write_text(json.dumps(params.sidecar(), indent=1) + "\n")
        print(f"wrote {args.output} and {sidecar} (c={params.c}, delta={params.delta:.5f}, "
              f"breakpoint={params.breakpoint})")
    else:
        print(f"wrote {args.output} ({validate_instance(inst).breakpoints} breakpoints)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    inst = _load_instance(args)
    spec = _policy(args.policy)
    tie = Fixed(args.tie) if args.tie is not None else None
    traj = engine.run_episode(inst, spec, args.seed, tie, trace=args.trace)
    if args.output is None:
        engine.write_trace_csv(inst, traj, sys.stdout)
    else:
        engine.write_trace_csv(inst, traj, args.output)
        print(json.dumps({"policy": format_policy(spec), "seed": args.seed, "regret": traj.regret}))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    inst = _load_instance(args)
    spec = _policy(args.policy)
    report = engine.monte_carlo_regret(inst, spec, args.reps, args.seed)
    out = {"instance": inst.to_dict(), "policy": format_policy(spec), "report": report.to_dict()}
    _write(json.dumps(out, indent=1), args.output)
    return EXIT_OK


def _theorem_params(tid: str, args) -> list[dict]:
    def need(*names):
        missing = [n for n in names if getattr(args, n) is None]
        if missing:
            raise UsageError(f"{tid} needs " + ", ".join("--" + n for n in missing))

    if tid == "ETC_T1":
        need("T", "K", "m")
        return [{"T": args.T, "K": args.K, "m": args.m}]
    if tid == "EG_T2":
        need("T", "K", "eps")
        return [{"T": args.T, "K": args.K, "eps": e} for e in args.eps]
    if tid in ("UCB_T3", "UCB_C1"):
        need("T", "K")
        return [{"T": args.T, "K": args.K}]
    if tid == "RESTART_T4":
        need("T", "K", "d")
        return [{"K": args.K, "d": args.d, "T": args.T}]
    if tid == "RESTART_T5":
        need("T", "K", "d", "gamma", "a")
        return [{"a": args.a, "T": args.T, "d": args.d, "gamma": args.gamma, "K": args.K}]
    need("T", "K", "d", "gamma")
    p = {"T": args.T, "K": args.K, "d": args.d, "gamma": args.gamma, "kind": args.kind or "ucb"}
    if args.m is not None:
        p["m"] = args.m
    if args.eps is not None:
        p["eps"] = args.eps[0]
    return [p]


def cmd_certify(args) -> int:
    if args.theorem is None:
        raise UsageError("--theorem is required")
    try:
        tid = verify.canonical_theorem(args.theorem)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    certs = [verify.certify(tid, p, args.reps, args.seed) for p in _theorem_params(tid, args)]
    payload = [c.to_dict() for c in certs]
    _write(json.dumps(payload[0] if len(payload) == 1 else payload, indent=1), args.output)
    for c in certs:
        print(f"{c.theorem} {'PASS' if c.passed else 'FAIL'} bound={c.bound.value:.6g}",
              file=sys.stderr)
    return EXIT_OK if all(c.passed for c in certs) else EXIT_CERT_FAIL


def cmd_figure(args) -> int:
    if args.id not in figures.FIGURE_IDS:
        raise UsageError(f"--id must be one of {figures.FIGURE_IDS}")
    figures.emit_figure_data(args.id, args.output if args.output else sys.stdout, args.seed)
    return EXIT_OK


def _eps_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nsbandits", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--kind", help="forge kind: ucb, etc, eg-early, eg-mid (or ucb-anytime for certify)")
    common.add_argument("--T", type=int)
    common.add_argument("--K", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--eps", type=_eps_list, help="value or comma-separated list")
    common.add_argument("--d", type=int, help="restart count / composite blocks")
    common.add_argument("--gamma", type=int)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("-o", "--output")

    f = sub.add_parser("forge", parents=[common], help="write a forged instance")
    f.set_defaults(func=cmd_forge)

    for name, func, helptext in (("simulate", cmd_simulate, "run one episode, write a trace CSV"),
                                 ("evaluate", cmd_evaluate, "Monte-Carlo expected regret")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("-i", "--instance", help="instance JSON (otherwise forged from --kind ...)")
        s.add_argument("--policy", required=True, help="e.g. etc:m=20, eps-greedy:eps=0.1, ucb-known")
        s.set_defaults(func=func)
        if name == "simulate":
            s.add_argument("--trace", action="store_true", help="add mean/index columns")
            s.add_argument("--tie", type=int, help="force ties to this arm when it is tied")
        else:
            s.add_argument("--reps", type=int, default=1000)

    c = sub.add_parser("certify", parents=[common], help="certify a lower bound")
    c.add_argument("--theorem")
    c.add_argument("--reps", type=int)
    c.add_argument("--a", type=float, help="single-change rate for restart-change")
    c.set_defaults(func=cmd_certify)

    g = sub.add_parser("figure", help="per-round data for figure 1, 2 or 3")
    g.add_argument("--id", type=int, required=True)
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_figure)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        if args.command in ("simulate", "evaluate") and args.eps is not None:
            raise UsageError("--eps is not used here; put it in --policy")
        return args.func(args)
    except UsageError as exc:
        print(f"nsbandits: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"nsbandits: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
