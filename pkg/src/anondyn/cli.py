"""Command line: ``anondyn run`` and ``anondyn verify``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import agents as ag
from . import views as vw
from .netsim import ExperimentConfig, FaultSpec, collective_tree, load_trace, run
from .netsim.trace import KINDS
from .suites import SUITES, run_suite

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

CONFIG_KEYS = {"algorithm", "n", "inputs", "adversary", "seed", "horizon", "faults", "workers",
               "checks", "trace"}
FAULT_KEYS = {"kind", "p", "h"}


class ConfigError(ValueError):
    pass


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"unknown {where} key(s): {', '.join(extra)}")


def _expect(value: Any, kind: type | tuple, what: str) -> Any:
    if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
        raise ConfigError(f"{what} has the wrong type")
    return value


def config_from_dict(d: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate a parsed config document; relative trace paths resolve against ``base_dir``."""
    if not isinstance(d, dict):
        raise ConfigError("config must be an object")
    _reject_unknown(d, CONFIG_KEYS, "config")
    if "algorithm" not in d:
        raise ConfigError("missing key: algorithm")
    algorithm = _expect(d["algorithm"], str, "algorithm")
    if algorithm not in ag.ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}")

    trace = None
    if d.get("trace") is not None:
        path = base_dir / _expect(d["trace"], str, "trace")
        try:
            trace = load_trace(path)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load trace {path}: {exc}") from None

    inputs = d.get("inputs")
    if isinstance(inputs, dict):  # census form: label -> count
        expanded = []
        for label in sorted(inputs):
            expanded += [label] * _expect(inputs[label], int, f"inputs.{label}")
        inputs = expanded
    if inputs is not None:
        inputs = tuple(_expect(x, str, "inputs entry") for x in _expect(inputs, list, "inputs"))

    n = d.get("n")
    if n is None:
        n = trace.n if trace is not None else (len(inputs) if inputs is not None else None)
    if n is None:
        raise ConfigError("missing key: n")
    _expect(n, int, "n")

    adversary = d.get("adversary", "random_connected")
    if isinstance(adversary, dict):
        _reject_unknown(adversary, {"kind"}, "adversary")
        adversary = adversary.get("kind")
    if adversary not in KINDS:
        raise ConfigError(f"unknown adversary {adversary!r}")

    horizon = d.get("horizon")
    if horizon == "auto":
        horizon = None
    if horizon is not None:
        _expect(horizon, int, "horizon")

    faults = d.get("faults", {})
    if isinstance(faults, str):
        faults = {"kind": faults}
    _reject_unknown(_expect(faults, dict, "faults"), FAULT_KEYS, "faults")

    try:
        return ExperimentConfig(
            algorithm=algorithm,
            n=n,
            inputs=inputs,
            adversary=adversary,
            seed=_expect(d.get("seed", 0), int, "seed"),
            horizon=horizon,
            faults=FaultSpec(**faults),
            workers=_expect(d.get("workers", 1), int, "workers"),
            checks=_expect(d.get("checks", False), bool, "checks"),
            trace=trace,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Inverse of ``config_from_dict`` for configs without an explicit trace file."""
    out: dict[str, Any] = {"algorithm": cfg.algorithm, "n": cfg.n, "adversary": cfg.adversary,
                           "seed": cfg.seed, "horizon": cfg.horizon if cfg.horizon else "auto"}
    if cfg.inputs is not None:
        out["inputs"] = list(cfg.inputs)
    if cfg.faults != FaultSpec():
        out["faults"] = {"kind": cfg.faults.kind, "p": cfg.faults.p, "h": cfg.faults.h}
    if cfg.checks:
        out["checks"] = True
    return out


def _parse_dot_at(text: str) -> tuple[int, int | None]:
    try:
        r, _, who = text.partition(",")
        return int(r), None if who == "collective" else int(who)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROUND,AGENT or ROUND,collective, got {text!r}")


def _parse_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        return range(int(lo), int(hi if sep else lo) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}")


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def cmd_run(args: argparse.Namespace) -> int:
    path = Path(args.config)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.horizon is not None:
        doc["horizon"] = args.horizon
    try:
        cfg = config_from_dict(doc, path.parent)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    for r, who in args.dot_at:
        if who is not None and not 0 <= who < cfg.n:
            print(f"error: --dot-at agent {who} out of range", file=sys.stderr)
            return EXIT_USAGE
    wanted = {r for r, _ in args.dot_at}
    snapshots: dict[int, list[vw.View]] = {}

    def observe(t, states):
        if t in wanted:
            snapshots[t] = [s.view for s in states]

    try:
        res = run(cfg, observe)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    missing = sorted(wanted - snapshots.keys())
    if missing:
        print(f"error: --dot-at round {missing[0]} is beyond the horizon {res.horizon}",
              file=sys.stderr)
        return EXIT_USAGE

    summary = res.summary()
    summary["undominatedRounds"] = res.undominated_rounds
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "records.jsonl").write_text(res.stream())
        (out / "summary.json").write_text(_dump(summary) + "\n")
        for r, who in args.dot_at:
            views = snapshots[r]
            if who is None:
                name, view = f"round{r}_collective", collective_tree(views)
            else:
                name, view = f"round{r}_agent{who}", views[who]
            (out / f"{name}.dot").write_text(vw.to_dot(view, name))
    if not args.quiet:
        print(_dump(summary))
    return EXIT_VIOLATION if res.violations else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    report = run_suite(args.suite, args.n, args.seeds, args.adversary or KINDS)
    if report.ok:
        if not args.quiet:
            print(f"{args.suite}: pass ({report.instances} instances)")
        return EXIT_OK
    fail = report.failure
    repro = _dump(config_to_dict(fail.config))
    print(f"{args.suite}: FAIL after {report.instances} instances: {fail.message}", file=sys.stderr)
    print(f"reproduce with this config: {repro}", file=sys.stderr)
    if args.repro:
        Path(args.repro).write_text(repro + "\n")
    return EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anondyn",
                                     description="Simulate and check counting algorithms on "
                                                 "anonymous dynamic networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one experiment config")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--horizon", type=int, help="override the config horizon")
    p.add_argument("--out", help="directory for records.jsonl, summary.json and DOT files")
    p.add_argument("--dot-at", type=_parse_dot_at, action="append", default=[],
                   metavar="ROUND,AGENT|collective", help="export a view snapshot (repeatable)")
    p.add_argument("--quiet", action="store_true", help="do not print the summary")
    p.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run a named property suite")
    v.add_argument("suite", choices=sorted(SUITES))
    v.add_argument("--n", type=_parse_range, default=range(2, 7), metavar="LO..HI")
    v.add_argument("--seeds", type=int, default=5)
    v.add_argument("--adversary", action="append", choices=KINDS,
                   help="restrict to these adversaries (repeatable; default all)")
    v.add_argument("--repro", help="also write the failing config to this file")
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
