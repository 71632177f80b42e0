"""Command-line entry point ``pathhedge``.

Each subcommand runs the built-in scenarios of one claim family (or the one
named by ``--scenario``, or a JSON config via ``--config``) and writes
``runs.csv``, ``levels.csv`` and ``summary.json`` under ``--out/<scenario>/``.
The exit status is 0 iff every scenario passes its thresholds.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path as FsPath

from .experiments import FAMILIES, SCENARIOS, ScenarioConfig, builtin, run_scenario


def _levels(text: str) -> list[int]:
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected 'a..b' or a single level, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    if hi < lo:
        raise argparse.ArgumentTypeError("level range must be increasing")
    return list(range(lo, hi + 1))


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathhedge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for family, names in FAMILIES.items():
        p = sub.add_parser(family, help=f"run: {', '.join(names)}")
        p.add_argument("--scenario", choices=names, help="run only this scenario")
        p.add_argument("--config", type=FsPath, help="JSON scenario document (overrides --scenario)")
        p.add_argument("--out", type=FsPath, default=FsPath("results"), help="output directory")
        p.add_argument("--seeds", type=int, help="number of seeds")
        p.add_argument("--base-seed", type=int, help="first seed")
        p.add_argument("--levels", type=_levels, help="reported levels, e.g. 8..16")
        p.add_argument("--quiet", action="store_true", help="no progress output")
    sub.add_parser("list-scenarios", help="list built-in scenarios and the claim each checks")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.seeds is not None:
        out["seeds"] = args.seeds
    if args.base_seed is not None:
        out["base_seed"] = args.base_seed
    if args.levels is not None:
        out["levels"] = args.levels
    return out


def _configs(args) -> list[ScenarioConfig]:
    over = _overrides(args)
    if args.config is not None:
        return [ScenarioConfig.load(args.config).replace(**over)]
    names = [args.scenario] if args.scenario else FAMILIES[args.command]
    return [builtin(name, **over) for name in names]


def _report(result, stream) -> None:
    s = result.summary
    print(f"[{'PASS' if s['pass'] else 'FAIL'}] {s['scenario']}: {s['claim']}", file=stream)
    for leg in result.config.legs:
        meds = [f"{result.stat(leg['name'], v):.3e}" for v in result.config.levels]
        fit = s["fits"][leg["name"]]
        slope = fit["slope"] if isinstance(fit["slope"], str) or fit["slope"] is None else f"{fit['slope']:+.3f}"
        print(f"    {leg['name']:<12} medians {' '.join(meds)}  slope {slope}", file=stream)
    for th in s["thresholds"]:
        obs = th["observed"]
        obs = f"{obs:.4g}" if isinstance(obs, float) else obs
        print(f"    {'ok ' if th['pass'] else 'BAD'} {th.get('id', th['type'])}: observed {obs}", file=stream)
    if s["errored_runs"]:
        print(f"    {s['errored_runs']} of {s['runs']} runs raised", file=stream)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-scenarios":
        for family, names in FAMILIES.items():
            for name in names:
                print(f"{family:<15} {name:<22} {SCENARIOS[name]['claim']}")
        return 0
    try:
        configs = _configs(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"pathhedge: {exc}", file=sys.stderr)
        return 2
    ok = True
    for cfg in configs:
        progress = None
        if not args.quiet:
            def progress(k, n, name=cfg.name):
                print(f"\r{name}: seed {k}/{n}", end="" if k < n else "\n", file=sys.stderr, flush=True)
        result = run_scenario(cfg, args.out / cfg.name, progress)
        _report(result, sys.stdout)
        ok &= result.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
