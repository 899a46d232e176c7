"""Command-line entry point.

    wdmesh --scenario hybrid.cfg --runs 50 --output runs.csv
    wdmesh --strategy non_stock --role-in-a LC --role-in-b GM
    wdmesh --compare ts.cfg hybrid.cfg nonstock.cfg --seed 3

Flags override the matching scenario-file keys.  Config errors exit with
status 2 and one diagnostic per line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .engine import run_experiment
from .errors import ScenarioError, SimError
from .report import compare_strategies, emit_csv, format_ranking
from .scenario import build_spec, read_items

EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wdmesh", description="Simulate WiFi Direct multi-group gateway strategies.")
    p.add_argument("--scenario", type=Path, help="scenario file (key = value lines)")
    p.add_argument("--compare", type=Path, nargs="+", metavar="SCENARIO", help="rank several scenarios")
    p.add_argument("--strategy")
    p.add_argument("--role-in-a", dest="role_in_a")
    p.add_argument("--role-in-b", dest="role_in_b")
    p.add_argument("--stack")
    p.add_argument("--runs")
    p.add_argument("--seed")
    p.add_argument("--payload-mb", dest="payload_mb")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="cost-model parameter, e.g. link.p2p.p_deliver=1.0 (repeatable)")
    p.add_argument("--output", "-o", type=Path, help="write CSV (or the ranking table) here instead of stdout")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (results are identical for any value)")
    return p


def _flag_items(args) -> tuple[dict, list[str]]:
    items, errors = {}, []
    for key in ("strategy", "role_in_a", "role_in_b", "stack", "runs", "seed", "payload_mb"):
        value = getattr(args, key)
        if value is not None:
            items[key] = (None, value)
    for text in args.overrides:
        if "=" not in text:
            errors.append(f"command line: --set expects KEY=VALUE, got {text!r}")
            continue
        k, v = (s.strip() for s in text.split("=", 1))
        items[k] = (None, v)
    return items, errors


def load_spec(path: Path | None, args):
    if path is not None:
        try:
            text = path.read_text()
        except OSError as exc:
            raise ScenarioError([f"{path}: {exc.strerror}"]) from None
    else:
        text = ""
    items, errors = read_items(text)
    flags, flag_errors = _flag_items(args)
    items.update(flags)
    try:
        return build_spec(items, errors + flag_errors)
    except ScenarioError as exc:
        if path is not None:
            exc = ScenarioError([f"{path}: {e}" for e in exc.errors])
        raise exc from None


def _write(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, newline="")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.compare:
            if args.scenario is not None:
                raise ScenarioError(["command line: --scenario and --compare are mutually exclusive"])
            specs = [load_spec(p, args) for p in args.compare]
            rows = compare_strategies(specs, jobs=args.jobs)
            _write(format_ranking(rows), args.output)
            return 0
        spec = load_spec(args.scenario, args)
        reports, stats = run_experiment(spec, jobs=args.jobs)
    except ScenarioError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else 1

    _write(emit_csv(reports), args.output)
    t, e, d = stats["t_total"], stats["e_total"], stats["delivery_ratio"]
    print(
        f"{spec.strategy} {spec.config.label}: {stats.n} runs, "
        f"t_total {t.mean:.3f} s (sd {t.std:.3f}), e_total {e.mean:.3f} J, delivery {d.mean:.4f}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
