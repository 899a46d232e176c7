"""CSV output and the cross-strategy comparison table."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .engine import run_experiment
from .errors import InvalidArgument
from .gateway import TransferReport

CSV_HEADER = (
    "run_id",
    "strategy",
    "config",
    "t_rx_s",
    "t_switch_s",
    "t_tx_s",
    "t_total_s",
    "e_rx_j",
    "e_switch_j",
    "e_tx_j",
    "e_total_j",
    "bytes_delivered",
    "reconfig_count",
)


def _num(x: float) -> str:
    return "%.9f" % x


def csv_row(run_id: int, rep: TransferReport) -> list[str]:
    return [
        str(run_id),
        rep.strategy,
        rep.config.label,
        _num(rep.t_rx),
        _num(rep.t_switch),
        _num(rep.t_tx),
        _num(rep.t_total),
        _num(rep.e_rx),
        _num(rep.e_switch),
        _num(rep.e_tx),
        _num(rep.e_total),
        str(rep.bytes_delivered),
        str(rep.reconfig_count),
    ]


def emit_csv(reports, start: int = 0) -> str:
    """One row per report, run ids counting up from ``start`` in list order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for i, rep in enumerate(reports, start=start):
        w.writerow(csv_row(i, rep))
    return buf.getvalue()


@dataclass(frozen=True)
class RankRow:
    rank: int
    strategy: str
    config: str
    mean_t_total: float
    mean_e_total: float
    mean_delivery: float


def rank_results(results) -> list[RankRow]:
    """``results``: iterable of (spec, stats); sorted by mean time, then mean energy."""
    rows = [
        (st["t_total"].mean, st["e_total"].mean, spec.strategy, spec.config.label, st["delivery_ratio"].mean)
        for spec, st in results
    ]
    rows.sort(key=lambda r: (r[0], r[1]))
    return [RankRow(i + 1, s, c, t, e, d) for i, (t, e, s, c, d) in enumerate(rows)]


def compare_strategies(specs, jobs: int = 1) -> list[RankRow]:
    specs = list(specs)
    if len(specs) < 2:
        raise InvalidArgument("comparison needs at least two scenarios")
    payloads = {s.payload_bytes for s in specs}
    if len(payloads) != 1:
        raise InvalidArgument(f"scenarios disagree on payload size: {sorted(payloads)} bytes")
    results = []
    for spec in specs:
        _, stats = run_experiment(spec, jobs=jobs)
        results.append((spec, stats))
    return rank_results(results)


def format_ranking(rows: list[RankRow]) -> str:
    lines = [f"{'rank':>4}  {'strategy':<15} {'config':<14} {'t_total_s':>12} {'e_total_j':>12} {'delivery':>9}"]
    for r in rows:
        lines.append(
            f"{r.rank:>4}  {r.strategy:<15} {r.config:<14} {r.mean_t_total:>12.4f} "
            f"{r.mean_e_total:>12.4f} {r.mean_delivery:>9.4f}"
        )
    return "\n".join(lines) + "\n"

