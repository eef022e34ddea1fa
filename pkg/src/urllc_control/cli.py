"""Command-line front end: ``analytic``, ``region``, ``simulate`` and ``compare``.

Command-line flags override the values in the scenario file. Every command
writes CSV with a fixed column set, numbers formatted with 15 significant
digits, so equal inputs give byte-identical output.

Exit status: 0 on success, 1 for configuration errors, 2 for runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .analytics import enumerate_dl, enumerate_ul, p_dl_coherent, p_dl_verbatim, p_ul, region_curve
from .config import ConfigError, ScenarioFile, check_scenario, load_scenario_file
from .error_model import TrialRng
from .slot_grid import Mode, get_format
from .sim.montecarlo import McStats, compare_modes, run_monte_carlo
from .sim.protocol import run_trial
from .sim.trace import format_trace

DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 0

ANALYTIC_COLUMNS = [
    "profile", "p_ul", "enum_ul_success", "enum_ul_total",
    "p_dl_coherent", "enum_dl_success", "enum_dl_total",
    "p_dl_verbatim", "verbatim_exceeds_one", "verbatim_minus_coherent",
]
REGION_COLUMNS = ["x", "y_boundary", "feasible"]
REGION_COMBINED_COLUMNS = ["direction", "p1", "formula"] + REGION_COLUMNS
STATS_COLUMNS = [
    "direction", "mode", "slot_format", "mu", "trials", "seed",
    "successes", "reliability_hat", "wilson_lo", "wilson_hi",
    "latency_p50_ms", "latency_p95_ms", "latency_p99_ms", "latency_max_ms", "latency_mean_ms",
    "affected_trials", "affected_successes", "affected_latency_p50_ms", "affected_latency_mean_ms",
    "mean_re_used", "mean_re_wasted", "attempt_histogram",
]
COMPARE_COLUMNS = STATS_COLUMNS + ["dominance_violations", "attempt_violations"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".15g")
    return str(value)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")


def cmd_analytic(sf: ScenarioFile, args) -> None:
    rows = []
    for name, c, d in sf.profiles():
        eu, ed = enumerate_ul(c, d), enumerate_dl(c, d)
        coherent = p_dl_coherent(c, d)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            verbatim, exceeds = p_dl_verbatim(c, d)
        rows.append([name, p_ul(c, d), eu.success, eu.total, coherent, ed.success, ed.total,
                     verbatim, exceeds, verbatim - coherent])
    _emit(_csv_text(ANALYTIC_COLUMNS, rows), args.out)


def _curve_name(direction: str, p1: float, formula: Optional[str]) -> str:
    stem = f"{direction}_p1-{fmt(p1)}"
    return f"{stem}_{formula}.csv" if formula else f"{stem}.csv"


def cmd_region(sf: ScenarioFile, args) -> None:
    sweep = sf.sweep
    if sweep is None:
        raise ConfigError("[sweep] section required by the region command")
    curves = []
    for direction in sweep.directions:
        formulas = sweep.formulas if direction == "downlink" else (None,)
        for p1 in sweep.p1_values:
            fixed = sf.blers.replace(p1=p1)
            if fixed.p12 > p1:
                raise ConfigError(f"[sweep] p1_values: p12={fixed.p12!r} exceeds p1={p1!r}")
            for formula in formulas:
                points = region_curve(direction, fixed, sweep.x_grid, sweep.target,
                                      tie=sweep.tying == "tied", formula=formula or "coherent")
                curves.append((direction, p1, formula, points))
    if args.out is None:
        rows = [[d, p1, f or "", pt.x, pt.y_boundary, pt.feasible]
                for d, p1, f, points in curves for pt in points]
        _emit(_csv_text(REGION_COMBINED_COLUMNS, rows), None)
        return
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for direction, p1, formula, points in curves:
        rows = [[pt.x, pt.y_boundary, pt.feasible] for pt in points]
        _emit(_csv_text(REGION_COLUMNS, rows), str(outdir / _curve_name(direction, p1, formula)))


def _stats_row(cfg, stats: McStats, seed: int) -> list:
    hist = ";".join(f"{k}:{v}" for k, v in stats.attempt_histogram.items())
    return [
        cfg.direction.value, cfg.mode.value, cfg.slot_format, cfg.mu, stats.trials, seed,
        stats.successes, stats.reliability_hat, stats.wilson_95[0], stats.wilson_95[1],
        stats.latency_p50_ms, stats.latency_p95_ms, stats.latency_p99_ms,
        stats.latency_max_ms, stats.latency_mean_ms,
        stats.affected_trials, stats.affected_successes,
        stats.affected_latency_p50_ms, stats.affected_latency_mean_ms,
        stats.mean_re_used, stats.mean_re_wasted, hist,
    ]


def _run_settings(sf: ScenarioFile, args, allow_mode: bool):
    cfg = sf.scenario
    if allow_mode and args.mode is not None:
        cfg = replace(cfg, mode=Mode(args.mode))
    if args.format is not None:
        try:
            cfg = replace(cfg, slot_format=get_format(args.format).name)
        except KeyError as exc:
            raise ConfigError(f"--format: {exc.args[0]}") from None
    check_scenario(cfg)
    trials = args.trials if args.trials is not None else (sf.trials or DEFAULT_TRIALS)
    seed = args.seed if args.seed is not None else (sf.seed if sf.seed is not None else DEFAULT_SEED)
    if trials < 1:
        raise ConfigError("--trials: must be >= 1")
    return cfg, trials, seed


def cmd_simulate(sf: ScenarioFile, args) -> None:
    cfg, trials, seed = _run_settings(sf, args, allow_mode=True)
    c, d = sf.errors, sf.blers
    stats = run_monte_carlo(cfg, c, d, trials, seed, workers=args.workers)
    _emit(_csv_text(STATS_COLUMNS, [_stats_row(cfg, stats, seed)]), args.out)
    for i in range(min(args.trace or 0, trials)):
        out = run_trial(cfg, c, d, TrialRng(seed, i))
        sys.stderr.write(f"# trial {i} ({cfg.direction.value}, {cfg.mode.value})\n")
        sys.stderr.write(format_trace(out, cfg.numerology) + "\n\n")


def cmd_compare(sf: ScenarioFile, args) -> None:
    cfg, trials, seed = _run_settings(sf, args, allow_mode=False)
    cmp = compare_modes(cfg, sf.errors, sf.blers, trials, seed, workers=args.workers)
    conv = _stats_row(cfg.with_mode(Mode.CONVENTIONAL), cmp.conventional, seed) + ["", ""]
    flex = _stats_row(cfg.with_mode(Mode.FLEXIBLE), cmp.flexible, seed) + ["", ""]
    delta = dict.fromkeys(COMPARE_COLUMNS)
    delta.update(direction=cfg.direction.value, mode="delta", slot_format=cfg.slot_format,
                 mu=cfg.mu, trials=trials, seed=seed,
                 successes=cmp.flexible.successes - cmp.conventional.successes,
                 affected_trials=cmp.flexible.affected_trials - cmp.conventional.affected_trials,
                 affected_successes=cmp.flexible.affected_successes - cmp.conventional.affected_successes,
                 dominance_violations=cmp.dominance_violations,
                 attempt_violations=cmp.attempt_violations)
    delta.update(cmp.deltas)
    lo_c, hi_c = cmp.conventional.wilson_95
    lo_f, hi_f = cmp.flexible.wilson_95
    delta.update(wilson_lo=lo_f - lo_c, wilson_hi=hi_f - hi_c)
    _emit(_csv_text(COMPARE_COLUMNS, [conv, flex, [delta[k] for k in COMPARE_COLUMNS]]), args.out)


class _Parser(argparse.ArgumentParser):
    # Bad flags are configuration errors (exit 1), not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="urllc-control",
        description="Control-channel reliability analysis and flexible-slot HARQ simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, runs: bool):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="scenario file")
        p.add_argument("--out", help="output file (region: output directory); default stdout")
        if runs:
            p.add_argument("--trials", type=int, help="number of trials (overrides [scenario] trials)")
            p.add_argument("--seed", type=int, help="master seed (overrides [scenario] seed)")
            p.add_argument("--format", help="slot format name or 14-letter D/U/F pattern")
            p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
        return p

    add("analytic", "closed forms and enumeration totals per profile", runs=False)
    add("region", "reliability-region boundary curves", runs=False)
    sim = add("simulate", "Monte Carlo statistics for one scenario", runs=True)
    sim.add_argument("--mode", choices=[m.value for m in Mode], help="override [scenario] mode")
    sim.add_argument("--trace", type=int, metavar="K", default=0,
                     help="also print the event logs of the first K trials to stderr")
    add("compare", "conventional vs flexible on common random numbers", runs=True)
    return parser


_COMMANDS = {
    "analytic": cmd_analytic,
    "region": cmd_region,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sf = load_scenario_file(args.config)
        _COMMANDS[args.command](sf, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
