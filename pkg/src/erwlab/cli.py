"""``erwlab`` command line: simulate, moments, limits and verify.

Every subcommand accepts ``--config FILE`` (a JSON object with the keys of
:class:`ExperimentConfig`) and flags of the same names, which override the
file. Output goes to ``--out`` or stdout as CSV with a header row or as a
JSON object ``{config, results, version, duration_ms}``. Each emitted number
carries a provenance tag: "analytic" or "empirical".

Exit codes: 0 success, 1 hard-gate failure, 2 usage or configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import REPORT_COLUMNS, ConfigError, ExperimentConfig, ResultBundle, render_csv, render_json
from .errors import DomainError
from .harness import LIL_START, scale_factor
from .moments import closed_form_moment, limit_moments, moment_table
from .rng import stream_key
from .special import classify_regime, v_asymptote
from .verify import CATALOGUE, Context, gate_passed, run
from .walk import WalkParams, set_threads, simulate_ensemble

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

SIMULATE_COLUMNS = [
    "path", "substream_seed", "terminal", "scaled_terminal", "qsl_diffusive",
    "qsl_critical", "lil_diffusive", "lil_critical", "provenance",
]
MOMENT_COLUMNS = ["order", "recursion", "closed_form", "relative_difference", "provenance"]
LIMIT_COLUMNS = ["quantity", "value", "provenance"]


class UsageError(Exception):
    pass


def _tests_arg(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--p", type=float, help="memory parameter in [0, 1]")
    sub.add_argument("--q", type=float, help="first-step probability in [0, 1]")
    sub.add_argument("--n", type=int, help="horizon (default 1000)")
    sub.add_argument("--paths", type=int, help="number of paths (default 100)")
    sub.add_argument("--seed", type=int, help="base seed (default 20170329)")
    sub.add_argument("--tests", type=_tests_arg, help="comma-separated test names")
    sub.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    sub.add_argument("--out", help="output file (default stdout)")
    sub.add_argument("--threads", type=int, help="worker threads, 0 = all (default 0)")
    sub.add_argument("--scale", type=float, help="verify protocol size factor (default 1.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erwlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"erwlab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "simulate paths and write one row per path"),
        ("moments", "exact moments E[S_n^k] by recursion and closed form"),
        ("limits", "moments of the superdiffusive limit and regime constants"),
        ("verify", "run named checks from the verification catalogue"),
    ):
        sub = subs.add_parser(name, help=text, description=text)
        _add_config_flags(sub)
        if name == "moments":
            sub.add_argument("--orders", type=int, nargs="+", default=[1, 2, 3, 4],
                             help="moment orders among 1..4")
    subs.add_parser("list-tests", help="print the names of the verification catalogue")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            data[f.name] = value
    return ExperimentConfig.from_dict(data)


def _need(cfg: ExperimentConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError(f"missing required parameter(s): {', '.join(missing)}")


def _emit(cfg: ExperimentConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text)


def _render(cfg: ExperimentConfig, columns: list[str], rows: list[dict], duration_ms: float) -> str:
    if cfg.format == "json":
        return render_json(cfg, rows, duration_ms)
    return render_csv(columns, rows)


def simulate_rows(cfg: ExperimentConfig) -> list[dict]:
    _need(cfg, "p", "q")
    set_threads(cfg.threads)
    params = WalkParams(cfg.p, cfg.q, cfg.n, cfg.seed)
    res = simulate_ensemble(params, cfg.paths)
    n = cfg.n
    scale = scale_factor(n, cfg.p) if n >= 2 else None
    log_n = math.log(n) if n >= 2 else None
    loglog_n = math.log(log_n) if n >= 3 else None
    rows = []
    for j, i in enumerate(res.indices):
        term = int(res.terminal[j])
        rows.append({
            "path": int(i),
            "substream_seed": stream_key(cfg.seed, int(i)),
            "terminal": term,
            "scaled_terminal": term / scale if scale else None,
            "qsl_diffusive": float(res.qsl_diffusive_sum[j]) / log_n if log_n else None,
            "qsl_critical": (float(res.qsl_critical_sum[j]) / loglog_n
                             if n >= LIL_START else None),
            "lil_diffusive": float(res.lil_max_diffusive[j]) if n >= LIL_START else None,
            "lil_critical": float(res.lil_max_critical[j]) if n >= LIL_START else None,
            "provenance": "empirical",
        })
    return rows


def moment_rows(cfg: ExperimentConfig, orders: list[int]) -> list[dict]:
    _need(cfg, "p", "q")
    bad = [k for k in orders if k not in (1, 2, 3, 4)]
    if bad:
        raise UsageError(f"moment orders must lie in 1..4, got {bad}")
    row = moment_table(cfg.n, cfg.p, cfg.q)[-1]
    out = []
    for k in orders:
        rec = float(row[k - 1])
        try:
            cf = closed_form_moment(k, cfg.n, cfg.p, cfg.q)
        except DomainError:
            cf = None
        if cf is None:
            rel = None
        elif rec == 0.0:
            rel = abs(cf)
        else:
            rel = abs(cf - rec) / abs(rec)
        out.append({
            "order": k, "recursion": rec,
            "closed_form": "singular" if cf is None else cf,
            "relative_difference": rel, "provenance": "analytic",
        })
    return out


def limit_rows(cfg: ExperimentConfig) -> tuple[list[dict], str | None]:
    """Rows of the limits table and, for p <= 3/4, the reason L is refused."""
    _need(cfg, "p")
    regime = classify_regime(cfg.p)
    rows = [{"quantity": "regime", "value": regime.value, "provenance": "analytic"}]
    note = None
    try:
        va = v_asymptote(cfg.p)
        rows.append({"quantity": "v_asymptote_constant", "value": va.constant,
                     "provenance": "analytic"})
        rows.append({"quantity": "v_asymptote_scale", "value": va.scale,
                     "provenance": "analytic"})
    except DomainError as exc:
        rows.append({"quantity": "v_asymptote_constant", "value": None, "provenance": "analytic"})
        note = str(exc)
    if cfg.q is None:
        return rows, note or "q not given; L moments omitted"
    try:
        lm = limit_moments(cfg.p, cfg.q)
    except DomainError as exc:
        return rows, str(exc)
    for name in ("e1", "e2", "e3", "e4"):
        rows.append({"quantity": name, "value": getattr(lm, name), "provenance": "analytic"})
    for name in ("mu", "sigma2", "skewness", "kurtosis"):
        rows.append({"quantity": name, "value": getattr(lm, name), "provenance": "analytic"})
    return rows, note


def verify_bundle(cfg: ExperimentConfig) -> ResultBundle:
    if not cfg.tests:
        raise UsageError("no tests named; choose from: " + ", ".join(CATALOGUE))
    unknown = [t for t in cfg.tests if t not in CATALOGUE]
    if unknown:
        raise UsageError(f"unknown test(s): {', '.join(unknown)}")
    set_threads(cfg.threads)
    t0 = time.perf_counter()
    reports = run(cfg.tests, Context(cfg.seed, cfg.scale))
    return ResultBundle(cfg, reports, duration_ms=(time.perf_counter() - t0) * 1e3)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command == "list-tests":
        print("\n".join(CATALOGUE))
        return EXIT_OK
    try:
        cfg = resolve_config(args)
    except OSError as exc:
        print(f"erwlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"erwlab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    status = EXIT_OK
    t0 = time.perf_counter()
    try:
        if args.command == "simulate":
            rows = simulate_rows(cfg)
            text = _render(cfg, SIMULATE_COLUMNS, rows, (time.perf_counter() - t0) * 1e3)
        elif args.command == "moments":
            rows = moment_rows(cfg, args.orders)
            text = _render(cfg, MOMENT_COLUMNS, rows, (time.perf_counter() - t0) * 1e3)
        elif args.command == "limits":
            rows, note = limit_rows(cfg)
            if note:
                print(f"erwlab: {note}", file=sys.stderr)
            text = _render(cfg, LIMIT_COLUMNS, rows, (time.perf_counter() - t0) * 1e3)
        else:
            bundle = verify_bundle(cfg)
            text = bundle.to_json() if cfg.format == "json" else bundle.to_csv()
            for r in bundle.results:
                mark = "PASS" if r.passed else "FAIL"
                print(f"{mark} [{r.gate}] {r.name}: observed={r.observed!r} "
                      f"expected={r.expected!r} tol={r.tolerance!r}", file=sys.stderr)
            status = EXIT_OK if gate_passed(bundle.results) else EXIT_FAIL
    except UsageError as exc:
        print(f"erwlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ValueError) as exc:
        print(f"erwlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _emit(cfg, text)
    except OSError as exc:
        print(f"erwlab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


if __name__ == "__main__":
    sys.exit(main())
