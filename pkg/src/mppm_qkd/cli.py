"""Command-line driver: rate curves, error-tolerance sweeps, Monte Carlo runs
and the sifting table, all emitted as CSV."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import montecarlo, rates
from .channel import overall_transmittance
from .model import DEFAULT_TRAIN_LENGTH, MatchClass, ParameterError, default_params, parse_config
from .sifting import sift_table

RATE_COLUMNS = (
    "distance_km", "L", "eta", "mu_opt", "v_th_opt",
    "Q_mu", "E_mu", "e_src", "e_p", "R", "linear_bound",
)
TOLERANCE_COLUMNS = ("distance_km", "L", "qber", "mu_opt", "v_th_opt", "e_p", "R")
SIMULATE_COLUMNS = (
    "L", "distance_km", "eta", "seed",
    "trains", "success_detections", "matched", "sift_errors",
    "empirical_gain", "empirical_qber", "match_fraction",
    "analytic_qber", "qber_3sigma", "qber_within_3sigma",
    "expected_match_fraction", "match_fraction_5sigma",
)
SIFT_COLUMNS = ("match", "kA_m", "kA_n", "kB_m", "kB_n", "ksum", "detector_class", "s_A", "s_B")


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(rows: Iterable[dict], columns: Sequence[str], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])


def to_csv(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    write_csv(rows, columns, buf)
    return buf.getvalue()


def parse_range(text: str) -> np.ndarray:
    """Inclusive ``A:B:STEP`` range."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ParameterError(f"range must look like A:B:STEP, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ParameterError(f"range needs STEP > 0 and B >= A, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # rounding strips float noise such as 0.17500000000000002 from the grid
    return np.round(start + step * np.arange(count), 12)


def params_for(overrides: dict, L: int):
    """Default parameters for train length ``L`` with config/flag overrides applied."""
    return default_params(train_length=L, **{k: v for k, v in overrides.items() if k != "train_length"})


def _grids(mu: Optional[float], v_th: Optional[int]):
    mu_grid = None if mu is None else [mu]
    v_grid = None if v_th is None else [v_th]
    return mu_grid, v_grid


def rate_curve(overrides: dict, distances, lengths, mu=None, v_th=None) -> list[dict]:
    mu_grid, v_grid = _grids(mu, v_th)
    rows = []
    for L in sorted(lengths):
        for d in sorted(distances):
            params = params_for(overrides, L).with_(distance_km=float(d))
            mu_opt, v_opt, pt = rates.optimize(params, mu_grid, v_grid)
            rows.append(
                {
                    "distance_km": float(d), "L": L, "eta": pt.eta,
                    "mu_opt": mu_opt, "v_th_opt": v_opt,
                    "Q_mu": pt.q_mu, "E_mu": pt.e_mu, "e_src": pt.e_src, "e_p": pt.e_p,
                    "R": pt.rate, "linear_bound": pt.linear_bound,
                }
            )
    return rows


def tolerance_curve(overrides: dict, distance: float, lengths, qbers, mu=None, v_th=None):
    """R as a function of an imposed QBER; returns (rows, {L: threshold}).

    mu and v_th are re-optimised at every QBER value. The threshold is the
    largest swept QBER with a strictly positive rate (None if there is none).
    """
    qbers = np.asarray(sorted(qbers), dtype=float)
    if qbers.size and (qbers[0] < 0.0 or qbers[-1] >= 0.5):
        raise ParameterError("qber values must lie in [0, 0.5)")
    mu_grid, v_grid = _grids(mu, v_th)
    rows, thresholds = [], {}
    for L in sorted(lengths):
        params = params_for(overrides, L).with_(distance_km=float(distance))
        thresholds[L] = None
        for e in qbers:
            mu_opt, v_opt, pt = rates.optimize(params, mu_grid, v_grid, qber=float(e))
            rows.append(
                {
                    "distance_km": float(distance), "L": L, "qber": float(e),
                    "mu_opt": mu_opt, "v_th_opt": v_opt, "e_p": pt.e_p, "R": pt.rate,
                }
            )
            if pt.rate > 0.0:
                thresholds[L] = float(e)
    return rows, thresholds


def simulate(overrides: dict, lengths, trials: int, seed: int, workers: int = 1) -> list[dict]:
    rows = []
    for L in sorted(lengths):
        params = params_for(overrides, L)
        stats = montecarlo.run_batch(params, trials, seed, workers=workers)
        e1 = rates.error_n(1, params)
        sigma = montecarlo.qber_standard_error(e1, stats.matched)
        p_match = montecarlo.match_fraction_expected(params.phase_slices)
        n_succ = stats.success_detections
        match_sigma = math.sqrt(p_match * (1 - p_match) / n_succ) if n_succ else math.inf
        row = {
            "L": L, "distance_km": params.distance_km,
            "eta": overall_transmittance(params), "seed": seed,
            **stats.as_row(),
            "analytic_qber": e1, "qber_3sigma": 3 * sigma,
            "qber_within_3sigma": abs(stats.empirical_qber - e1) <= 3 * sigma,
            "expected_match_fraction": p_match,
            "match_fraction_5sigma": 5 * match_sigma,
        }
        rows.append(row)
    return rows


def sift_table_rows() -> list[dict]:
    return sift_table(MatchClass.ZERO) + sift_table(MatchClass.PI)


def _overrides(args) -> dict:
    values = {}
    if args.config:
        values.update(parse_config(Path(args.config).read_text(encoding="utf-8")))
    if getattr(args, "distance_km", None) is not None:
        values["distance_km"] = args.distance_km
    return values


def _lengths(args, overrides: dict) -> list[int]:
    if args.train_length:
        return sorted(set(args.train_length))
    return [int(overrides.get("train_length", DEFAULT_TRAIN_LENGTH))]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mppm-qkd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, distance=True):
        p.add_argument("--config", metavar="PATH", help="key = value parameter file")
        p.add_argument("--train-length", "-L", type=int, action="append", metavar="L",
                       help="train length; repeat for several curves")
        if distance:
            p.add_argument("--distance-km", type=float)
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")

    def opt_flags(p):
        p.add_argument("--mu", type=float, help="fix mu instead of optimizing it")
        p.add_argument("--optimize", action="store_true", default=True,
                       help="optimize mu and v_th over a grid (default)")
        p.add_argument("--v-th", type=int, help="fix v_th instead of optimizing it")

    p = sub.add_parser("rate-curve", help="key rate versus distance")
    common(p)
    p.add_argument("--distance-range", default="0:500:10", metavar="A:B:STEP")
    opt_flags(p)

    p = sub.add_parser("tolerance-curve", help="key rate versus imposed QBER")
    common(p)
    p.add_argument("--qber-range", default="0:0.49:0.001", metavar="A:B:STEP")
    opt_flags(p)

    p = sub.add_parser("simulate", help="Monte Carlo protocol run")
    common(p)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("sift-table", help="key-derivation table for both match classes")
    p.add_argument("--out", metavar="PATH")
    return parser


def run(args) -> tuple[str, list[str]]:
    """Execute a parsed command; returns (csv text, diagnostic lines)."""
    notes = []
    if args.command == "sift-table":
        return to_csv(sift_table_rows(), SIFT_COLUMNS), notes

    overrides = _overrides(args)
    lengths = _lengths(args, overrides)
    if args.command == "rate-curve":
        if args.distance_km is not None:
            distances = [args.distance_km]
        else:
            distances = parse_range(args.distance_range)
        rows = rate_curve(overrides, distances, lengths, args.mu, args.v_th)
        return to_csv(rows, RATE_COLUMNS), notes
    if args.command == "tolerance-curve":
        distance = overrides.get("distance_km", 50.0)
        rows, thresholds = tolerance_curve(
            overrides, distance, lengths, parse_range(args.qber_range), args.mu, args.v_th
        )
        for L, e in thresholds.items():
            notes.append(f"# zero-rate QBER threshold: distance_km={distance} L={L} qber={e}")
        return to_csv(rows, TOLERANCE_COLUMNS), notes
    if args.command == "simulate":
        rows = simulate(overrides, lengths, args.trials, args.seed, args.workers)
        return to_csv(rows, SIMULATE_COLUMNS), notes
    raise AssertionError(args.command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, notes = run(args)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
    except (ParameterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for line in notes:
        print(line, file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
