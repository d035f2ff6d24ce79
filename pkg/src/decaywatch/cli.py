"""Command-line front end.

    decaywatch analytic  --atoms 2 --k 1 --grid 0,0.5,1 --out run/
    decaywatch simulate  --rates 2,1 --time 1 --trials 100000 --seed 42 --out run/
    decaywatch verify    --atoms 2 --k 1 --time 1 --out run/
    decaywatch simulate  --manifest run/manifest.json --out replay/

Exit codes: 0 success, 1 statistical failure, 2 usage error, 3 insufficient data.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .born import born_distribution, currents
from .chain import ChainSpec, make_n_atom_chain
from .ensemble import run_ensemble, verify
from .stats import InsufficientDataError

EXIT_OK = 0
EXIT_STAT_FAIL = 1
EXIT_USAGE = 2
EXIT_INSUFFICIENT = 3

FORMATS = ("csv", "json", "both")


class UsageError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class RunConfig:
    chain_source: dict
    query_time: float = 1.0
    trials: int = 100_000
    master_seed: int = 42
    output_dir: str = "."
    format: str = "both"

    def __post_init__(self):
        src = self.chain_source
        has_atoms = "n_atoms" in src or "k" in src
        has_rates = "rates" in src
        if has_atoms == has_rates:
            raise UsageError("give either --atoms/--k or --rates, not both")
        if not self.query_time >= 0:
            raise UsageError(f"--time must be >= 0, got {self.query_time}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise UsageError(f"--trials must be a positive integer, got {self.trials}")
        if self.format not in FORMATS:
            raise UsageError(f"--format must be one of {FORMATS}")

    def chain(self) -> ChainSpec:
        src = self.chain_source
        try:
            if "rates" in src:
                return ChainSpec(rates=tuple(src["rates"]))
            return make_n_atom_chain(float(src.get("k", 1.0)), int(src.get("n_atoms", 2)))
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "chain_source": dict(self.chain_source),
            "query_time": self.query_time,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "format": self.format,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        return cls(
            chain_source=dict(d["chain_source"]),
            query_time=float(d.get("query_time", 1.0)),
            trials=int(d.get("trials", 100_000)),
            master_seed=int(d.get("master_seed", 42)),
            output_dir=str(d.get("output_dir", ".")),
            format=str(d.get("format", "both")),
        )


def _float_list(raw: str) -> list[float]:
    try:
        return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {raw!r}")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--atoms", type=int, default=None, help="N-atom source size")
    common.add_argument("--k", type=float, default=None, help="per-atom decay constant")
    common.add_argument("--rates", type=_float_list, default=None,
                        help="explicit adjacent rates, e.g. 2,1")
    common.add_argument("--time", type=float, default=None, help="query time t")
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--out", default=None, metavar="DIR")
    common.add_argument("--format", choices=FORMATS, default=None)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: all cores); never changes results")
    common.add_argument("--config", default=None, metavar="JSON",
                        help="RunConfig file; explicit flags override it")
    common.add_argument("--manifest", default=None, metavar="JSON",
                        help="replay a previous run; only --out and --threads still apply")

    parser = argparse.ArgumentParser(
        prog="decaywatch",
        description="Observed decay chains: Born dynamics, sequential reduction ensembles, verification.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    analytic = sub.add_parser("analytic", parents=[common],
                              help="tabulate P_i(t) and currents J_i(t)")
    analytic.add_argument("--grid", type=_float_list, default=None,
                          help="comma-separated time points")
    analytic.add_argument("--points", type=int, default=None,
                          help="evenly spaced points on [0, --time]")
    sub.add_parser("simulate", parents=[common], help="run an observer ensemble")
    sub.add_parser("verify", parents=[common],
                   help="compare the ensemble with the oracle and the Born law")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        base = manifest["config"]
        if args.out is not None:
            base = {**base, "output_dir": args.out}
        return RunConfig.from_dict(base)

    base: dict = {}
    if args.config:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
    src = dict(base.get("chain_source", {}))
    if args.rates is not None:
        src = {"rates": args.rates}
    elif args.atoms is not None or args.k is not None:
        if "rates" in src:
            src = {}
        if args.atoms is not None:
            src["n_atoms"] = args.atoms
        if args.k is not None:
            src["k"] = args.k
    if not src:
        src = {"n_atoms": 2, "k": 1.0}
    if "rates" not in src:
        src.setdefault("n_atoms", 2)
        src.setdefault("k", 1.0)
    if args.rates is not None and (args.atoms is not None or args.k is not None):
        raise UsageError("give either --atoms/--k or --rates, not both")

    overrides = {
        "query_time": args.time,
        "trials": args.trials,
        "master_seed": args.seed,
        "output_dir": args.out,
        "format": args.format,
    }
    merged = {**base, "chain_source": src}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(merged)


def _output_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory not writable: {out}")
    return out


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(out: Path, command: str, config: RunConfig, extra: dict | None = None) -> None:
    payload = {
        "schema_version": 1,
        "command": command,
        "tool_version": __version__,
        "config": config.to_dict(),
        "created_at": datetime.now(timezone.utc).isoformat(),
        "seed_policy": "trial i draws from the counter stream keyed by mix(master_seed, i)",
    }
    if extra:
        payload.update(extra)
    _write_json(out / "manifest.json", payload)


def cmd_analytic(config: RunConfig, time_grid: list[float]) -> list[Path]:
    grid = [float(t) for t in time_grid]
    if any(t < 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("time grid must be nonnegative and strictly increasing")
    chain = config.chain()
    out = _output_dir(config)
    n = chain.num_components
    header = ["t"] + [f"P_{i}" for i in range(n)] + [f"J_{i}" for i in range(n)]
    rows, records = [], []
    for t in grid:
        dist = born_distribution(chain, t)
        cur = currents(chain, dist)
        rows.append([_fmt(t)] + [_fmt(p) for p in dist.probs] + [_fmt(j) for j in cur.net])
        records.append({"t": t, "probs": list(dist.probs), "net": list(cur.net),
                        "flows": list(cur.flows)})
    written = []
    path = out / "analytic.csv"
    _write_csv(path, header, rows)
    written.append(path)
    if config.format in ("json", "both"):
        path = out / "analytic.json"
        _write_json(path, {"chain": chain.to_dict(), "points": records})
        written.append(path)
    _write_manifest(out, "analytic", config, {"time_grid": grid})
    return written


def cmd_simulate(config: RunConfig, threads: int | None = None) -> list[Path]:
    chain = config.chain()
    out = _output_dir(config)
    result = run_ensemble(chain, config.query_time, config.trials, config.master_seed, threads)
    expected = born_distribution(chain, config.query_time).probs
    written = []
    if config.format in ("csv", "both"):
        path = out / "histogram.csv"
        rows = [
            [str(i), str(c), _fmt(c / result.trials), _fmt(e)]
            for i, (c, e) in enumerate(zip(result.count_histogram, expected))
        ]
        _write_csv(path, ["count", "occurrences", "frequency", "expected"], rows)
        written.append(path)
    if config.format in ("json", "both"):
        path = out / "histogram.json"
        payload = result.to_dict(include_samples=False)
        payload["frequency"] = result.observed_freq
        payload["expected"] = list(expected)
        _write_json(path, payload)
        written.append(path)
        path = out / "ensemble.json"
        _write_json(path, result.to_dict())
        written.append(path)
    _write_manifest(out, "simulate", config)
    return written


def cmd_verify(config: RunConfig, threads: int | None = None) -> int:
    chain = config.chain()
    out = _output_dir(config)
    _write_manifest(out, "verify", config)
    try:
        report = verify(chain, config.query_time, config.trials, config.master_seed, threads)
    except InsufficientDataError as exc:
        _write_json(out / "report.json", {"passed": False, "error": f"insufficient data: {exc}"})
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    _write_json(out / "report.json", report.to_dict())
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name} = {check.value:.6g} (threshold {check.threshold:.6g})")
    if not report.passed:
        names = ", ".join(c.name for c in report.failures)
        print(f"verification failed: {names}", file=sys.stderr)
        return EXIT_STAT_FAIL
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        if args.command == "analytic":
            if args.grid is not None:
                grid = args.grid
            elif args.points is not None:
                if args.points < 1:
                    raise UsageError("--points must be >= 1")
                grid = np.linspace(0.0, config.query_time, args.points).tolist()
            else:
                grid = [config.query_time]
            for path in cmd_analytic(config, grid):
                print(path)
            return EXIT_OK
        if args.command == "simulate":
            for path in cmd_simulate(config, args.threads):
                print(path)
            return EXIT_OK
        return cmd_verify(config, args.threads)
    except ValueError as exc:
        parser.error(str(exc))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        parser.error(f"{type(exc).__name__}: {exc}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
