"""Command line harness: ``mpag <experiment> [--config FILE] [--seed N] [--out DIR]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical
non-convergence (only when the config sets ``fail_on_nonconvergence``).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
import tempfile
from pathlib import Path

from . import __version__
from .experiments import EXPERIMENTS, ConfigError
from .io import write_grid, write_table

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3

# per-command flags mapped onto config fields
OVERRIDES = {
    "manip-simplex": {"samples": ("num_samples", int)},
    "distortion": {"samples": ("profiles_per_M", int), "M_max": ("M_max", int)},
    "bandit-regret": {"beta": ("beta", float), "rounds": ("total_rounds", int)},
    "attack": {"lambdas": ("lambdas", lambda s: [float(x) for x in s.split(",")]),
               "alphas": ("alphas", lambda s: [float(x) for x in s.split(",")])},
    "irl-recover": {"demos": ("demos_path", str)},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpag", description="Multi-principal assistance game experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON file of config fields")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path, default=Path("results") / name)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true")
        for flag, (_, conv) in OVERRIDES.get(name, {}).items():
            p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=str, default=None)
    return parser


def _load_config(args) -> dict:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError("config", f"cannot read {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
    for flag, (name, conv) in OVERRIDES.get(args.experiment, {}).items():
        raw = getattr(args, flag)
        if raw is not None:
            try:
                data[name] = conv(raw)
            except ValueError:
                raise ConfigError(name, f"cannot parse {raw!r}") from None
    return data


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_outputs(out: Path, experiment: str, cfg, seed: int, result) -> None:
    """Write into a sibling temp dir, then swap it into place."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        for name, (header, rows) in result.tables.items():
            write_table(tmp / name, header, rows)
        for name, grid in result.grids.items():
            write_grid(tmp / name, grid)
        config = cfg.to_dict()
        blob = json.dumps(config, sort_keys=True).encode()
        manifest = {
            "experiment": experiment,
            "version": __version__,
            "seed": seed,
            "config": config,
            "config_sha256": hashlib.sha256(blob).hexdigest(),
            "converged": bool(result.converged),
            "summary": result.summary,
            "files": {p.name: _sha256(p) for p in sorted(tmp.iterdir())},
        }
        (tmp / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        if out.exists():
            shutil.rmtree(out)
        tmp.rename(out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def run(experiment: str, config: dict | None = None, seed: int = 0, out: Path | None = None, threads: int = 1):
    """Validate, run and (if ``out`` is given) write one experiment; returns (exit code, result)."""
    cls, runner = EXPERIMENTS[experiment]
    if threads < 1:
        raise ConfigError("threads", "must be positive")
    if seed < 0:
        raise ConfigError("seed", "must be nonnegative")
    cfg = cls.from_dict(config)
    result = runner(cfg, seed, threads)
    if out is not None:
        write_outputs(out, experiment, cfg, seed, result)
    strict = getattr(cfg, "fail_on_nonconvergence", False)
    return (EXIT_NONCONVERGED if strict and not result.converged else EXIT_OK), result


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = _load_config(args)
        code, result = run(args.experiment, config, args.seed, args.out, args.threads)
    except ConfigError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(result.summary, sort_keys=True, indent=2))
    if code == EXIT_NONCONVERGED:
        print("numerical solver did not converge", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
