"""
Command line runner.

    nearinc run CONFIG [--out DIR] [--seed N] [--refine K]
    nearinc --list-scenarios

CONFIG is an INI file.  Unknown sections or keys are errors.  Every output
file is long-format CSV with columns ``t,id,quantity,value``; its first row
records the seed.  Exit status: 0 on success, 1 on a configuration error,
2 on a solver fault.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import os
import re
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from nearinc.errors import SolverFault
from nearinc.experiments import SCENARIOS, ExperimentConfig, RunResult

log = logging.getLogger("nearinc")

EXIT_OK, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2

FLUX_PRESETS = ("linear", "burgers-like", "rotational", "polynomial")
DATA_PRESETS = ("constant", "step", "bump", "random")
PERTURBATIONS = ("mollify", "boundary", "zero")


class ConfigError(Exception):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message, self.line, self.column = message, line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


def _int_list(s: str) -> list[int]:
    return [int(v) for v in re.split(r"[,\s]+", s.strip()) if v]


def _float_list(s: str) -> list[float]:
    return [float(v) for v in re.split(r"[,\s]+", s.strip()) if v]


def _coefficients(s: str) -> list[list[float]]:
    return [_float_list(part) for part in s.split(";") if part.strip()]


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not (np.isfinite(v) and v > 0):
        raise ValueError("must be a positive number")
    return v


def _choice(options) -> Callable[[str], str]:
    def parse(s: str) -> str:
        s = s.strip()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


def _scenario(s: str) -> str:
    s = s.strip()
    if s not in SCENARIOS:
        raise ValueError("unknown scenario (see --list-scenarios)")
    return s


# section -> key -> (config attribute, parser)
SCHEMA: dict[str, dict[str, tuple[str, Callable]]] = {
    "run": {
        "scenario": ("scenario", _scenario),
        "seed": ("seed", int),
        "cfl": ("cfl", _positive_float),
        "t": ("T", _positive_float),
        "output": ("output", str.strip),
    },
    "grid": {
        "n": ("n", _positive_int),
        "refine": ("refine", _int_list),
    },
    "flux": {
        "preset": ("flux", _choice(FLUX_PRESETS)),
        "coefficients": ("coefficients", _coefficients),
        "velocity": ("velocity", _float_list),
    },
    "data": {
        "preset": ("data", _choice(DATA_PRESETS)),
        "value": ("value", float),
    },
    "study": {
        "m": ("m", _int_list),
        "rungs": ("rungs", _positive_int),
        "perturbation": ("perturbation", _choice(PERTURBATIONS)),
    },
}


def _locate(text: str, section: str, key: str | None = None) -> tuple[int | None, int | None]:
    """1-based line and column of a section header or of a key inside it."""
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"(\s*)\[([^\]]*)\]", line)
        if m:
            current = m.group(2).strip()
            if key is None and current == section:
                return i, len(m.group(1)) + 1
            continue
        if key is not None and current == section:
            m = re.match(r"(\s*)([^=:#;\s][^=:]*?)\s*[=:]", line)
            if m and m.group(2).strip().lower() == key:
                return i, len(m.group(1)) + 1
    return None, None


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", exc.lineno, 1) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, 1) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r}", lineno, 1) from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            line, col = _locate(text, section)
            raise ConfigError(f"unknown section [{section}]", line, col)
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                line, col = _locate(text, section, key)
                raise ConfigError(f"unknown key {key!r} in [{section}]", line, col)
            attr, conv = SCHEMA[section][key]
            try:
                values[attr] = conv(raw)
            except ValueError as exc:
                line, col = _locate(text, section, key)
                raise ConfigError(f"bad value for {key!r} in [{section}]: {exc}", line, col) from None
    if "scenario" not in values:
        raise ConfigError("missing required key 'scenario' in [run]")
    return ExperimentConfig(**values)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, rows, seed: int) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "id", "quantity", "value"])
    w.writerow(["", "run", "seed", seed])
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


# every run reports these three; transport-only runs measure mass closure
# and the maximum principle on the transported quantity
TRIPLET = (("mass_residual", "continuity_residual"),
           ("max_principle_margin", "transport_max_principle_margin"),
           ("entropy_residual", None))


def diagnostic_rows(diagnostics: dict) -> list[tuple]:
    d = dict(diagnostics)
    head = {}
    for key, fallback in TRIPLET:
        head[key] = d.pop(key) if key in d else d.get(fallback, float("nan"))
    return [("", "diagnostics", k, v) for k, v in {**head, **d}.items()]


def write_result(result: RunResult, cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    diag = diagnostic_rows(result.diagnostics)
    files = {
        "snapshots.csv": result.snapshots,
        "traces.csv": result.traces,
        "diagnostics.csv": diag,
        "summary.csv": result.summary,
    }
    paths = []
    for name, rows in files.items():
        p = out_dir / name
        _write_csv(p, rows, cfg.seed)
        paths.append(p)
    return paths


@dataclass
class Outcome:
    status: int
    result: RunResult | None = None
    files: list[Path] | None = None
    message: str = ""


def run(config_path: str | Path, out: str | Path | None = None, seed: int | None = None,
        refine: int | None = None) -> Outcome:
    """Parse, run and write one experiment."""
    path = Path(config_path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        return Outcome(EXIT_CONFIG, message=f"{path}: cannot read config: {exc}")
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        return Outcome(EXIT_CONFIG, message=f"{path}: {exc}")
    if seed is not None:
        cfg.seed = seed
    if refine is not None:
        if refine < 0:
            return Outcome(EXIT_CONFIG, message="--refine must be >= 0")
        cfg.refine_power = refine
    try:
        with np.errstate(over="raise", invalid="ignore"):
            result = SCENARIOS[cfg.scenario].run(cfg)
    except (SolverFault, FloatingPointError, ArithmeticError) as exc:
        return Outcome(EXIT_FAULT, message=f"solver fault in {cfg.scenario}: {exc}")
    except ValueError as exc:
        return Outcome(EXIT_FAULT, message=f"rejected input in {cfg.scenario}: {exc}")
    out_dir = Path(out if out is not None else cfg.output) / cfg.scenario
    files = write_result(result, cfg, out_dir)
    return Outcome(EXIT_OK, result, files, f"wrote {len(files)} files to {out_dir}")


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="nearinc", description=__doc__.strip().splitlines()[0])
    ap.add_argument("--list-scenarios", action="store_true", help="print the scenario registry and exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command")
    rp = sub.add_parser("run", help="run one configured experiment")
    rp.add_argument("config")
    rp.add_argument("--out", default=None, help="output directory (overrides [run] output)")
    rp.add_argument("--seed", type=int, default=None)
    rp.add_argument("--refine", type=int, default=None, help="double every grid size K times")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.list_scenarios:
        width = max(len(k) for k in SCENARIOS)
        for name, sc in SCENARIOS.items():
            print(f"{name:<{width}}  {sc.description}")
        return EXIT_OK
    if args.command != "run":
        ap.print_usage(sys.stderr)
        return EXIT_CONFIG
    outcome = run(args.config, args.out, args.seed, args.refine)
    if outcome.status == EXIT_OK:
        log.info(outcome.message)
    else:
        print(outcome.message, file=sys.stderr)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
