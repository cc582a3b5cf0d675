"""Command-line front end.

``chaplygin run CONFIG`` integrates one configuration and writes the
solution CSV, a plain-text report and optionally an SVG plot.
``chaplygin sweep CONFIG OVERRIDES`` runs one element per line of the
overrides file and writes an index.

Configuration files are INI documents with the sections ``[model]``,
``[integration]``, ``[grid]`` and ``[output]``::

    [model]
    variant = III
    n = 1.0
    A = 50.0

    [integration]
    eta_start = 0.001
    eta_end = 5.0
    rtol = 1e-10

    [grid]
    r_min = 0.5
    r_max = 4.5
    spacing = 0.001

    [output]
    solution_csv = solution.csv
    report = report.txt
    svg = shapes.svg

Only ``variant``, ``n`` and ``A`` are required.  Integration keys default to
:class:`~chaplygin.integrator.IntegrationConfig`; a ``[grid]`` section turns
on the PDE residual check and needs ``r_min`` and ``r_max``.

Exit codes (``run``): 0 reached ``eta_end``; 2 configuration error; 3
critical point; 4 density floor; 5 step-size underflow; 6 step limit; 7 I/O
error.  ``sweep`` exits 0 once its index is written (per-element codes are in
the index), 2 or 7 otherwise.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, SetupError
from .integrator import (
    Classification,
    FixedEuler,
    IntegrationConfig,
    SolutionTable,
    TerminationKind,
    classify,
    integrate,
)
from .model import ChaplyginEos, VariantId, exponents_for
from .reduction import MomentumForm
from .svg import render_svg
from .verifier import GridSpec, ode_residuals, residual_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 7
EXIT_CODES = {
    TerminationKind.REACHED_END: EXIT_OK,
    TerminationKind.CRITICAL_POINT: 3,
    TerminationKind.DENSITY_FLOOR: 4,
    TerminationKind.STEP_UNDERFLOW: 5,
    TerminationKind.MAX_STEPS: 6,
}

CSV_HEADER = "eta,f,g,h,q,determinant"
DEFAULT_EULER_STEP = 1e-5


@dataclass(frozen=True)
class RunConfig:
    variant: VariantId
    n: float
    A: float
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    grid: GridSpec | None = None
    solution_csv: str = "solution.csv"
    report: str = "report.txt"
    svg: str | None = None

    @property
    def exponents(self):
        return exponents_for(self.variant, self.n)

    @property
    def eos(self):
        return ChaplyginEos(self.A, self.n)


class IOFailure(OSError):
    """An output path could not be prepared or written."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")


# ---------------------------------------------------------------- parsing

def _number(section, key, raw):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] expected a decimal number, got {raw!r}", key) from None
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] value {raw!r} is not finite", key)
    return value


def _positive(section, key, raw):
    value = _number(section, key, raw)
    if not value > 0:
        raise ConfigError(f"[{section}] must be positive, got {raw!r}", key)
    return value


def _count(section, key, raw):
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] expected an integer, got {raw!r}", key) from None
    if value < 1:
        raise ConfigError(f"[{section}] must be a positive integer, got {raw!r}", key)
    return value


def _text(section, key, raw):
    if not raw.strip():
        raise ConfigError(f"[{section}] must not be empty", key)
    return raw.strip()


def _points(section, key, raw):
    items = [s for s in raw.replace(",", " ").split() if s]
    return tuple(_positive(section, key, s) for s in items)


def _variant(section, key, raw):
    try:
        return VariantId.parse(raw)
    except DomainError as exc:
        raise ConfigError(f"[{section}] {exc}", key) from None


def _chaplygin_n(section, key, raw):
    value = _number(section, key, raw)
    if not -1 < value <= 1:
        raise ConfigError(f"[{section}] Chaplygin exponent must lie in (-1, 1], got {raw!r}",
                          key)
    return value


def _mode(section, key, raw):
    value = raw.strip().lower()
    if value not in ("adaptive45", "euler"):
        raise ConfigError(f"[{section}] expected 'adaptive45' or 'euler', got {raw!r}", key)
    return value


def _form(section, key, raw):
    try:
        return MomentumForm.parse(raw)
    except DomainError as exc:
        raise ConfigError(f"[{section}] {exc}", key) from None


SCHEMA = {
    "model": {"variant": _variant, "n": _chaplygin_n, "A": _positive},
    "integration": {
        "eta_start": _positive, "eta_end": _positive,
        "f0": _number, "g0": _positive, "h0": _number, "q0": _number,
        "rtol": _positive, "atol": _positive, "max_steps": _count, "min_step": _positive,
        "mode": _mode, "euler_step": _positive, "momentum_form": _form,
        "singular_tolerance": _positive, "g_floor": _positive, "output_points": _points,
    },
    "grid": {"r_min": _positive, "r_max": _positive, "t_center": _positive,
             "spacing": _positive},
    "output": {"solution_csv": _text, "report": _text, "svg": _text},
}
REQUIRED = {"model": ("variant", "n", "A"), "grid": ("r_min", "r_max")}


def _reader():
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       empty_lines_in_values=False,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str       # keep "A" distinct from "a"
    return parser


def _read(text):
    parser = _reader()
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key-value line before any [section] header",
                          line=exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        try:
            line = ast.literal_eval(line)   # configparser stores repr(line)
        except (ValueError, SyntaxError):
            pass
        raise ConfigError(f"cannot parse {line.strip()!r}", line=lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        what = getattr(exc, "option", None)
        raise ConfigError(str(exc).split(":", 1)[-1].strip(), key=what,
                          line=exc.lineno) from None
    return parser


def _apply_overrides(parser, overrides):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        name, value = (s.strip() for s in item.split("=", 1))
        if "." in name:
            section, key = name.split(".", 1)
        else:
            owners = [s for s, keys in SCHEMA.items() if name in keys]
            if len(owners) != 1:
                raise ConfigError("unknown override key; use section.key", name)
            section, key = owners[0], name
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override key [{section}]", key)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)


def parse_config(text: str, overrides=()) -> RunConfig:
    """Validate a configuration document.

    Parameters
    ----------
    text : str
        INI text.
    overrides : iterable of str
        ``section.key=value`` (or bare ``key=value`` when unambiguous)
        assignments applied after reading.

    Raises
    ------
    ConfigError
        Syntax errors carry the line number; unknown keys and domain
        violations carry the key name.
    """
    parser = _read(text)
    _apply_overrides(parser, overrides)
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key in [{section}]", key)
            values[(section, key)] = SCHEMA[section][key](section, key, raw)
    for section, keys in REQUIRED.items():
        if section == "grid" and not parser.has_section("grid"):
            continue
        for key in keys:
            if (section, key) not in values:
                raise ConfigError(f"missing required key in [{section}]", key)

    model = {k: values[("model", k)] for k in ("variant", "n", "A")}
    integ = {k: v for (s, k), v in values.items() if s == "integration"}
    mode = integ.pop("mode", "adaptive45")
    step = integ.pop("euler_step", None)
    if mode == "euler":
        integ["mode"] = FixedEuler(DEFAULT_EULER_STEP if step is None else step)
    elif step is not None:
        raise ConfigError("[integration] euler_step requires mode = euler", "euler_step")
    defaults = IntegrationConfig()
    eta_start = integ.get("eta_start", defaults.eta_start)
    if not eta_start < integ.get("eta_end", defaults.eta_end):
        raise ConfigError("[integration] eta_end must exceed eta_start", "eta_end")
    if not integ.get("g0", defaults.g0) > integ.get("g_floor", defaults.g_floor):
        raise ConfigError("[integration] g0 must exceed g_floor", "g0")
    try:
        integration = IntegrationConfig(**integ)
    except DomainError as exc:
        raise ConfigError(f"[integration] {exc}") from None

    grid = None
    if parser.has_section("grid"):
        g = {k: v for (s, k), v in values.items() if s == "grid"}
        gd = GridSpec.__dataclass_fields__
        spacing = g.get("spacing", gd["spacing"].default)
        t_center = g.get("t_center", gd["t_center"].default)
        if not g["r_min"] < g["r_max"]:
            raise ConfigError("[grid] r_max must exceed r_min", "r_max")
        if not spacing < (g["r_max"] - g["r_min"]) / 4:
            raise ConfigError("[grid] spacing must be below (r_max - r_min)/4", "spacing")
        if not spacing < t_center:
            raise ConfigError("[grid] spacing must be below t_center", "spacing")
        grid = GridSpec(**g)

    outputs = {k: v for (s, k), v in values.items() if s == "output"}
    return RunConfig(integration=integration, grid=grid, **model, **outputs)


def serialize_config(config: RunConfig) -> str:
    """INI text that :func:`parse_config` maps back to ``config``."""
    out = ["[model]", f"variant = {config.variant.value}", f"n = {config.n!r}",
           f"A = {config.A!r}", "", "[integration]"]
    ic = config.integration
    for f in fields(IntegrationConfig):
        value = getattr(ic, f.name)
        if f.name == "mode":
            if isinstance(value, FixedEuler):
                out += ["mode = euler", f"euler_step = {value.step!r}"]
            else:
                out.append("mode = adaptive45")
        elif f.name == "momentum_form":
            out.append(f"momentum_form = {value.value}")
        elif f.name == "output_points":
            if value:
                out.append("output_points = " + ", ".join(repr(v) for v in value))
        else:
            out.append(f"{f.name} = {value!r}")
    if config.grid is not None:
        g = config.grid
        out += ["", "[grid]", f"r_min = {g.r_min!r}", f"r_max = {g.r_max!r}",
                f"t_center = {g.t_center!r}", f"spacing = {g.spacing!r}"]
    out += ["", "[output]", f"solution_csv = {config.solution_csv}",
            f"report = {config.report}"]
    if config.svg is not None:
        out.append(f"svg = {config.svg}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- outputs

def format_csv(table: SolutionTable) -> str:
    """Header plus one line per row; floats in shortest round-trip form."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in table.rows.tolist():
        buf.write(",".join(repr(v) for v in row) + "\n")
    return buf.getvalue()


def read_solution_csv(path) -> np.ndarray:
    """Rows of a CSV written by :func:`format_csv`, as an ``(N, 6)`` array."""
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise DomainError(f"{path}: unexpected header {header!r}")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=float).reshape(-1, 6)


def _classification(table):
    if len(table) < 2:
        return Classification.INDETERMINATE
    return classify(table)


def format_report(config: RunConfig, table: SolutionTable, classification) -> list:
    exp, eos = config.exponents, config.eos
    ic = config.integration
    lines = [
        f"variant: {config.variant.value}",
        f"n: {config.n!r}",
        f"A: {config.A!r}",
        f"alpha: {exp.alpha}",
        f"beta: {exp.beta}",
        f"gamma: {exp.gamma}",
        f"delta: {exp.delta}",
        f"eta_start: {ic.eta_start!r}",
        f"eta_end: {ic.eta_end!r}",
        f"f0: {ic.f0!r}",
        f"g0: {ic.g0!r}",
        f"h0: {ic.h0!r}",
        f"q0: {ic.q0!r}",
        f"mode: {ic.mode}",
        f"rtol: {ic.rtol!r}",
        f"atol: {ic.atol!r}",
        f"termination: {table.termination}",
    ]
    if table.termination.eta is not None:
        lines.append(f"event_eta: {table.termination.eta!r}")
    lines += [
        f"rows: {len(table)}",
        f"accepted_steps: {table.stats.get('accepted', 0)}",
        f"rejected_steps: {table.stats.get('rejected', 0)}",
        f"backend: {table.stats.get('backend', 'none')}",
        f"classification: {classification.value}",
        f"f_min: {float(table.f.min())!r}",
    ]
    report = residual_report(table, exp, eos, config.grid, ic.momentum_form)
    lines += report.lines()
    if report.ode_residual_max:
        other = (MomentumForm.PDE_DERIVED if ic.momentum_form is MomentumForm.AS_PRINTED
                 else MomentumForm.AS_PRINTED)
        eq6 = ode_residuals(table, exp, eos, other)["eq6"]
        lines.append(f"ode_residual_eq6_{other.value}: {eq6!r}")
    lines += [f"note: {note}" for note in report.notes]
    lines.append(f"exit_code: {EXIT_CODES[table.termination.kind]}")
    return lines


def _prepare(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOFailure(path.parent, exc.strerror or str(exc)) from None
    if path.is_dir():
        raise IOFailure(path, "is a directory")
    if not os.access(path.parent, os.W_OK):
        raise IOFailure(path.parent, "directory is not writable")


def _write_all(contents):
    """Write ``{path: text}`` atomically per file; on failure remove every
    file this call created or replaced."""
    done = []
    try:
        for path, text in contents.items():
            tmp = path.with_name(path.name + ".partial")
            try:
                with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
                os.replace(tmp, path)
            except OSError as exc:
                if tmp.is_file():
                    tmp.unlink()
                raise IOFailure(path, exc.strerror or str(exc)) from None
            done.append(path)
    except IOFailure:
        for path in done:
            path.unlink(missing_ok=True)
        raise


@dataclass
class RunOutcome:
    exit_code: int
    table: SolutionTable | None = None
    classification: Classification | None = None
    paths: dict = field(default_factory=dict)
    message: str = ""


def _resolve(config: RunConfig, base_dir):
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    paths = {"solution_csv": base / config.solution_csv, "report": base / config.report}
    if config.svg is not None:
        paths["svg"] = base / config.svg
    return paths


def run(config: RunConfig, base_dir=None) -> RunOutcome:
    """Integrate, verify, classify and write the artifacts of one run.

    Relative output paths are taken from ``base_dir`` (default: the working
    directory).  Never raises for expected failures; the outcome carries the
    exit code and a message.
    """
    paths = _resolve(config, base_dir)
    try:
        for path in paths.values():
            _prepare(path)
    except IOFailure as exc:
        return RunOutcome(EXIT_IO, message=f"I/O error: {exc}")
    try:
        table = integrate(config.integration, config.exponents, config.eos)
    except (DomainError, SetupError) as exc:
        return RunOutcome(EXIT_CONFIG, message=f"configuration error: {exc}")
    classification = _classification(table)
    lines = format_report(config, table, classification)
    contents = {paths["solution_csv"]: format_csv(table)}
    if "svg" in paths:
        if len(table) >= 2:
            contents[paths["svg"]] = render_svg(table, config.exponents, config.eos)
        else:
            lines.insert(-1, "note: svg not written (fewer than two rows)")
    contents[paths["report"]] = "\n".join(lines) + "\n"
    try:
        _write_all(contents)
    except IOFailure as exc:
        return RunOutcome(EXIT_IO, table, classification, message=f"I/O error: {exc}")
    code = EXIT_CODES[table.termination.kind]
    return RunOutcome(code, table, classification,
                      {k: str(v) for k, v in paths.items() if v in contents},
                      f"termination: {table.termination}; "
                      f"classification: {classification.value}")


# ---------------------------------------------------------------- sweep

def read_overrides(text: str) -> list:
    """One element per non-blank, non-comment line of whitespace-separated
    ``key=value`` assignments."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line.split())
    return out


def run_sweep(base_text: str, elements, out_dir, jobs: int = 1):
    """Run every override set against ``base_text``; returns the index rows.

    Element ``k`` writes into ``out_dir/element-kkk`` using the base names of
    the configured output paths.  ``index.csv`` is written once, at the end.
    """
    out_dir = Path(out_dir)

    def one(k):
        directory = out_dir / f"element-{k:03d}"
        try:
            cfg = parse_config(base_text, elements[k])
        except ConfigError as exc:
            return k, RunOutcome(EXIT_CONFIG, message=f"configuration error: {exc}"), directory
        cfg = replace(cfg, solution_csv=Path(cfg.solution_csv).name,
                      report=Path(cfg.report).name,
                      svg=None if cfg.svg is None else Path(cfg.svg).name)
        return k, run(cfg, directory), directory

    if jobs > 1 and len(elements) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(len(elements))))
    else:
        results = [one(k) for k in range(len(elements))]

    index = []
    for k, outcome, directory in results:
        table = outcome.table
        index.append({
            "element": k,
            "exit_code": outcome.exit_code,
            "termination": "" if table is None else str(table.termination),
            "classification": ("" if outcome.classification is None
                               else outcome.classification.value),
            "directory": directory.name,
            "overrides": " ".join(elements[k]),
            "message": outcome.message,
        })
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(index[0]) if index else ["element"],
                            lineterminator="\n")
    writer.writeheader()
    writer.writerows(index)
    index_path = out_dir / "index.csv"
    _prepare(index_path)
    _write_all({index_path: buf.getvalue()})
    return index


# ---------------------------------------------------------------- entry point

def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(path, exc.strerror or str(exc)) from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chaplygin",
        description="Self-similar cylindrical Euler-Poisson solver for a Chaplygin gas.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("config", help="INI configuration file")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a key (section.key=value)")
    p_run.add_argument("--output-dir", default=None,
                       help="directory for relative output paths (default: cwd)")
    p_run.add_argument("--print-config", action="store_true",
                       help="print the normalized configuration and exit")
    p_sw = sub.add_parser("sweep", help="run one element per overrides line")
    p_sw.add_argument("config", help="base INI configuration file")
    p_sw.add_argument("overrides_file", help="file with one line of KEY=VALUE per element")
    p_sw.add_argument("--output-dir", required=True, help="directory for element outputs")
    p_sw.add_argument("--jobs", type=int, default=1, help="concurrent elements")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = _read_text(args.config)
        if args.command == "run":
            config = parse_config(text, args.overrides)
            if args.print_config:
                sys.stdout.write(serialize_config(config))
                return EXIT_OK
            outcome = run(config, args.output_dir)
            stream = sys.stdout if outcome.exit_code in EXIT_CODES.values() else sys.stderr
            print(outcome.message, file=stream)
            return outcome.exit_code
        parse_config(text)
        elements = read_overrides(_read_text(args.overrides_file))
        index = run_sweep(text, elements, args.output_dir, args.jobs)
        for row in index:
            print(f"element {row['element']}: exit {row['exit_code']} "
                  f"{row['termination']} {row['classification']}".rstrip())
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
