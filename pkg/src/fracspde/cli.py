"""Command-line front end: ``fracspde <subcommand> [options]``.

Options can also come from a ``key = value`` file passed with ``--config``;
flags win over the file, the file wins over built-in defaults. The manifest
written next to every run is itself such a file, so a run is repeated with
``fracspde <subcommand> --config <dir>/manifest.txt``.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .cq import cq_weights
from .experiments import EXAMPLES, expected_ratio, run_convergence, run_field_stats
from .mild import ContourAccuracyError, ContourConfig, kernel_contour, kernel_ml
from .noise import generate_paths
from .stepper import PolynomialSource, SchemeConfig, solve_fem, solve_modal

SUBCOMMANDS = ("weights", "solve", "kernel", "field-stats", "convergence", "selftest")
WORKERS_ENV = "FRACSPDE_WORKERS"


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# value parsers


def _parse_float(text: str) -> float:
    m = re.fullmatch(r"\s*2\s*(?:\^|\*\*)\s*(-?\d+)\s*", text)
    if m:
        return 2.0 ** int(m.group(1))
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_levels(text: str) -> tuple[int, ...]:
    m = re.fullmatch(r"\s*(\d+)\s*:\s*(\d+)\s*", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return tuple(range(lo, hi + 1))
    return tuple(int(v) for v in text.replace(",", " ").split())


def _format_levels(levels) -> str:
    levels = list(levels)
    if levels == list(range(levels[0], levels[-1] + 1)):
        return f"{levels[0]}:{levels[-1]}"
    return ",".join(map(str, levels))


@dataclass(frozen=True)
class Param:
    parse: Callable[[str], Any]
    check: Callable[[Any], bool]
    accepted: str
    fmt: Callable[[Any], str] = str


def _float_param(check, accepted):
    return Param(_parse_float, check, accepted, lambda v: repr(float(v)))


def _levels_ok(v) -> bool:
    return len(v) >= 2 and all(1 <= k <= 20 for k in v) and all(b > a for a, b in zip(v, v[1:]))


PARAMS: dict[str, Param] = {
    "alpha": _float_param(lambda v: 0.0 < v < 2.0, "(0, 2)"),
    "T": _float_param(lambda v: 0.0 < v <= 1e3, "(0, 1000]"),
    "levels": Param(_parse_levels, _levels_ok, "increasing integers in [1, 20], at least two (e.g. 2:6)", _format_levels),
    "M": Param(_parse_int, lambda v: 2 <= v <= 100_000, "[2, 100000]"),
    "tau_ref": _float_param(lambda v: 0.0 < v <= 1.0, "(0, 1]"),
    "tau": _float_param(lambda v: 0.0 < v <= 1.0, "(0, 1]"),
    "realizations": Param(_parse_int, lambda v: 3 <= v <= 10_000_000, "[3, 10000000]"),
    "seed": Param(_parse_int, lambda v: 0 <= v < 2**64, "[0, 2^64)"),
    "epsilon": _float_param(lambda v: 0.0 <= v <= 1e6, "[0, 1e6]"),
    "example": Param(str.strip, lambda v: v in EXAMPLES, " | ".join(EXAMPLES)),
    "discretization": Param(str.strip, lambda v: v in ("modal", "fem"), "modal | fem"),
    "out": Param(str.strip, lambda v: len(v) > 0, "a non-empty path"),
    "workers": Param(_parse_int, lambda v: 1 <= v <= 1024, "[1, 1024]"),
    "n": Param(_parse_int, lambda v: 0 <= v <= 10_000_000, "[0, 10000000]"),
    "lambda": _float_param(lambda v: 0.0 < v <= 1e12, "(0, 1e12]"),
    "tmax": _float_param(lambda v: 0.0 < v <= 1e3, "(0, 1000]"),
    "points": Param(_parse_int, lambda v: 1 <= v <= 100_000, "[1, 100000]"),
    "steps": Param(_parse_int, lambda v: 1 <= v <= 1_000_000, "[1, 1000000]"),
    "realization": Param(_parse_int, lambda v: 0 <= v < 2**64, "[0, 2^64)"),
}

DEFAULTS: dict[str, Any] = {
    "alpha": 0.5,
    "T": 1.0,
    "levels": (2, 3, 4, 5, 6),
    "M": 64,
    "tau_ref": 2.0**-13,
    "tau": 2.0**-5,
    "realizations": 200,
    "seed": 42,
    "epsilon": 1.0,
    "example": "frac_stochastic",
    "discretization": "modal",
    "out": "fracspde-out",
    "workers": 1,
    "n": 16,
    "lambda": math.pi**2,
    "tmax": 1.0,
    "points": 20,
    "steps": 32,
    "realization": 0,
}

# per-subcommand deviations from DEFAULTS and the keys each one uses
SUBCOMMAND_DEFAULTS = {
    "field-stats": {"M": 32, "epsilon": 0.1, "realizations": 1000},
    "solve": {"M": 32, "epsilon": 0.0},
}
SUBCOMMAND_KEYS = {
    "weights": ("alpha", "n"),
    "solve": ("alpha", "T", "steps", "M", "discretization", "epsilon", "seed", "realization"),
    "kernel": ("alpha", "lambda", "tmax", "points"),
    "field-stats": ("alpha", "T", "tau", "M", "epsilon", "realizations", "seed", "out", "workers"),
    "convergence": (
        "alpha", "T", "levels", "M", "tau_ref", "realizations", "seed", "epsilon",
        "example", "discretization", "out", "workers",
    ),
    "selftest": (),
}


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    alpha: float = DEFAULTS["alpha"]
    T: float = DEFAULTS["T"]
    levels: tuple = DEFAULTS["levels"]
    M: int = DEFAULTS["M"]
    tau_ref: float = DEFAULTS["tau_ref"]
    tau: float = DEFAULTS["tau"]
    I: int = DEFAULTS["realizations"]
    seed: int = DEFAULTS["seed"]
    epsilon: float = DEFAULTS["epsilon"]
    example: str = DEFAULTS["example"]
    discretization: str = DEFAULTS["discretization"]
    out: str = DEFAULTS["out"]
    workers: int = DEFAULTS["workers"]
    n: int = DEFAULTS["n"]
    lam: float = DEFAULTS["lambda"]
    tmax: float = DEFAULTS["tmax"]
    points: int = DEFAULTS["points"]
    steps: int = DEFAULTS["steps"]
    realization: int = DEFAULTS["realization"]
    sources: dict = field(default_factory=dict, compare=False, repr=False)

    def get(self, key: str):
        return getattr(self, _ATTR.get(key, key))

    def manifest(self) -> str:
        lines = [
            "# fracspde run manifest",
            f"# version = v{__version__}",
            f"# subcommand = {self.subcommand}",
        ]
        for key in SUBCOMMAND_KEYS[self.subcommand]:
            lines.append(f"{key} = {PARAMS[key].fmt(self.get(key))}")
        return "\n".join(lines) + "\n"


_ATTR = {"realizations": "I", "lambda": "lam"}


def _validate(key: str, raw: str, origin: str):
    if key not in PARAMS:
        raise ConfigError(key, f"unknown key ({origin}); known keys: {', '.join(PARAMS)}")
    p = PARAMS[key]
    try:
        value = p.parse(raw)
    except (ValueError, TypeError):
        raise ConfigError(key, f"malformed value {raw!r} ({origin}); accepted: {p.accepted}") from None
    if not p.check(value):
        raise ConfigError(key, f"value {raw.strip()} out of range ({origin}); accepted: {p.accepted}")
    return value


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value' in {path}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracspde", description="Stochastic time-fractional diffusion in 1-D.")
    parser.add_argument("--version", action="version", version=f"fracspde v{__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="key = value file; flags take precedence")
        for key in SUBCOMMAND_KEYS[name]:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, metavar=key.upper(), help=f"accepted: {PARAMS[key].accepted}")
    return parser


def parse_config(argv, config_file=None) -> RunConfig:
    """Resolve flags, an optional config file and the defaults into a :class:`RunConfig`."""
    args = vars(build_parser().parse_args(list(argv)))
    sub = args.pop("subcommand")
    config_file = args.pop("config", config_file)

    values = dict(DEFAULTS)
    values.update(SUBCOMMAND_DEFAULTS.get(sub, {}))
    sources = {k: "default" for k in values}
    env = os.environ.get(WORKERS_ENV)
    if env is not None:
        values["workers"] = _validate("workers", env, f"environment {WORKERS_ENV}")
        sources["workers"] = "env"
    if config_file is not None:
        for key, raw in read_config_file(config_file).items():
            values[key] = _validate(key, raw, f"file {config_file}")
            sources[key] = "file"
    for key, raw in args.items():
        values[key] = _validate(key, raw, "command line")
        sources[key] = "flag"

    if sub == "convergence" and values["example"] == "parabolic_stochastic" and values["alpha"] != 1.0:
        raise ConfigError("alpha", "the parabolic_stochastic example needs alpha = 1")
    kwargs = {_ATTR.get(k, k): v for k, v in values.items()}
    names = {f.name for f in fields(RunConfig)}
    return RunConfig(subcommand=sub, sources=sources, **{k: v for k, v in kwargs.items() if k in names})


# output


def _csv_rows(header, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, (int, np.integer)) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def convergence_plot(report, csv_name="convergence.csv") -> str:
    p = math.log2(expected_ratio(report.alpha))
    tau_f, E_f = float(report.taus[-1]), float(report.E[-1])
    return "\n".join([
        "set terminal pngcairo size 800,600",
        "set output 'convergence.png'",
        "set datafile separator ','",
        "set logscale xy",
        "set key top left",
        "set xlabel 'tau'",
        "set ylabel 'E(tau)'",
        f"set title 'alpha = {report.alpha!r}, I = {report.I}'",
        f"p = {p!r}",
        f"c = {E_f!r} / {tau_f!r}**p",
        f"plot '{csv_name}' skip 1 using 2:3:4 with yerrorlines pt 7 title 'E(tau)', \\",
        "     c*x**p with lines dt 2 title sprintf('slope %.3f', p)",
    ]) + "\n"


def field_plot(stats, csv_name="field.csv") -> str:
    return "\n".join([
        "set terminal pngcairo size 1200,450",
        "set output 'field.png'",
        "set datafile separator ','",
        "set multiplot layout 1,2",
        "set xlabel 'x'",
        "set title 'mean, standard deviation and exact solution'",
        f"plot '{csv_name}' skip 1 using 1:2 with linespoints title 'mean', \\",
        "     '' skip 1 using 1:3 with linespoints title 'std', \\",
        "     '' skip 1 using 1:7 with lines dt 2 title 'exact'",
        "set title 'three sample paths'",
        f"plot '{csv_name}' skip 1 using 1:4 with lines title 'sample 1', \\",
        "     '' skip 1 using 1:5 with lines title 'sample 2', \\",
        "     '' skip 1 using 1:6 with lines title 'sample 3'",
        "unset multiplot",
    ]) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from None


def emit_outputs(result, config: RunConfig, outdir=None) -> list[Path]:
    """Write the CSV, ``manifest.txt`` and ``plot.gp`` for a report or field statistics."""
    outdir = Path(config.out if outdir is None else outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {outdir}: {exc.strerror or exc}") from None
    if hasattr(result, "orders"):
        files = {"convergence.csv": result.to_csv(), "plot.gp": convergence_plot(result)}
    else:
        files = {"field.csv": result.to_csv(), "plot.gp": field_plot(result)}
    files["manifest.txt"] = config.manifest()
    written = []
    for name, text in files.items():
        _write(outdir / name, text)
        written.append(outdir / name)
    return written


# subcommands


def _cmd_weights(cfg: RunConfig, out) -> int:
    b = cq_weights(cfg.alpha, cfg.n).weights
    out.write(_csv_rows("j,b_j", ((j, v) for j, v in enumerate(b))))
    return 0


def _cmd_kernel(cfg: RunConfig, out) -> int:
    t = cfg.tmax * np.arange(1, cfg.points + 1) / cfg.points
    ml = kernel_ml(cfg.alpha, cfg.lam, t)
    contour_cfg = ContourConfig.for_alpha(cfg.alpha, cfg.tmax)
    rows = []
    for ti, fm in zip(t, ml):
        fc = kernel_contour(cfg.alpha, cfg.lam, float(ti), contour_cfg)
        rows.append((ti, fm, fc, abs(fc - fm)))
    out.write(_csv_rows("t,F_ml,F_contour,abs_diff", rows))
    return 0


def _cmd_solve(cfg: RunConfig, out) -> int:
    src = PolynomialSource(cfg.alpha)
    scheme = SchemeConfig(cfg.alpha, cfg.T, cfg.steps, cfg.discretization, cfg.M, cfg.epsilon, src)
    paths = None
    if cfg.epsilon > 0:
        paths = generate_paths(cfg.seed, cfg.realization, cfg.M, cfg.steps, scheme.tau)
    if cfg.discretization == "modal":
        traj = solve_modal(scheme, paths=paths)
        x, u = traj.field(traj.N, np.arange(cfg.M + 1) / cfg.M)
    else:
        x, u = solve_fem(scheme, paths).field(cfg.steps)
    if not np.all(np.isfinite(u)):
        raise FloatingPointError("non-finite solution")
    out.write(_csv_rows("x,u", zip(x, u)))
    return 0


def _cmd_field_stats(cfg: RunConfig, out) -> int:
    stats = run_field_stats(cfg.alpha, cfg.tau, cfg.M, cfg.epsilon, cfg.I, cfg.seed, cfg.T, cfg.workers)
    if stats.std[0] != 0.0 or stats.std[-1] != 0.0:
        raise AssertionError("boundary standard deviation is not zero")
    for p in emit_outputs(stats, cfg):
        out.write(f"wrote {p}\n")
    return 0


def _cmd_convergence(cfg: RunConfig, out) -> int:
    report = run_convergence(
        cfg.alpha, cfg.levels, cfg.I, cfg.seed, cfg.example, cfg.M, cfg.tau_ref,
        cfg.epsilon, cfg.T, cfg.discretization, cfg.workers,
    )
    if not (np.all(np.isfinite(report.E)) and np.all(report.E > 0)):
        raise AssertionError("non-positive or non-finite error estimate")
    out.write(report.table() + "\n")
    for p in emit_outputs(report, cfg):
        out.write(f"wrote {p}\n")
    return 0


def _cmd_selftest(cfg: RunConfig, out) -> int:
    from .selftest import run_all

    return 0 if run_all(lambda line: out.write(line + "\n")) else 1


COMMANDS = {
    "weights": _cmd_weights,
    "solve": _cmd_solve,
    "kernel": _cmd_kernel,
    "field-stats": _cmd_field_stats,
    "convergence": _cmd_convergence,
    "selftest": _cmd_selftest,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"fracspde: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    try:
        return COMMANDS[cfg.subcommand](cfg, out)
    except ContourAccuracyError as exc:
        print(f"fracspde: accuracy check failed: {exc}", file=sys.stderr)
        return 3
    except (AssertionError, FloatingPointError) as exc:
        print(f"fracspde: accuracy check failed: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"fracspde: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
