"""Command line: ``poisrec trace``, ``poisrec verify <suite>``, ``poisrec rescaled``.

Exit codes: 0 all checks pass, 1 some check failed, 2 usage/config error,
3 I/O error.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np
import yaml

from poisrec import pathsim, scaling
from poisrec.errors import InvalidInputError, InvalidParameterError, OutOfRangeError
from poisrec.randomness import GENERATOR_VERSION, make_stream
from poisrec.statlab import TestReport
from poisrec.suites import SUITES, ExperimentConfig, replicate_map, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

CONFIG_KEYS = ("rate", "scales", "times", "reps", "grid", "seed", "horizon", "out", "fmt", "workers", "extra")

REPORT_COLUMNS = ["suite", "statistic", "value", "threshold", "pass", "n_samples", "seed"]


_ALIASES = {"lambda": "rate", "format": "fmt", "scale": "scales"}


class ReportIOError(OSError):
    pass


def _check_writable(out: str | None) -> None:
    if out is None:
        return
    parent = Path(out).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise ReportIOError(f"cannot write to {out}")


def render_reports(reports: list[TestReport], fmt: str) -> str:
    rows = [r.as_row() for r in reports]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            if isinstance(row["threshold"], list):
                row["threshold"] = "[{}, {}]".format(*row["threshold"])
            writer.writerow(row)
        return buf.getvalue()
    raise InvalidParameterError(f"unknown report format {fmt!r}")


def provenance(cfg: ExperimentConfig) -> dict:
    meta = asdict(cfg)
    meta.pop("workers")  # must not influence any output byte
    meta.pop("out")
    meta["generator"] = GENERATOR_VERSION
    return meta


def run_experiment(cfg: ExperimentConfig) -> list[TestReport]:
    """Run the configured suite and write its report (and a provenance sidecar)."""
    if cfg.suite not in SUITES:
        raise InvalidParameterError(f"unknown suite {cfg.suite!r}; choose from {sorted(SUITES)}")
    _check_writable(cfg.out)
    reports = run_suite(cfg)
    text = render_reports(reports, cfg.fmt)
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(cfg.out).write_text(text)
            Path(cfg.out + ".meta.json").write_text(json.dumps(provenance(cfg), indent=2) + "\n")
        except OSError as exc:
            raise ReportIOError(str(exc)) from exc
    return reports


def trace_rows(path: pathsim.PoissonPath, trace: pathsim.RecordTrace, resolution: int) -> list[tuple]:
    """Rows (s, N, I_next, C, W) on an even grid of [0, horizon] plus every
    arrival epoch, so each jump of N and C shows up as its own row."""
    if resolution < 1:
        raise InvalidParameterError("resolution must be >= 1")
    grid = np.linspace(0.0, path.horizon, resolution) if path.horizon > 0 else np.zeros(1)
    s = np.unique(np.concatenate((grid, path.arrivals[path.arrivals <= path.horizon])))
    ev = pathsim.evaluate(path, trace, s)
    return [(float(s[k]), int(ev["n"][k]), int(ev["i_next"][k]), int(ev["c"][k]), float(ev["w"][k]))
            for k in range(s.size)]


def export_trace(out: str, rate: float, horizon: float, seed: int, resolution: int = 513) -> int:
    """Simulate one path from stream (seed, 0) and write its trace CSV; returns the row count."""
    _check_writable(out)
    path = pathsim.simulate_path(make_stream(seed, 0), rate, horizon)
    rows = trace_rows(path, pathsim.build_trace(path), resolution)
    try:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["s", "N", "I_next", "C", "W"])
            writer.writerows((repr(s), n, i, c, repr(w)) for s, n, i, c, w in rows)
    except OSError as exc:
        raise ReportIOError(str(exc)) from exc
    return len(rows)


def _rescaled_rep(stream, i, scales, rate, grid_points):
    g = scaling.uniform_grid(grid_points)
    path = pathsim.simulate_path(stream, rate, math.expm1(max(scales)))
    trace = pathsim.build_trace(path)
    rows = []
    for n in scales:
        c = scaling.rescaled_C(path, trace, n, g).values
        w = scaling.rescaled_W(path, trace, n, rate, g).values
        phi = scaling.stochastic_clock(path, trace, n, g).values
        rows.extend((i, n, float(g[k]), float(c[k]), float(w[k]), float(phi[k])) for k in range(g.size))
    return rows


def _parse_floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(v) for v in str(text).replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated list of numbers, got {text!r}")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ReportIOError(str(exc)) from exc
    if not isinstance(data, dict):
        raise click.BadParameter("config file must hold a mapping", param_hint="--config")
    return data


def _common(f):
    opts = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="JSON/YAML file of option values; flags override it."),
        click.option("--lambda", "rate", type=float, default=None, help="Poisson rate."),
        click.option("--horizon", type=float, default=None, help="Simulated time horizon."),
        click.option("--scale", "--scales", "scales", default=None,
                     help="Scale parameter(s) n, comma-separated."),
        click.option("--times", default=None, help="Calendar time(s) t, comma-separated."),
        click.option("--reps", type=int, default=None, help="Replicate count."),
        click.option("--grid", type=int, default=None, help="Grid points on [0, 1] (or trace resolution)."),
        click.option("--seed", type=int, default=None, help="Master seed."),
        click.option("--out", default=None, help="Output path (stdout if omitted)."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None),
        click.option("--workers", type=int, default=None, help="Worker processes."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _merge(config_path, **flags) -> dict:
    merged = {_ALIASES.get(k, k): v for k, v in _load_config_file(config_path).items()}
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    for key in ("scales", "times"):
        if key in merged and not isinstance(merged[key], list):
            merged[key] = _parse_floats(merged[key])
    return merged


def _guard(fn):
    """Map library exceptions to the documented exit codes."""
    try:
        return fn()
    except ReportIOError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except (InvalidParameterError, InvalidInputError, OutOfRangeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Simulate and verify the record structure of a Poisson process."""


@main.command()
@click.argument("suite")
@_common
def verify(suite, config_path, **flags):
    """Run one verification SUITE and emit its pass/fail report."""
    merged = _guard(lambda: _merge(config_path, **flags))
    if suite not in SUITES:
        raise click.UsageError(f"unknown suite {suite!r}; choose from {', '.join(sorted(SUITES))}")

    def go():
        known = {k: v for k, v in merged.items() if k in CONFIG_KEYS}
        cfg = ExperimentConfig(suite=suite, **known)
        reports = run_experiment(cfg)
        failed = [r for r in reports if not r.passed]
        for r in failed:
            click.echo(f"FAIL {r.suite}: {r.statistic} = {r.value!r} (threshold {r.threshold})", err=True)
        return EXIT_FAIL if failed else EXIT_OK

    sys.exit(_guard(go))


@main.command()
@_common
def trace(config_path, **flags):
    """Export one simulated path as CSV rows s,N,I_next,C,W."""
    merged = _guard(lambda: _merge(config_path, **flags))
    if merged.get("out") is None:
        raise click.UsageError("--out is required for trace")

    def go():
        export_trace(merged["out"], merged.get("rate", 1.0), merged.get("horizon", 20.0),
                     merged.get("seed", 1), merged.get("grid", 513))
        return EXIT_OK

    sys.exit(_guard(go))


@main.command()
@_common
def rescaled(config_path, **flags):
    """Emit C~_n, W~_n and Phi_n on the grid for each replicate and scale (CSV)."""
    merged = _guard(lambda: _merge(config_path, **flags))

    def go():
        scales = merged.get("scales") or [8.0]
        rate = merged.get("rate", 1.0)
        grid = merged.get("grid", 65)
        reps = merged.get("reps", 10)
        seed = merged.get("seed", 1)
        if any(n < 1 for n in scales) or rate <= 0 or grid < 2 or reps < 1:
            raise InvalidParameterError("need scales >= 1, rate > 0, grid >= 2, reps >= 1")
        out = merged.get("out")
        _check_writable(out)
        rows = replicate_map(_rescaled_rep, seed, 22, reps, merged.get("workers", 1),
                             scales=scales, rate=rate, grid_points=grid)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["replicate", "n", "t", "C_tilde", "W_tilde", "Phi"])
        for rep_rows in rows:
            writer.writerows((i, repr(n), repr(t), repr(c), repr(w), repr(p)) for i, n, t, c, w, p in rep_rows)
        if out is None:
            sys.stdout.write(buf.getvalue())
        else:
            try:
                Path(out).write_text(buf.getvalue())
            except OSError as exc:
                raise ReportIOError(str(exc)) from exc
        return EXIT_OK

    sys.exit(_guard(go))


if __name__ == "__main__":
    main()
