"""Command-line front door.

Subcommands::

    hom        coincidence tables behind the two-particle splitter
    chsh       conditional CHSH correlators, analytic or sampled
    phase-est  GHZ parity fringes and phase sensitivity scans
    verify     run the full analytic invariant suite

Angles are radians unless ``--degrees`` is given.  ``--mode analytic``
prints closed pipelines; ``sample`` and ``classical-mixture`` draw seeded
shot records.  Sampled runs with ``--format csv`` write the system stream
to ``--output`` and the control/key stream next to it (``NAME.control.EXT``);
``--format summary`` joins the streams and reports conditioned statistics.
Every output begins with a metadata header that reproduces the run:
config, seed, generator id, code version.  Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
from typing import IO, Iterator, Sequence

import numpy as np

from ._version import __version__
from .fock import Statistics
from .protocols import (
    CHSH_OUTCOMES,
    TSIRELSON_BOUND,
    ChshSettings,
    MetrologySetup,
    ProbabilityTable,
    TABLE_COLUMNS,
    chsh_value,
    conditional_correlator,
    hom_table,
    optimal_chsh_angles,
    parity_expectation,
    phase_sensitivity,
)
from . import sampler, verify
from .sampler import ExperimentConfig

__all__ = ["main", "run", "build_parser"]

_MODES = ("analytic", "sample", "classical-mixture")
_SAMPLER_MODE = {"sample": "quantum", "classical-mixture": "classical_mixture"}


class UsageError(ValueError):
    """Invalid flag combination or value; maps to exit code 2."""


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", metavar="PATH", help="write here instead of stdout")
    common.add_argument(
        "--format",
        choices=("csv", "summary"),
        help="output form (default: csv for analytic runs, summary for sampled)",
    )
    common.add_argument(
        "--degrees",
        action="store_true",
        help="interpret all angle flags in degrees",
    )

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument(
        "--mode",
        choices=_MODES,
        default="analytic",
        help="analytic pipeline, quantum sampling, or the classical baseline",
    )
    sampling.add_argument("--shots", type=int, default=10000, help="shots per run")
    sampling.add_argument("--seed", type=int, default=0, help="64-bit run seed")

    parser = argparse.ArgumentParser(
        prog="qeraser",
        description="Delayed-choice conditional statistics: tables, CHSH, phase estimation.",
    )
    parser.add_argument("--version", action="version", version=f"qeraser {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    hom = commands.add_parser(
        "hom",
        parents=[common, sampling],
        help="two-particle interference table conditioned on the control spin",
    )
    hom.add_argument("--phi", type=float, default=0.0, help="preparation phase")
    hom.add_argument(
        "--statistics",
        choices=tuple(s.value for s in Statistics),
        default=Statistics.BOSON.value,
        help="exchange statistics of the interfering pair",
    )
    hom.add_argument(
        "--control-angle",
        type=float,
        default=None,
        help="control analyzer angle (default 0: erases; pi/2 reveals the path)",
    )

    chsh = commands.add_parser(
        "chsh",
        parents=[common, sampling],
        help="conditional CHSH value at fixed or optimized analyzer settings",
    )
    chsh.add_argument("--phi", type=float, default=0.0, help="preparation phase")
    chsh.add_argument(
        "--angles",
        metavar="A0,A1,B0,B1",
        help="four analyzer angles; mutually exclusive with --optimize",
    )
    chsh.add_argument(
        "--optimize",
        action="store_true",
        help="search settings maximizing the conditional CHSH value (default)",
    )
    chsh.add_argument(
        "--condition",
        choices=("up", "down"),
        default="up",
        help="control branch the optimizer targets",
    )
    chsh.add_argument(
        "--control-angle",
        type=float,
        default=None,
        help="control analyzer angle of the sampled run (default 0: erases)",
    )

    phase = commands.add_parser(
        "phase-est",
        parents=[common, sampling],
        help="GHZ parity fringes and phase sensitivity",
    )
    phase.add_argument("--n", type=int, default=2, help="register size")
    phase.add_argument("--phi", type=float, default=0.0, help="preparation phase")
    phase.add_argument("--theta", type=float, default=None, help="single phase point")
    phase.add_argument(
        "--theta-scan",
        metavar="START:STOP:COUNT",
        help="evenly spaced phase points, STOP exclusive",
    )
    phase.add_argument(
        "--control-angle",
        type=float,
        default=None,
        help="control analyzer angle (default pi/2: erases; 0 reveals the branch)",
    )

    commands.add_parser(
        "verify", parents=[common], help="run the analytic invariant suite"
    )
    return parser


def _parse_theta_scan(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--theta-scan wants START:STOP:COUNT, got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError as error:
        raise UsageError(f"bad --theta-scan value: {error}") from None
    if count < 1:
        raise UsageError("--theta-scan count must be at least 1")
    return np.linspace(start, stop, count, endpoint=False)


def _parse_angles(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError(f"--angles wants four comma-separated values, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as error:
        raise UsageError(f"bad --angles value: {error}") from None


@contextlib.contextmanager
def _output_stream(path: str | None) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            yield handle


def _resolved_format(args: argparse.Namespace) -> str:
    if args.format is not None:
        return args.format
    return "csv" if getattr(args, "mode", "analytic") == "analytic" else "summary"


def _analytic_header(command: str, params: dict) -> str:
    payload = {
        "command": command,
        "mode": "analytic",
        "params": params,
        "version": __version__,
    }
    return "# " + json.dumps(payload, sort_keys=True)


def _control_path(path: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}.control{ext}" if ext else f"{path}.control"


def _to_radians(args: argparse.Namespace, names: Sequence[str]) -> None:
    # unset flags (None) stay None: radian-valued defaults must not be rescaled
    scale = math.pi / 180.0
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            setattr(args, name, value * scale)


def _write_streams(
    args: argparse.Namespace,
    config: ExperimentConfig,
    system: Sequence[sampler.MeasurementRecord],
    control: Sequence[sampler.ControlRecord],
) -> None:
    if args.output is None:
        raise UsageError("sampled stream output needs --output (or --format summary)")
    with open(args.output, "w", encoding="utf-8", newline="") as handle:
        sampler.write_stream_csv(handle, system, config)
    control_path = _control_path(args.output)
    with open(control_path, "w", encoding="utf-8", newline="") as handle:
        sampler.write_stream_csv(handle, control, config)
    print(f"wrote {args.output} and {control_path}", file=sys.stderr)


def _joined_partition(
    system: Sequence[sampler.MeasurementRecord],
    control: Sequence[sampler.ControlRecord],
) -> sampler.JoinedStreams:
    return sampler.delayed_join(system, control)


def _hom_reference_table(config: ExperimentConfig) -> ProbabilityTable:
    if config.mode == "classical_mixture":
        return hom_table(config.phi, Statistics(config.statistics))
    _, dists = sampler._hom_joint_distribution(config)
    up = dists[0, 0::2]
    down = dists[0, 1::2]
    values = np.column_stack([up, down, up + down])
    return ProbabilityTable(sampler.HOM_OUTCOMES, TABLE_COLUMNS, values)


def _run_hom(args: argparse.Namespace) -> int:
    if args.degrees:
        _to_radians(args, ("phi", "control_angle"))
    if args.control_angle is None:
        args.control_angle = 0.0
    form = _resolved_format(args)
    if args.mode == "analytic":
        table = hom_table(args.phi, Statistics(args.statistics))
        header = _analytic_header(
            "hom", {"phi": args.phi, "statistics": args.statistics}
        )
        with _output_stream(args.output) as out:
            out.write(header + "\n")
            out.write(table.to_csv() if form == "csv" else table.summary())
        return 0

    config = ExperimentConfig(
        experiment="hom",
        shots=args.shots,
        seed=args.seed,
        phi=args.phi,
        statistics=args.statistics,
        control_basis_angle=args.control_angle,
        mode=_SAMPLER_MODE[args.mode],
    )
    system, control = sampler.run_experiment(config)
    if form == "csv":
        _write_streams(args, config, system, control)
        return 0
    joined = _joined_partition(system, control)
    empirical_joined = sampler.empirical_table(joined.records, joined.partition())
    empirical_unjoined = sampler.empirical_table(joined.records)
    reference = _hom_reference_table(config)
    with _output_stream(args.output) as out:
        out.write(sampler.metadata_header(config) + "\n")
        out.write("reference (analytic, this control basis):\n")
        out.write(reference.summary())
        out.write("\njoined empirical table:\n")
        out.write(empirical_joined.summary())
        out.write("\nunjoined empirical table:\n")
        out.write(empirical_unjoined.summary())
    return 0


def _resolve_chsh_settings(args: argparse.Namespace) -> ChshSettings:
    if args.angles is not None and args.optimize:
        raise UsageError("--angles and --optimize are mutually exclusive")
    if args.angles is not None:
        angles = _parse_angles(args.angles)
        if args.degrees:
            angles = tuple(a * math.pi / 180.0 for a in angles)
        return ChshSettings(*angles)
    return optimal_chsh_angles(args.phi, args.condition)


def _chsh_analytic_rows(
    settings: ChshSettings, phi: float
) -> list[tuple[int, int, float, float, float, float, float]]:
    rows = []
    for i in (0, 1):
        for j in (0, 1):
            theta_a, theta_b = settings.pair(i, j)
            rows.append(
                (
                    i,
                    j,
                    theta_a,
                    theta_b,
                    conditional_correlator(theta_a, theta_b, phi, "up"),
                    conditional_correlator(theta_a, theta_b, phi, "down"),
                    conditional_correlator(theta_a, theta_b, phi, "?"),
                )
            )
    return rows


def _run_chsh(args: argparse.Namespace) -> int:
    if args.degrees:
        _to_radians(args, ("phi", "control_angle"))
    if args.control_angle is None:
        args.control_angle = 0.0
    settings = _resolve_chsh_settings(args)
    form = _resolved_format(args)
    analytic = {
        condition: chsh_value(settings, args.phi, condition)
        for condition in ("up", "down", "?")
    }

    if args.mode == "analytic":
        header = _analytic_header(
            "chsh",
            {
                "phi": args.phi,
                "settings": [
                    settings.theta_a0,
                    settings.theta_a1,
                    settings.theta_b0,
                    settings.theta_b1,
                ],
                "condition": args.condition,
            },
        )
        rows = _chsh_analytic_rows(settings, args.phi)
        with _output_stream(args.output) as out:
            out.write(header + "\n")
            if form == "csv":
                out.write("setting_a,setting_b,theta_a,theta_b,E_up,E_down,E_unjoined\n")
                for row in rows:
                    out.write(
                        f"{row[0]},{row[1]},"
                        + ",".join(repr(float(v)) for v in row[2:])
                        + "\n"
                    )
                out.write(
                    f"# S_up={analytic['up']!r} S_down={analytic['down']!r} "
                    f"S_unjoined={analytic['?']!r} bound={TSIRELSON_BOUND!r}\n"
                )
            else:
                out.write(
                    "settings: "
                    f"a0={settings.theta_a0:.6f} a1={settings.theta_a1:.6f} "
                    f"b0={settings.theta_b0:.6f} b1={settings.theta_b1:.6f}\n"
                )
                for row in rows:
                    out.write(
                        f"pair ({row[0]},{row[1]}): E_up={row[4]:+.6f} "
                        f"E_down={row[5]:+.6f} E_unjoined={row[6]:+.6f}\n"
                    )
                out.write(
                    f"S (C=up) = {analytic['up']:.9f}\n"
                    f"S (C=down) = {analytic['down']:.9f}\n"
                    f"S (C=?) = {analytic['?']:.9f}\n"
                    f"quantum bound 2*sqrt(2) = {TSIRELSON_BOUND:.9f}\n"
                )
        return 0

    config = ExperimentConfig(
        experiment="chsh",
        shots=args.shots,
        seed=args.seed,
        phi=args.phi,
        settings=settings,
        control_basis_angle=args.control_angle,
        mode=_SAMPLER_MODE[args.mode],
    )
    system, control = sampler.run_experiment(config)
    if form == "csv":
        _write_streams(args, config, system, control)
        return 0
    joined = _joined_partition(system, control)
    s_up, err_up = sampler.chsh_statistic(joined.labeled(+1))
    s_down, err_down = sampler.chsh_statistic(joined.labeled(-1))
    s_raw, err_raw = sampler.chsh_statistic(joined.records)
    significance = (abs(s_up) - 2.0) / err_up if err_up > 0 else math.inf
    with _output_stream(args.output) as out:
        out.write(sampler.metadata_header(config) + "\n")
        out.write(
            "settings: "
            f"a0={settings.theta_a0:.6f} a1={settings.theta_a1:.6f} "
            f"b0={settings.theta_b0:.6f} b1={settings.theta_b1:.6f}\n"
        )
        out.write(
            f"analytic S: up={analytic['up']:.6f} down={analytic['down']:.6f} "
            f"unjoined={analytic['?']:.6f}\n"
        )
        out.write(
            f"empirical S (joined C=up):   {s_up:+.4f} +- {err_up:.4f} "
            f"({len(joined.labeled(+1))} shots)\n"
        )
        out.write(
            f"empirical S (joined C=down): {s_down:+.4f} +- {err_down:.4f} "
            f"({len(joined.labeled(-1))} shots)\n"
        )
        out.write(
            f"empirical S (unjoined):      {s_raw:+.4f} +- {err_raw:.4f} "
            f"({len(joined.records)} shots)\n"
        )
        out.write(
            f"violation of |S| <= 2 (C=up branch): {significance:.2f} standard errors\n"
        )
    return 0


def _safe_parity(records: Sequence[sampler.MeasurementRecord]) -> tuple[float, float]:
    if len(records) == 0:
        return math.nan, math.nan
    return sampler.empirical_parity(records)


def _phase_points(args: argparse.Namespace) -> np.ndarray:
    if args.theta_scan is not None and args.theta is not None:
        raise UsageError("--theta and --theta-scan are mutually exclusive")
    if args.theta_scan is not None:
        points = _parse_theta_scan(args.theta_scan)
    else:
        points = np.array([args.theta if args.theta is not None else 0.0])
    if args.degrees:
        points = points * math.pi / 180.0
    return points


def _run_phase_est(args: argparse.Namespace) -> int:
    if args.degrees:
        _to_radians(args, ("phi", "control_angle"))
    if args.control_angle is None:
        args.control_angle = math.pi / 2
    thetas = _phase_points(args)
    form = _resolved_format(args)
    erasing = abs(args.control_angle - math.pi / 2) <= 1e-9

    if args.mode == "analytic":
        header = _analytic_header(
            "phase-est",
            {
                "n": args.n,
                "phi": args.phi,
                "control_angle": args.control_angle,
                "theta_points": len(thetas),
            },
        )
        rows = []
        for theta in thetas:
            setup = MetrologySetup(args.n, float(theta), args.phi, args.control_angle)
            variance = ""
            if erasing:
                variance = repr(float(phase_sensitivity(setup)))
            rows.append(
                (
                    float(theta),
                    parity_expectation(setup, +1),
                    parity_expectation(setup, -1),
                    parity_expectation(setup, None),
                    variance,
                )
            )
        with _output_stream(args.output) as out:
            out.write(header + "\n")
            if form == "csv":
                out.write(
                    "theta,parity_given_up,parity_given_down,parity_unjoined,"
                    "phase_variance\n"
                )
                for theta, up, down, raw, variance in rows:
                    out.write(
                        f"{theta!r},{up!r},{down!r},{raw!r},{variance}\n"
                    )
            else:
                out.write(
                    f"n={args.n} phi={args.phi:.6f} "
                    f"control_angle={args.control_angle:.6f}\n"
                )
                for theta, up, down, raw, variance in rows:
                    tail = f" variance={variance}" if variance else ""
                    out.write(
                        f"theta={theta:+.6f}: <P|up>={up:+.6f} "
                        f"<P|down>={down:+.6f} <P>={raw:+.6f}{tail}\n"
                    )
        return 0

    base_config = ExperimentConfig(
        experiment="metrology",
        shots=args.shots,
        seed=args.seed,
        phi=args.phi,
        n=args.n,
        theta=float(thetas[0]),
        control_basis_angle=args.control_angle,
        mode=_SAMPLER_MODE[args.mode],
    )
    rows = []
    for index, theta in enumerate(thetas):
        config = ExperimentConfig(
            experiment="metrology",
            shots=args.shots,
            seed=(args.seed + index) % 2**64,
            phi=args.phi,
            n=args.n,
            theta=float(theta),
            control_basis_angle=args.control_angle,
            mode=_SAMPLER_MODE[args.mode],
        )
        system, control = sampler.run_experiment(config)
        joined = _joined_partition(system, control)
        up = _safe_parity(joined.labeled(+1))
        down = _safe_parity(joined.labeled(-1))
        raw = _safe_parity(joined.records)
        rows.append((float(theta), *up, *down, *raw))

    header_payload = {
        "config": sampler.config_to_dict(base_config),
        "generator": sampler.GENERATOR_ID,
        "seed_rule": "seed + theta point index",
        "theta_points": len(thetas),
        "version": __version__,
    }
    header = "# " + json.dumps(header_payload, sort_keys=True)
    with _output_stream(args.output) as out:
        out.write(header + "\n")
        if form == "csv":
            out.write(
                "theta,parity_given_up,stderr_up,parity_given_down,stderr_down,"
                "parity_unjoined,stderr_unjoined\n"
            )
            for row in rows:
                out.write(",".join(repr(float(v)) for v in row) + "\n")
        else:
            out.write(
                f"n={args.n} phi={args.phi:.6f} "
                f"control_angle={args.control_angle:.6f} shots={args.shots}\n"
            )
            for theta, up, eu, down, ed, raw, er in rows:
                out.write(
                    f"theta={theta:+.6f}: <P|up>={up:+.4f}+-{eu:.4f} "
                    f"<P|down>={down:+.4f}+-{ed:.4f} <P>={raw:+.4f}+-{er:.4f}\n"
                )
    return 0


def _run_verify(args: argparse.Namespace) -> int:
    results = verify.run_all()
    with _output_stream(args.output) as out:
        for result in results:
            if result.passed:
                out.write(f"PASS {result.name}\n")
            else:
                out.write(f"FAIL {result.name}: {result.detail}\n")
        failed = sum(1 for r in results if not r.passed)
        out.write(f"{len(results) - failed} passed, {failed} failed\n")
    return 0 if failed == 0 else 1


_DISPATCH = {
    "hom": _run_hom,
    "chsh": _run_chsh,
    "phase-est": _run_phase_est,
    "verify": _run_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        code = exit_request.code
        return 0 if code is None else int(code)
    try:
        return _DISPATCH[args.command](args)
    except UsageError as error:
        print(f"usage error: {error}", file=sys.stderr)
        return 2
    except ValueError as error:
        print(f"usage error: {error}", file=sys.stderr)
        return 2
    except Exception as error:  # noqa: BLE001 - single-line diagnostic contract
        print(f"error: {type(error).__name__}: {error}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
