"""Seeded shot-by-shot sampling with delayed joining of the control record.

Every experiment emits two independent streams: measurement records for
the system (detector pattern, analyzer outcomes, or register parity) and
control records for the late measurement on the control particle.  The
system stream never carries the control basis angle or outcome; labeled
data sets exist only after :func:`delayed_join` pairs the streams by shot
index.  The classical baseline (:func:`classical_mixture_run`) replaces
the control particle by a random preparation bit retained by a classical
agent, which plays the role of the control stream.

Randomness contract (``GENERATOR_ID``): Philox 4x64 keyed by the run
seed; shot ``i`` owns counter block ``i``, i.e. the four raw 64-bit words
``random_raw[4*i : 4*i+4]``, mapped to uniforms in [0, 1).  Substreams
are therefore independent per shot and order-independent, and a record is
invariant under changes of the total shot count.  Per-shot uniform layout
(a frozen part of the stream format):

    quantum      hom/metrology  u0 = joint outcome cell
                 chsh           u0 = setting pair, u1 = joint outcome cell
    classical    key bit        u0 (< 1/2 selects the +1 preparation)
                 hom/metrology  u1 = system outcome
                 chsh           u1 = setting pair, u2 = system outcome

Outcome cells are selected by half-open cumulative intervals, so a
zero-probability cell is never selected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from . import fock
from ._version import __version__
from .fock import Statistics
from .protocols import (
    CHSH_OUTCOMES,
    HOM_OUTCOMES,
    ChshSettings,
    MetrologySetup,
    ProbabilityTable,
    hom_table,
    parity_branch_statistics,
)
from .qubits import (
    analyzer_observable,
    bell_relative_state,
    expectation,
    identity,
    rotation_y,
    sigma_z,
    tripartite_spin_state,
)

__all__ = [
    "GENERATOR_ID",
    "EXPERIMENTS",
    "MeasurementRecord",
    "ControlRecord",
    "ExperimentConfig",
    "JoinError",
    "JoinedStreams",
    "EmpiricalTable",
    "run_experiment",
    "classical_mixture_run",
    "delayed_join",
    "empirical_table",
    "chsh_statistic",
    "empirical_parity",
    "config_to_dict",
    "metadata_header",
    "write_stream_csv",
    "write_stream_jsonl",
]

GENERATOR_ID = "philox4x64/block-per-shot/v1"
EXPERIMENTS = ("hom", "chsh", "metrology")
MODES = ("quantum", "classical_mixture")

_OUTCOME_SIGN = {"d": -1, "u": +1}
_PARITY_ROWS = ("+1", "-1")


@dataclass(frozen=True)
class MeasurementRecord:
    """One system shot.  ``settings`` never includes the control basis."""

    shot_index: int
    experiment: str
    system_outcome: str
    settings: Mapping[str, float | int | str]


@dataclass(frozen=True)
class ControlRecord:
    """One control shot; ``basis_angle`` is None for a classical key bit."""

    shot_index: int
    control_outcome: int
    basis_angle: float | None


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameter set of a sampled run.

    ``control_basis_angle`` is the analyzer angle of the late control
    measurement (ignored in classical-mixture mode, where a preparation
    bit replaces the control particle).  ``settings`` is required for the
    chsh experiment, ``n``/``theta`` apply to metrology, ``statistics``
    to hom.
    """

    experiment: str
    shots: int
    seed: int
    phi: float = 0.0
    statistics: str = str(Statistics.BOSON.value)
    n: int = 1
    theta: float = 0.0
    settings: ChshSettings | None = None
    control_basis_angle: float = 0.0
    mode: str = "quantum"

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not isinstance(self.shots, int) or self.shots < 1:
            raise ValueError("shots must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in ("phi", "theta", "control_basis_angle"):
            if not math.isfinite(float(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        if self.experiment == "hom":
            Statistics(self.statistics)  # raises on unknown value
        if self.experiment == "chsh" and not isinstance(self.settings, ChshSettings):
            raise ValueError("chsh runs require analyzer settings")
        if self.experiment == "metrology" and not 1 <= self.n <= 20:
            raise ValueError(f"register size {self.n} outside supported range 1..20")


def _shot_uniforms(seed: int, shots: int) -> np.ndarray:
    """(shots, 4) uniforms in [0,1); row i is shot i's private substream."""
    raw = np.random.Philox(key=seed).random_raw(4 * shots).reshape(shots, 4)
    return (raw >> np.uint64(11)) * (2.0**-53)


def _cell_indices(
    uniforms: np.ndarray, distributions: np.ndarray, rows: np.ndarray | None = None
) -> np.ndarray:
    """Half-open cumulative-interval selection, vectorized over shots.

    ``distributions`` is (k, cells); ``rows`` picks the distribution per
    shot (all row 0 when None).  Cell c is selected when the scaled draw
    lands in [cum[c-1], cum[c]); a zero-width interval is unselectable.
    """
    if np.any(distributions < -1e-12):
        raise ArithmeticError("negative probability in sampling distribution")
    cumulative = np.cumsum(np.clip(distributions, 0.0, None), axis=1)
    totals = cumulative[:, -1]
    if np.any(np.abs(totals - 1.0) > 1e-9):
        raise ArithmeticError("sampling distribution does not sum to 1")
    if rows is None:
        rows = np.zeros(uniforms.shape[0], dtype=int)
    scaled = uniforms * totals[rows]
    indices = (scaled[:, None] >= cumulative[rows]).sum(axis=1)
    return np.minimum(indices, distributions.shape[1] - 1)


def _control_projectors(basis_angle: float) -> dict[int, np.ndarray]:
    """Projectors of the control analyzer rotated by ``basis_angle``.

    Angle 0 reads sigma_z (up/down); pi/2 reads sigma_x with +1 on right.
    """
    rotation = rotation_y(-basis_angle)
    observable = rotation.conj().T @ sigma_z() @ rotation
    observable = 0.5 * (observable + observable.conj().T)
    return {
        +1: 0.5 * (identity() + observable),
        -1: 0.5 * (identity() - observable),
    }


def _hom_joint_distribution(config: ExperimentConfig) -> tuple[list[tuple[str, int]], np.ndarray]:
    state = fock.beam_splitter_substitute(
        fock.hom_input_state(config.phi, Statistics(config.statistics))
    )
    cells = [(pattern, c) for pattern in HOM_OUTCOMES for c in (+1, -1)]
    probabilities = np.array(
        [
            fock.event_probability(
                state,
                pattern,
                control_outcome=c,
                control_angle=config.control_basis_angle,
            )
            for pattern, c in cells
        ]
    )
    return cells, probabilities[None, :]


def _chsh_pair_angles(settings: ChshSettings) -> list[tuple[int, int, float, float]]:
    return [
        (i, j, *settings.pair(i, j)) for i in (0, 1) for j in (0, 1)
    ]


def _chsh_joint_distributions(config: ExperimentConfig) -> tuple[list[tuple[str, int]], np.ndarray]:
    """(cells, (4 pairs, 8 cells)) joint distributions including the control."""
    state = tripartite_spin_state(config.phi)
    proj_c = _control_projectors(config.control_basis_angle)
    cells = [(outcome, c) for outcome in CHSH_OUTCOMES for c in (+1, -1)]
    table = np.zeros((4, len(cells)))
    for row, (_, _, theta_a, theta_b) in enumerate(_chsh_pair_angles(config.settings)):
        proj_a = {
            o: 0.5 * (identity() + o * analyzer_observable(theta_a)) for o in (1, -1)
        }
        proj_b = {
            o: 0.5 * (identity() + o * analyzer_observable(theta_b)) for o in (1, -1)
        }
        for col, (outcome, c) in enumerate(cells):
            a = _OUTCOME_SIGN[outcome[0]]
            b = _OUTCOME_SIGN[outcome[1]]
            table[row, col] = expectation(state, [proj_a[a], proj_b[b], proj_c[c]])
    return cells, table


def _metrology_joint_distribution(config: ExperimentConfig) -> tuple[list[tuple[str, int]], np.ndarray]:
    branches = parity_branch_statistics(
        MetrologySetup(config.n, config.theta, config.phi, config.control_basis_angle)
    )
    cells = [(parity, c) for parity in _PARITY_ROWS for c in (+1, -1)]
    probabilities = np.array(
        [
            branches[c][0] * 0.5 * (1.0 + int(parity) * branches[c][1])
            for parity, c in cells
        ]
    )
    return cells, probabilities[None, :]


def _hom_settings(config: ExperimentConfig) -> dict[str, float | str]:
    return {"phi": config.phi, "statistics": config.statistics}


def _metrology_settings(config: ExperimentConfig) -> dict[str, float | int]:
    return {"n": config.n, "theta": config.theta, "phi": config.phi}


def run_experiment(
    config: ExperimentConfig,
) -> tuple[tuple[MeasurementRecord, ...], tuple[ControlRecord, ...]]:
    """Sample a run, returning the system stream and the control stream.

    Each shot's joint (system, control) outcome is drawn from the exact
    joint distribution of the requested experiment; the two halves are
    then written to separate streams that share only the shot index.
    Identical (config, seed) reproduces identical streams.  A
    classical-mixture config is delegated to :func:`classical_mixture_run`.
    """
    if config.mode == "classical_mixture":
        return classical_mixture_run(config)
    uniforms = _shot_uniforms(config.seed, config.shots)

    if config.experiment == "hom":
        cells, dists = _hom_joint_distribution(config)
        chosen = _cell_indices(uniforms[:, 0], dists)
        base = _hom_settings(config)
        system = tuple(
            MeasurementRecord(i, "hom", cells[k][0], dict(base))
            for i, k in enumerate(chosen)
        )
    elif config.experiment == "chsh":
        cells, dists = _chsh_joint_distributions(config)
        pair_index = np.minimum((uniforms[:, 0] * 4).astype(int), 3)
        chosen = _cell_indices(uniforms[:, 1], dists, rows=pair_index)
        pair_angles = _chsh_pair_angles(config.settings)
        system = tuple(
            MeasurementRecord(
                i,
                "chsh",
                cells[k][0],
                {
                    "setting_a": pair_angles[p][0],
                    "setting_b": pair_angles[p][1],
                    "theta_a": pair_angles[p][2],
                    "theta_b": pair_angles[p][3],
                    "phi": config.phi,
                },
            )
            for i, (p, k) in enumerate(zip(pair_index, chosen))
        )
    else:
        cells, dists = _metrology_joint_distribution(config)
        chosen = _cell_indices(uniforms[:, 0], dists)
        base = _metrology_settings(config)
        system = tuple(
            MeasurementRecord(i, "metrology", cells[k][0], dict(base))
            for i, k in enumerate(chosen)
        )

    control = tuple(
        ControlRecord(i, cells[k][1], config.control_basis_angle)
        for i, k in enumerate(chosen)
    )
    return system, control


def _conditional_chsh_distributions(phi: float, settings: ChshSettings) -> np.ndarray:
    """(8, 4): outcome distributions for key (+1 first) x setting pair."""
    table = np.zeros((8, 4))
    for key_row, sign in enumerate((+1, -1)):
        branch = bell_relative_state(phi, sign)
        for pair_row, (_, _, theta_a, theta_b) in enumerate(
            _chsh_pair_angles(settings)
        ):
            proj_a = {
                o: 0.5 * (identity() + o * analyzer_observable(theta_a))
                for o in (1, -1)
            }
            proj_b = {
                o: 0.5 * (identity() + o * analyzer_observable(theta_b))
                for o in (1, -1)
            }
            for col, outcome in enumerate(CHSH_OUTCOMES):
                a = _OUTCOME_SIGN[outcome[0]]
                b = _OUTCOME_SIGN[outcome[1]]
                table[key_row * 4 + pair_row, col] = expectation(
                    branch, [proj_a[a], proj_b[b]]
                )
    return table


def classical_mixture_run(
    config: ExperimentConfig,
) -> tuple[tuple[MeasurementRecord, ...], tuple[ControlRecord, ...]]:
    """Sample the classical baseline: a random preparation instead of a control.

    Per shot a fair bit selects one of the two pure preparations (+1 picks
    the branch the erasing control readout +1 would herald: the plus pair
    state, or the register phase ``phi``).  System outcomes are sampled
    from that pure state; the bit stream is returned in place of the
    control stream, with ``basis_angle`` None since nothing was measured.
    """
    if config.mode != "classical_mixture":
        raise ValueError("classical_mixture_run requires mode='classical_mixture'")
    uniforms = _shot_uniforms(config.seed, config.shots)
    keys = np.where(uniforms[:, 0] < 0.5, 1, -1)
    key_row = (keys < 0).astype(int)  # 0 for +1, 1 for -1

    if config.experiment == "hom":
        table = hom_table(config.phi, Statistics(config.statistics))
        branch_dists = np.stack(
            [2.0 * table.column("C=up"), 2.0 * table.column("C=down")]
        )
        chosen = _cell_indices(uniforms[:, 1], branch_dists, rows=key_row)
        base = _hom_settings(config)
        system = tuple(
            MeasurementRecord(i, "hom", HOM_OUTCOMES[k], dict(base))
            for i, k in enumerate(chosen)
        )
    elif config.experiment == "chsh":
        dists = _conditional_chsh_distributions(config.phi, config.settings)
        pair_index = np.minimum((uniforms[:, 1] * 4).astype(int), 3)
        chosen = _cell_indices(uniforms[:, 2], dists, rows=key_row * 4 + pair_index)
        pair_angles = _chsh_pair_angles(config.settings)
        system = tuple(
            MeasurementRecord(
                i,
                "chsh",
                CHSH_OUTCOMES[k],
                {
                    "setting_a": pair_angles[p][0],
                    "setting_b": pair_angles[p][1],
                    "theta_a": pair_angles[p][2],
                    "theta_b": pair_angles[p][3],
                    "phi": config.phi,
                },
            )
            for i, (p, k) in enumerate(zip(pair_index, chosen))
        )
    else:
        branches = parity_branch_statistics(
            MetrologySetup(config.n, config.theta, config.phi, math.pi / 2)
        )
        branch_dists = np.stack(
            [
                [0.5 * (1.0 + branches[c][1]), 0.5 * (1.0 - branches[c][1])]
                for c in (+1, -1)
            ]
        )
        chosen = _cell_indices(uniforms[:, 1], branch_dists, rows=key_row)
        base = _metrology_settings(config)
        system = tuple(
            MeasurementRecord(i, "metrology", _PARITY_ROWS[k], dict(base))
            for i, k in enumerate(chosen)
        )

    key_stream = tuple(
        ControlRecord(i, int(k), None) for i, k in enumerate(keys)
    )
    return system, key_stream


class JoinError(ValueError):
    """Streams cannot be joined; carries the orphaned shot indices."""

    def __init__(
        self, orphaned_system: tuple[int, ...], orphaned_control: tuple[int, ...]
    ) -> None:
        self.orphaned_system = orphaned_system
        self.orphaned_control = orphaned_control
        super().__init__(
            "streams do not cover the same shots: "
            f"system-only {list(orphaned_system)}, control-only {list(orphaned_control)}"
        )


@dataclass(frozen=True)
class JoinedStreams:
    """System records partitioned by the control outcome they joined to."""

    by_outcome: Mapping[int, tuple[MeasurementRecord, ...]]
    records: tuple[MeasurementRecord, ...]

    def labeled(self, outcome: int) -> tuple[MeasurementRecord, ...]:
        return self.by_outcome[outcome]

    def partition(self) -> dict[int, str]:
        """shot_index -> column label, as :func:`empirical_table` expects."""
        mapping: dict[int, str] = {}
        for outcome, label in ((+1, "C=up"), (-1, "C=down")):
            for record in self.by_outcome[outcome]:
                mapping[record.shot_index] = label
        return mapping


def delayed_join(
    system_stream: Sequence[MeasurementRecord],
    control_stream: Sequence[ControlRecord],
) -> JoinedStreams:
    """Merge the two streams by shot index, after the fact.

    Every shot must appear exactly once in each stream; otherwise a
    :class:`JoinError` lists the orphaned indices.  The result keeps the
    unjoined view (all system records) alongside the two labeled sets.
    """
    system_by_index: dict[int, MeasurementRecord] = {}
    for record in system_stream:
        if record.shot_index in system_by_index:
            raise JoinError((record.shot_index,), ())
        system_by_index[record.shot_index] = record
    control_by_index: dict[int, ControlRecord] = {}
    for record in control_stream:
        if record.shot_index in control_by_index:
            raise JoinError((), (record.shot_index,))
        control_by_index[record.shot_index] = record

    system_only = tuple(sorted(set(system_by_index) - set(control_by_index)))
    control_only = tuple(sorted(set(control_by_index) - set(system_by_index)))
    if system_only or control_only:
        raise JoinError(system_only, control_only)

    ordered = tuple(system_by_index[i] for i in sorted(system_by_index))
    by_outcome: dict[int, list[MeasurementRecord]] = {+1: [], -1: []}
    for record in ordered:
        outcome = control_by_index[record.shot_index].control_outcome
        if outcome not in by_outcome:
            raise JoinError((), (record.shot_index,))
        by_outcome[outcome].append(record)
    return JoinedStreams(
        by_outcome={k: tuple(v) for k, v in by_outcome.items()}, records=ordered
    )


_ROWS_BY_EXPERIMENT = {
    "hom": HOM_OUTCOMES,
    "chsh": CHSH_OUTCOMES,
    "metrology": _PARITY_ROWS,
}


@dataclass(frozen=True)
class EmpiricalTable(ProbabilityTable):
    """Relative frequencies with per-cell binomial errors and zero-count flags."""

    counts: np.ndarray
    total: int
    standard_errors: np.ndarray
    flagged: np.ndarray

    def __post_init__(self) -> None:
        super().__post_init__()
        for name in ("counts", "standard_errors", "flagged"):
            array = np.asarray(getattr(self, name)).copy()
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    def summary(self) -> str:
        width = max(len(label) for label in self.row_labels + ("outcome",)) + 2
        header = "outcome".ljust(width) + "".join(
            c.rjust(22) for c in self.column_labels
        )
        lines = [header, f"(total shots: {self.total})"]
        for r, label in enumerate(self.row_labels):
            cells = []
            for c in range(len(self.column_labels)):
                text = f"{self.values[r, c]:.4f} +- {self.standard_errors[r, c]:.4f}"
                if self.flagged[r, c]:
                    text += " *"
                cells.append(text.rjust(22))
            lines.append(label.ljust(width) + "".join(cells))
        lines.append("(* = empty cell, no events observed)")
        return "\n".join(lines) + "\n"


def empirical_table(
    records: Sequence[MeasurementRecord],
    partition: Mapping[int, str] | None = None,
) -> EmpiricalTable:
    """Relative outcome frequencies of a record set.

    ``partition`` maps shot indices to column labels (as produced by
    :meth:`JoinedStreams.partition`); ``None`` puts everything into a
    single ``C=?`` column.  Frequencies are joint: cell count over the
    total record count, so conditioned columns keep their ensemble
    weight.  Empty cells are flagged rather than treated as errors.
    """
    if len(records) == 0:
        raise ValueError("cannot tabulate an empty record set")
    experiments = {record.experiment for record in records}
    if len(experiments) != 1:
        raise ValueError(f"records mix experiments: {sorted(experiments)}")
    experiment = experiments.pop()
    rows = _ROWS_BY_EXPERIMENT[experiment]

    if partition is None:
        columns: tuple[str, ...] = ("C=?",)
        label_of = {record.shot_index: "C=?" for record in records}
    else:
        label_of = dict(partition)
        seen = []
        for record in records:
            if record.shot_index not in label_of:
                raise ValueError(f"shot {record.shot_index} missing from partition")
            if label_of[record.shot_index] not in seen:
                seen.append(label_of[record.shot_index])
        preferred = [c for c in ("C=up", "C=down") if c in seen]
        columns = tuple(preferred + sorted(set(seen) - set(preferred)))

    counts = np.zeros((len(rows), len(columns)), dtype=int)
    for record in records:
        if record.system_outcome not in rows:
            raise ValueError(
                f"unknown outcome {record.system_outcome!r} for {experiment}"
            )
        counts[
            rows.index(record.system_outcome), columns.index(label_of[record.shot_index])
        ] += 1
    total = len(records)
    values = counts / total
    standard_errors = np.sqrt(values * (1.0 - values) / total)
    return EmpiricalTable(
        row_labels=tuple(rows),
        column_labels=columns,
        values=values,
        counts=counts,
        total=total,
        standard_errors=standard_errors,
        flagged=counts == 0,
    )


def chsh_statistic(records: Sequence[MeasurementRecord]) -> tuple[float, float]:
    """Empirical CHSH combination E00 + E01 + E10 - E11 and its standard error.

    ``records`` should be one labeled set from :func:`delayed_join` (or a
    key-joined classical set).  Per setting pair the correlator variance
    is estimated as (1 - E^2)/count and propagated in quadrature.  The
    value is signed; compare its magnitude against bounds.
    """
    if len(records) == 0:
        raise ValueError("cannot estimate CHSH from an empty record set")
    sums: dict[tuple[int, int], float] = {}
    counts: dict[tuple[int, int], int] = {}
    for record in records:
        if record.experiment != "chsh":
            raise ValueError("chsh_statistic needs chsh records")
        pair = (int(record.settings["setting_a"]), int(record.settings["setting_b"]))
        product = (
            _OUTCOME_SIGN[record.system_outcome[0]]
            * _OUTCOME_SIGN[record.system_outcome[1]]
        )
        sums[pair] = sums.get(pair, 0.0) + product
        counts[pair] = counts.get(pair, 0) + 1
    value = 0.0
    variance = 0.0
    for pair, sign in (((0, 0), 1), ((0, 1), 1), ((1, 0), 1), ((1, 1), -1)):
        if counts.get(pair, 0) == 0:
            raise ValueError(f"no records for setting pair {pair}")
        correlator = sums[pair] / counts[pair]
        value += sign * correlator
        variance += (1.0 - correlator**2) / counts[pair]
    return value, math.sqrt(variance)


def empirical_parity(records: Sequence[MeasurementRecord]) -> tuple[float, float]:
    """Mean register parity of a record set and its standard error."""
    if len(records) == 0:
        raise ValueError("cannot estimate parity from an empty record set")
    outcomes = np.array([int(record.system_outcome) for record in records], dtype=float)
    mean = float(outcomes.mean())
    if len(outcomes) == 1:
        return mean, 1.0
    return mean, float(outcomes.std(ddof=1) / math.sqrt(len(outcomes)))


def config_to_dict(config: ExperimentConfig) -> dict:
    """JSON-ready view of a config; sufficient to rebuild it exactly."""
    settings = None
    if config.settings is not None:
        settings = [
            config.settings.theta_a0,
            config.settings.theta_a1,
            config.settings.theta_b0,
            config.settings.theta_b1,
        ]
    return {
        "experiment": config.experiment,
        "shots": config.shots,
        "seed": config.seed,
        "phi": config.phi,
        "statistics": config.statistics,
        "n": config.n,
        "theta": config.theta,
        "settings": settings,
        "control_basis_angle": config.control_basis_angle,
        "mode": config.mode,
    }


def metadata_header(config: ExperimentConfig) -> str:
    """One-line reproducibility header: config, generator id, code version."""
    payload = {
        "config": config_to_dict(config),
        "generator": GENERATOR_ID,
        "version": __version__,
    }
    return "# " + json.dumps(payload, sort_keys=True)


def _format_field(value: float | int | str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_stream_csv(
    stream: IO[str],
    records: Sequence[MeasurementRecord] | Sequence[ControlRecord],
    config: ExperimentConfig,
) -> None:
    """CSV serialization with the metadata header; byte-deterministic."""
    stream.write(metadata_header(config) + "\n")
    if len(records) == 0:
        return
    first = records[0]
    if isinstance(first, MeasurementRecord):
        keys = sorted(first.settings)
        stream.write("shot_index,experiment,outcome," + ",".join(keys) + "\n")
        for record in records:
            if sorted(record.settings) != keys:
                raise ValueError("records disagree on setting fields")
            fields = [str(record.shot_index), record.experiment, record.system_outcome]
            fields += [_format_field(record.settings[k]) for k in keys]
            stream.write(",".join(fields) + "\n")
    else:
        stream.write("shot_index,control_outcome,basis_angle\n")
        for record in records:
            stream.write(
                f"{record.shot_index},{record.control_outcome:+d},"
                f"{_format_field(record.basis_angle)}\n"
            )


def write_stream_jsonl(
    stream: IO[str],
    records: Sequence[MeasurementRecord] | Sequence[ControlRecord],
    config: ExperimentConfig,
) -> None:
    """Newline-delimited records, metadata object first; byte-deterministic."""
    payload = {
        "metadata": {
            "config": config_to_dict(config),
            "generator": GENERATOR_ID,
            "version": __version__,
        }
    }
    stream.write(json.dumps(payload, sort_keys=True) + "\n")
    for record in records:
        if isinstance(record, MeasurementRecord):
            document = {
                "shot_index": record.shot_index,
                "experiment": record.experiment,
                "outcome": record.system_outcome,
                "settings": dict(record.settings),
            }
        else:
            document = {
                "shot_index": record.shot_index,
                "control_outcome": record.control_outcome,
                "basis_angle": record.basis_angle,
            }
        stream.write(json.dumps(document, sort_keys=True) + "\n")
