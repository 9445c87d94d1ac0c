"""Self-contained invariant suite behind ``qeraser verify``.

Every physical and structural invariant the library promises is encoded
here as a named check with its own local reference formulas, so a single
command can audit an installation end to end without the test suite.
Checks raise AssertionError with a diagnostic; :func:`run_all` collects
the results.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fock, protocols, qubits, sampler
from .fock import Statistics
from .protocols import ChshSettings, MetrologySetup
from .sampler import ExperimentConfig

TWO_PI = 2.0 * math.pi
_PHI_GRID = np.linspace(0.0, TWO_PI, 16, endpoint=False)


def _closed_form_hom_column(phi_prime: float) -> np.ndarray:
    """(AB, AA, BB) joint probabilities conditioned on one control outcome."""
    return np.array(
        [
            0.5 * math.sin(phi_prime / 2.0) ** 2,
            0.25 * math.cos(phi_prime / 2.0) ** 2,
            0.25 * math.cos(phi_prime / 2.0) ** 2,
        ]
    )


def _check_state_constructors() -> None:
    for phi in _PHI_GRID:
        for state in (
            qubits.ghz_state(3, phi),
            qubits.bell_relative_state(phi, +1),
            qubits.bell_relative_state(phi, -1),
            qubits.tripartite_spin_state(phi),
        ):
            norm = np.linalg.norm(state.amplitudes)
            assert abs(norm - 1.0) < 1e-12, f"norm {norm} at phi={phi}"


def _check_relative_state_identity() -> None:
    # the three-spin state splits over the control z basis into the two
    # pair branches with equal weight
    up = np.array([1.0, 0.0], dtype=complex)
    down = np.array([0.0, 1.0], dtype=complex)
    for phi in _PHI_GRID:
        lhs = qubits.tripartite_spin_state(phi).amplitudes
        rhs = (
            np.kron(qubits.bell_relative_state(phi, +1).amplitudes, up)
            + np.kron(qubits.bell_relative_state(phi, -1).amplitudes, down)
        ) / math.sqrt(2.0)
        residual = np.linalg.norm(lhs - rhs)
        assert residual < 1e-12, f"residual {residual} at phi={phi}"


def _check_unitary_preserves_norm() -> None:
    rng = np.random.default_rng(11)
    for _ in range(20):
        num_qubits = int(rng.integers(1, 5))
        raw = rng.normal(size=(2**num_qubits,)) + 1j * rng.normal(size=(2**num_qubits,))
        state = qubits.StateVector(num_qubits, raw / np.linalg.norm(raw))
        matrix, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        index = int(rng.integers(0, num_qubits))
        rotated = qubits.apply_single_qubit(state, index, matrix)
        norm = np.linalg.norm(rotated.amplitudes)
        assert abs(norm - 1.0) < 1e-12, f"norm {norm} after unitary on {index}"


def _check_measurement_completeness() -> None:
    rng = np.random.default_rng(12)
    bases = [qubits.sigma_x(), qubits.sigma_y(), qubits.sigma_z()]
    for _ in range(20):
        num_qubits = int(rng.integers(1, 4))
        raw = rng.normal(size=(2**num_qubits,)) + 1j * rng.normal(size=(2**num_qubits,))
        state = qubits.StateVector(num_qubits, raw / np.linalg.norm(raw))
        index = int(rng.integers(0, num_qubits))
        basis = bases[int(rng.integers(0, 3))]
        p_plus, cond_plus = qubits.project_qubit(state, index, basis, +1)
        p_minus, cond_minus = qubits.project_qubit(state, index, basis, -1)
        assert abs(p_plus + p_minus - 1.0) < 1e-12, "outcome probabilities must sum to 1"
        for probability, conditional in ((p_plus, cond_plus), (p_minus, cond_minus)):
            if conditional is not None and probability > 1e-14:
                norm = np.linalg.norm(conditional.amplitudes)
                assert abs(norm - 1.0) < 1e-12, "conditional state must be normalized"


def _check_partial_trace_density() -> None:
    for phi in _PHI_GRID:
        reduced = qubits.partial_trace(qubits.tripartite_spin_state(phi), (0, 1))
        trace = np.trace(reduced.matrix)
        assert abs(trace - 1.0) < 1e-12, f"trace {trace}"
        eigenvalues = np.linalg.eigvalsh(reduced.matrix)
        assert eigenvalues.min() > -1e-10, f"negative eigenvalue {eigenvalues.min()}"


def _check_splitter_preserves_norm() -> None:
    for statistics in Statistics:
        for phi in _PHI_GRID:
            state = fock.hom_input_state(phi, statistics)
            out = fock.beam_splitter_substitute(state)
            assert abs(state.norm_squared() - 1.0) < 1e-12
            assert (
                abs(out.norm_squared() - state.norm_squared()) < 1e-12
            ), f"splitter changed the norm for {statistics}"


def _check_hom_closed_form() -> None:
    for statistics, shift in ((Statistics.BOSON, 0.0), (Statistics.FERMION, math.pi)):
        for phi in _PHI_GRID:
            table = protocols.hom_table(phi, statistics)
            expected_up = _closed_form_hom_column(phi + shift)
            expected_down = _closed_form_hom_column(phi + shift + math.pi)
            assert np.abs(table.column("C=up") - expected_up).max() < 1e-12
            assert np.abs(table.column("C=down") - expected_down).max() < 1e-12


def _check_hom_distinguishable_flat() -> None:
    expected = np.array([0.25, 0.125, 0.125])
    for phi in _PHI_GRID:
        table = protocols.hom_table(phi, Statistics.DISTINGUISHABLE)
        assert np.abs(table.column("C=up") - expected).max() < 1e-12
        assert np.abs(table.column("C=down") - expected).max() < 1e-12


def _check_hom_marginal_flat() -> None:
    expected = np.array([0.5, 0.25, 0.25])
    for statistics in Statistics:
        for phi in _PHI_GRID:
            table = protocols.hom_table(phi, statistics)
            table.validate_conditional()
            assert (
                np.abs(table.column("C=?") - expected).max() < 1e-12
            ), f"marginal not flat for {statistics} at phi={phi}"


def _check_chsh_closed_form() -> None:
    rng = np.random.default_rng(13)
    for _ in range(16):
        theta_a, theta_b, phi = rng.uniform(0.0, TWO_PI, size=3)
        table = protocols.chsh_table(theta_a, theta_b, phi)
        table.validate_conditional()
        phi_prime = theta_a - theta_b + phi
        for row in protocols.CHSH_OUTCOMES:
            a = +1 if row[0] == "u" else -1
            b = +1 if row[1] == "u" else -1
            plus = 0.125 * (1.0 + a * b * math.cos(phi_prime))
            minus = 0.125 * (1.0 - a * b * math.cos(phi_prime))
            assert abs(table.value(row, "C=up") - plus) < 1e-12
            assert abs(table.value(row, "C=down") - minus) < 1e-12
            assert abs(table.value(row, "C=?") - 0.25) < 1e-12


def _check_chsh_correlator_closed_form() -> None:
    rng = np.random.default_rng(14)
    for _ in range(64):
        theta_a, theta_b, phi = rng.uniform(0.0, TWO_PI, size=3)
        for condition, sign in (("up", 1.0), ("down", -1.0)):
            value = protocols.conditional_correlator(theta_a, theta_b, phi, condition)
            expected = sign * math.cos(theta_a - theta_b + phi)
            assert abs(value - expected) < 1e-12, (
                f"correlator {value} vs {expected} at ({theta_a}, {theta_b}, {phi})"
            )


def _check_chsh_unconditioned_zero() -> None:
    rng = np.random.default_rng(15)
    for _ in range(50):
        settings = ChshSettings(*rng.uniform(0.0, TWO_PI, size=4))
        phi = float(rng.uniform(0.0, TWO_PI))
        value = protocols.chsh_value(settings, phi, "?")
        assert abs(value) < 1e-12, f"unjoined CHSH value {value}"


def _check_tsirelson_bound() -> None:
    rng = np.random.default_rng(16)
    bound = protocols.TSIRELSON_BOUND + 1e-9
    for _ in range(10_000):
        settings = ChshSettings(*rng.uniform(0.0, TWO_PI, size=4))
        phi = float(rng.uniform(0.0, TWO_PI))
        for condition in ("up", "down"):
            value = protocols.chsh_value(settings, phi, condition)
            assert value <= bound, f"CHSH value {value} beyond the quantum bound"


def _check_chsh_optimum() -> None:
    for phi in (0.0, 0.9):
        for condition in ("up", "down"):
            settings = protocols.optimal_chsh_angles(phi, condition)
            value = protocols.chsh_value(settings, phi, condition)
            assert (
                abs(value - protocols.TSIRELSON_BOUND) < 1e-9
            ), f"optimizer reached {value} at phi={phi}, {condition}"


def _check_ghz_decomposition() -> None:
    for n in range(1, 9):
        for phi in (0.0, math.pi / 3, 1.234):
            residual = protocols.ghz_decomposition_residual(n, phi)
            assert residual < 1e-12, f"residual {residual} at n={n}, phi={phi}"


def _check_parity_fringe() -> None:
    for n in range(1, 7):
        for theta in np.linspace(0.0, TWO_PI, 16, endpoint=False):
            for phi in (0.0, 1.1):
                setup = MetrologySetup(n, float(theta), phi, math.pi / 2)
                for outcome, branch_sign in ((+1, 1.0), (-1, -1.0)):
                    value = protocols.parity_expectation(setup, outcome)
                    expected = branch_sign * (-1.0) ** n * math.cos(n * theta + phi)
                    assert abs(value - expected) < 1e-10, (
                        f"fringe {value} vs {expected} at n={n}, theta={theta}"
                    )


def _check_parity_route_relation() -> None:
    # closing the interferometer with the collective y rotation and reading
    # z products equals the plain x product up to the sign (-1)^n
    rng = np.random.default_rng(17)
    for _ in range(12):
        num_qubits = int(rng.integers(1, 5))
        raw = rng.normal(size=(2**num_qubits,)) + 1j * rng.normal(size=(2**num_qubits,))
        state = qubits.StateVector(num_qubits, raw / np.linalg.norm(raw))
        register = tuple(range(num_qubits))
        rotated = protocols.parity_via_rotation(state, register)
        direct = protocols.parity_via_x_product(state, register)
        assert abs(rotated - (-1.0) ** num_qubits * direct) < 1e-12


def _check_parity_unconditioned_zero() -> None:
    for n in (1, 2, 3):
        for control_angle in (0.0, 0.3, math.pi / 2):
            for theta in (0.0, 0.7):
                setup = MetrologySetup(n, theta, 0.4, control_angle)
                value = protocols.parity_expectation(setup, None)
                assert abs(value) < 1e-12, f"unconditioned parity {value}"


def _check_parity_which_way_zero() -> None:
    for n in (1, 2, 4):
        for theta in np.linspace(0.0, TWO_PI, 8, endpoint=False):
            setup = MetrologySetup(n, float(theta), 0.0, 0.0)
            for outcome in (+1, -1):
                value = protocols.parity_expectation(setup, outcome)
                assert abs(value) < 1e-12, f"which-way parity {value}"


def _check_control_marginal_half() -> None:
    for n in (1, 2, 3):
        for control_angle in (0.0, 0.4, math.pi / 2, 2.2):
            branches = protocols.parity_branch_statistics(
                MetrologySetup(n, 0.3, 0.7, control_angle)
            )
            for outcome in (+1, -1):
                assert abs(branches[outcome][0] - 0.5) < 1e-12, (
                    f"control marginal {branches[outcome][0]} at angle {control_angle}"
                )


def _check_phase_sensitivity() -> None:
    for n in range(1, 11):
        theta = 0.4 / n  # keeps sin(n theta + phi) well away from zero
        setup = MetrologySetup(n, theta, 0.3, math.pi / 2)
        sensitivity = protocols.phase_sensitivity(setup)
        assert abs(sensitivity * n**2 - 1.0) < 1e-9, (
            f"sensitivity {sensitivity} misses 1/n^2 at n={n}"
        )
    diverging = MetrologySetup(2, 0.0, 0.0, math.pi / 2)
    assert math.isinf(protocols.phase_sensitivity(diverging))


def _check_zero_discord_marginal() -> None:
    expected = np.zeros((4, 4), dtype=complex)
    expected[1, 1] = 0.5  # |up down><up down|
    expected[2, 2] = 0.5  # |down up><down up|
    for phi in _PHI_GRID:
        reduced = qubits.partial_trace(qubits.tripartite_spin_state(phi), (0, 1))
        assert np.abs(reduced.matrix - expected).max() < 1e-12, (
            f"pair marginal depends on phi={phi}"
        )


def _check_local_unitary_equivalence() -> None:
    # one fixed local rotation maps the three-spin state onto the GHZ form
    # for every phi, so the two presentations are the same entanglement class
    transform = np.kron(
        np.kron(qubits.identity(), qubits.sigma_x()), qubits.hadamard()
    )
    for phi in _PHI_GRID:
        mapped = transform @ qubits.tripartite_spin_state(phi).amplitudes
        mapped_state = qubits.StateVector(3, mapped)
        target = qubits.ghz_state(3, phi)
        assert qubits.states_equal(
            qubits.fix_global_phase(mapped_state), qubits.fix_global_phase(target)
        ), f"local map misses GHZ form at phi={phi}"


def _check_sampler_determinism() -> None:
    config = ExperimentConfig(experiment="hom", shots=64, seed=987, phi=0.4)
    outputs = []
    for _ in range(2):
        system, control = sampler.run_experiment(config)
        sys_csv, ctl_csv, sys_jsonl = io.StringIO(), io.StringIO(), io.StringIO()
        sampler.write_stream_csv(sys_csv, system, config)
        sampler.write_stream_csv(ctl_csv, control, config)
        sampler.write_stream_jsonl(sys_jsonl, system, config)
        outputs.append((sys_csv.getvalue(), ctl_csv.getvalue(), sys_jsonl.getvalue()))
    assert outputs[0] == outputs[1], "identical config+seed must give identical bytes"


def _check_sampler_substream_stability() -> None:
    short = sampler.run_experiment(ExperimentConfig(experiment="hom", shots=50, seed=5))
    long = sampler.run_experiment(ExperimentConfig(experiment="hom", shots=200, seed=5))
    assert short[0] == long[0][:50], "per-shot substreams must not depend on shot count"
    assert short[1] == long[1][:50]


def _check_join_completeness() -> None:
    config = ExperimentConfig(experiment="chsh", shots=40, seed=3,
                              settings=ChshSettings(0.0, 1.0, 2.0, 3.0))
    system, control = sampler.run_experiment(config)
    joined = sampler.delayed_join(system, control)
    sizes = len(joined.labeled(+1)) + len(joined.labeled(-1))
    assert sizes == 40, "labeled sets must partition the shots"
    assert len(joined.partition()) == 40
    try:
        sampler.delayed_join(system[:-1], control)
    except sampler.JoinError as error:
        assert error.orphaned_control == (39,)
    else:
        raise AssertionError("orphaned control record must raise a join error")


def _check_empirical_table() -> None:
    records = [
        sampler.MeasurementRecord(i, "hom", outcome, {"phi": 0.0, "statistics": "boson"})
        for i, outcome in enumerate(("AB", "AB", "AA", "BB"))
    ]
    table = sampler.empirical_table(records)
    assert np.allclose(table.column("C=?"), [0.5, 0.25, 0.25])
    assert not table.flagged.any()
    single = sampler.empirical_table(records[:1])
    assert single.value("AB", "C=?") == 1.0
    assert int(single.flagged.sum()) == 2


def _check_no_signaling_analytic() -> None:
    # the unjoined system distribution cannot depend on the control basis
    for experiment in ("hom", "chsh", "metrology"):
        distributions = []
        for control_angle in (0.0, 0.9, math.pi / 2):
            config = ExperimentConfig(
                experiment=experiment,
                shots=1,
                seed=0,
                phi=0.6,
                n=3,
                theta=0.2,
                settings=ChshSettings(0.1, 0.9, 0.4, 1.8),
                control_basis_angle=control_angle,
            )
            if experiment == "hom":
                _, dists = sampler._hom_joint_distribution(config)
            elif experiment == "chsh":
                _, dists = sampler._chsh_joint_distributions(config)
            else:
                _, dists = sampler._metrology_joint_distribution(config)
            # sum over the control outcome: even/odd cells pair up
            marginal = dists[..., 0::2] + dists[..., 1::2]
            distributions.append(marginal)
        for other in distributions[1:]:
            assert np.abs(other - distributions[0]).max() < 1e-12, (
                f"{experiment}: system marginal leaks the control basis choice"
            )


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


CHECKS: tuple[tuple[str, Callable[[], None]], ...] = (
    ("state-constructors-normalized", _check_state_constructors),
    ("relative-state-identity", _check_relative_state_identity),
    ("unitary-preserves-norm", _check_unitary_preserves_norm),
    ("measurement-completeness", _check_measurement_completeness),
    ("partial-trace-density", _check_partial_trace_density),
    ("splitter-preserves-norm", _check_splitter_preserves_norm),
    ("hom-closed-form", _check_hom_closed_form),
    ("hom-distinguishable-flat", _check_hom_distinguishable_flat),
    ("hom-marginal-flat", _check_hom_marginal_flat),
    ("chsh-closed-form", _check_chsh_closed_form),
    ("chsh-correlator-closed-form", _check_chsh_correlator_closed_form),
    ("chsh-unconditioned-zero", _check_chsh_unconditioned_zero),
    ("tsirelson-bound", _check_tsirelson_bound),
    ("chsh-optimum", _check_chsh_optimum),
    ("ghz-decomposition", _check_ghz_decomposition),
    ("parity-fringe", _check_parity_fringe),
    ("parity-route-relation", _check_parity_route_relation),
    ("parity-unconditioned-zero", _check_parity_unconditioned_zero),
    ("parity-which-way-zero", _check_parity_which_way_zero),
    ("control-marginal-half", _check_control_marginal_half),
    ("phase-sensitivity-heisenberg", _check_phase_sensitivity),
    ("zero-discord-marginal", _check_zero_discord_marginal),
    ("local-unitary-equivalence", _check_local_unitary_equivalence),
    ("sampler-determinism", _check_sampler_determinism),
    ("sampler-substream-stability", _check_sampler_substream_stability),
    ("join-completeness", _check_join_completeness),
    ("empirical-table", _check_empirical_table),
    ("no-signaling-analytic", _check_no_signaling_analytic),
)


def run_all() -> list[CheckResult]:
    results = []
    for name, check in CHECKS:
        try:
            check()
        except AssertionError as error:
            results.append(CheckResult(name, False, str(error)))
        except Exception as error:  # noqa: BLE001 - surfaced as a failed check
            results.append(CheckResult(name, False, f"{type(error).__name__}: {error}"))
        else:
            results.append(CheckResult(name, True, ""))
    return results
