"""
Tests for the statevector Grover search and its trace oracle
"""
import math

import numpy as np
import pytest

from config import Config
from conftest import SORTED
from errors import DecodeFailure, DimensionMismatch, EncodingOverflow, NormalizationError, ParseError, TooLarge
from models import RegisterLayout, SearchMode
import grover_engine
from grover_engine import (
    GroverEngine, StateVector, TraceOracle, basis_index, basis_state, diffusion, neighbour_states,
    optimal_iterations, prepare_initial_superposition,
)

EIGHT_THETA = math.asin(math.sqrt(1 / 8))


@pytest.fixture
def grover8(grover8_system) -> GroverEngine:
    return GroverEngine(grover8_system, depth=1, states=grover8_system.initial_states)


def test_initial_superposition():
    layout = RegisterLayout(n=2, p=1)
    state = prepare_initial_superposition([0, 1, 2, 3], layout)
    tensor = state.tensor()
    assert tensor.shape == (4, 2, 2)
    assert np.allclose(tensor[:, 0, 0], 1 / math.sqrt(8))
    assert np.allclose(tensor[:, 1, 0], -1 / math.sqrt(8))
    assert np.count_nonzero(tensor[:, :, 1]) == 0
    assert state.norm == pytest.approx(1.0)


def test_superposition_over_permutations():
    layout = RegisterLayout(n=7, p=0)
    state = prepare_initial_superposition(range(120), layout)
    probabilities = state.x_probabilities()
    assert np.allclose(probabilities[:120], 1 / 120)
    assert np.count_nonzero(probabilities[120:]) == 0
    assert state.norm == pytest.approx(1.0)


def test_superposition_errors():
    layout = RegisterLayout(n=2, p=0)
    with pytest.raises(EncodingOverflow):
        prepare_initial_superposition([4], layout)
    with pytest.raises(ValueError):
        prepare_initial_superposition([], layout)
    with pytest.raises(TooLarge):
        prepare_initial_superposition([0], RegisterLayout(n=30, p=0))


def test_statevector_checks():
    layout = RegisterLayout(n=1, p=0)
    with pytest.raises(DimensionMismatch):
        StateVector(np.ones(8) / math.sqrt(8), layout)
    with pytest.raises(NormalizationError):
        StateVector(np.ones(4), layout)
    assert StateVector(np.full(4, 0.5), layout).norm == pytest.approx(1.0)


def test_layout():
    layout = RegisterLayout(n=3, p=4)
    assert layout.m == 8
    assert layout.dimension == 256
    assert layout.shape == (8, 2, 16)
    assert basis_index(5, 1, 3, layout) == (5 << 5) | (1 << 4) | 3


@pytest.mark.parametrize("initial, depth, f, g", [
    ("abced", 1, 1, 10),
    (SORTED, 1, 1, 0),
    ("edcba", 3, 0, (1 << 8) | (2 << 4) | 3),
])
def test_sort_oracle_values(sort_system, initial, depth, f, g):
    oracle = TraceOracle(sort_system, depth, [initial])
    assert oracle.rule_width == 4
    assert oracle.classical_f(initial) == f
    assert oracle.classical_g(initial) == g
    assert oracle.classical_g(0) == g


def test_unpack(sort_system):
    oracle = TraceOracle(sort_system, 3, ["edcba", "abced"])
    assert oracle.unpack(oracle.classical_g("edcba")) == (1, 2, 3)
    assert oracle.unpack(oracle.classical_g("abced")) == (10,)


def test_oracle_layout(sort_system, grover8):
    assert (grover8.layout.n, grover8.layout.p, grover8.layout.m) == (3, 1, 5)
    oracle = TraceOracle(sort_system, 2, ["edcba", "abced", SORTED])
    assert (oracle.layout.n, oracle.layout.p) == (2, 8)
    assert oracle.states == (SORTED, "abced", "edcba")


def test_oracle_lookups(grover8):
    oracle = grover8.oracle
    assert oracle.solutions == [7]
    assert oracle.decode(7) == "bbb"
    assert oracle.encode("bbb") == 7
    with pytest.raises(DecodeFailure):
        oracle.decode(8)
    with pytest.raises(EncodingOverflow):
        oracle.encode("abab")


def test_oracle_depth_must_be_positive(grover8_system):
    with pytest.raises(ValueError):
        TraceOracle(grover8_system, 0)


def test_oracle_without_marks_or_firings_is_identity(grover8_system):
    oracle = TraceOracle(grover8_system, 1, ["aaa", "aab", "abb"])
    state = prepare_initial_superposition(range(3), oracle.layout)
    assert np.array_equal(oracle.apply(state).amplitudes, state.amplitudes)


def test_oracle_flips_marked_amplitude(grover8):
    oracle = grover8.oracle
    state = grover8.initial_state()
    flipped = oracle.uncompute(oracle.apply(state)).tensor()
    expected = state.tensor().copy()
    expected[7] *= -1
    assert np.allclose(flipped, expected)


def test_oracle_writes_trace(sort_system):
    oracle = TraceOracle(sort_system, 3, ["edcba"])
    g = oracle.classical_g("edcba")
    state = oracle.apply(basis_state(0, oracle.layout))
    assert np.flatnonzero(state.amplitudes).tolist() == [
        basis_index(0, 0, g, oracle.layout), basis_index(0, 1, g, oracle.layout),
    ]
    assert np.array_equal(oracle.uncompute(state).amplitudes, basis_state(0, oracle.layout).amplitudes)


def test_oracle_layout_mismatch(grover8):
    with pytest.raises(DimensionMismatch):
        grover8.oracle.apply(basis_state(0, RegisterLayout(n=2, p=1)))


def test_diffusion_single_mark():
    layout = RegisterLayout(n=2, p=0)
    state = prepare_initial_superposition(range(4), layout)
    tensor = state.tensor().copy()
    tensor[3] *= -1
    result = diffusion(state.evolve(tensor.reshape(-1)))
    assert np.allclose(result.x_probabilities(), [0, 0, 0, 1])


def test_diffusion_of_a_basis_vector():
    layout = RegisterLayout(n=2, p=0)
    amplitudes = np.zeros(layout.dimension, dtype=np.complex128)
    amplitudes[basis_index(0, 0, 0, layout)] = 1.0
    result = diffusion(StateVector(amplitudes, layout)).tensor()
    assert np.allclose(result[:, 0, 0], [-0.5, 0.5, 0.5, 0.5])
    assert np.allclose(result[:, 1, 0], 0.0)


def test_diffusion_restricted_to_support():
    layout = RegisterLayout(n=2, p=0)
    tensor = np.zeros(layout.shape, dtype=np.complex128)
    tensor[:, 0, 0] = [0.5, 0.5, -0.5, 0.5]
    state = StateVector(tensor.reshape(-1), layout)
    result = diffusion(state, support=[0, 1, 2]).tensor()
    mean = 0.5 / 3
    assert np.allclose(result[:3, 0, 0], [2 * mean - 0.5, 2 * mean - 0.5, 2 * mean + 0.5])
    assert result[3, 0, 0] == 0.5


def test_diffusion_is_an_involution():
    layout = RegisterLayout(n=2, p=1)
    amplitudes = np.random.default_rng(11).normal(size=16) + 0j
    state = StateVector(amplitudes / np.linalg.norm(amplitudes), layout)
    for mode in SearchMode:
        twice = diffusion(diffusion(state, mode), mode)
        assert np.allclose(twice.amplitudes, state.amplitudes)


@pytest.mark.parametrize("n_states, solutions, expected", [(8, 1, 2), (4, 1, 1), (1, 1, 0), (1024, 1, 25)])
def test_optimal_iterations(n_states, solutions, expected):
    assert optimal_iterations(n_states, solutions) == expected


def test_optimal_iterations_needs_solutions():
    with pytest.raises(ValueError):
        optimal_iterations(8, 0)


def test_search_eight_states(grover8):
    result = grover8.search(SearchMode.UNCOMPUTE, "auto", seed=0, shots=1000)

    assert result.summary.iterations == 2
    assert result.summary.success_probability == pytest.approx(0.9453125, abs=1e-9)
    assert result.records[0].success_probability == pytest.approx(1 / 8)
    assert [record.oracle_calls for record in result.records] == [0, 1, 2]
    assert [record.uncompute_calls for record in result.records] == [0, 1, 2]
    assert sum(result.summary.counts.values()) == 1000
    assert result.summary.counts["bbb"] > 900
    assert (result.summary.solutions, result.summary.search_space) == (1, 8)


def test_success_follows_closed_form(grover8):
    result = grover8.search(SearchMode.UNCOMPUTE, 6, shots=0)
    for record in result.records:
        expected = math.sin((2 * record.iteration + 1) * EIGHT_THETA) ** 2
        assert record.success_probability == pytest.approx(expected, abs=1e-9)
        assert record.norm == pytest.approx(1.0, abs=1e-12)
    rising = [record.success_probability for record in result.records[:3]]
    assert rising == sorted(rising)


def test_four_states_one_iteration(grover4_system):
    engine = GroverEngine(grover4_system, 1)
    result = engine.search(shots=0)
    assert result.summary.iterations == 1
    assert result.summary.success_probability == pytest.approx(1.0, abs=1e-9)
    assert result.summary.sample == "bb"
    assert result.summary.counts == {}


def test_no_solutions(grover8_system):
    engine = GroverEngine(grover8_system, 1, ["aaa", "aab"])
    assert engine.auto_iterations() == 0
    result = engine.search(shots=10)
    assert result.summary.success_probability == 0.0
    assert len(result.records) == 1


def test_joint_mode(grover8):
    result = grover8.search(SearchMode.JOINT, 2, shots=0)
    assert result.summary.mode == SearchMode.JOINT
    assert [record.uncompute_calls for record in result.records] == [0, 0, 0]
    assert all(record.norm == pytest.approx(1.0, abs=1e-12) for record in result.records)
    assert 0.0 <= result.summary.success_probability <= 1.0


def test_negative_iterations(grover8):
    with pytest.raises(ValueError):
        grover8.search(iterations=-1)


def test_search_is_seeded(grover8):
    first = grover8.search(seed=5, shots=100).summary
    assert grover8.search(seed=5, shots=100).summary == first


def test_measure(grover8):
    counts = grover8.measure(grover8.initial_state(), shots=800, seed=1)
    assert sum(counts.values()) == 800
    assert set(counts) <= set(grover8.oracle.states)
    assert len(counts) == 8


def test_simulation_limit(grover8_system, monkeypatch):
    monkeypatch.setattr(Config, "MAX_SIMULATION_QUBITS", 4)
    with pytest.raises(TooLarge):
        GroverEngine(grover8_system, 1)


def test_deeper_oracle_grows_trace_register(grover8_system):
    engine = GroverEngine(grover8_system, 3)
    assert engine.layout.p == 3
    assert engine.auto_iterations() == 2


def test_neighbour_states(grover4_system, sort_system):
    assert neighbour_states(grover4_system, ["ba"]) == ["ab", "ba"]
    assert neighbour_states(sort_system, ["abced"]) == [SORTED, "abced"]
    assert len(neighbour_states(sort_system, ["edcba"])) == 5


def test_grover_search_helper(grover4_system):
    result = grover_engine.grover_search(grover4_system, 1, shots=0)
    assert result.summary.iterations == 1


def test_report_round_trip(grover8):
    result = grover8.search(shots=50)
    text = grover_engine.report_to_jsonl(result)
    assert len(text.splitlines()) == len(result.records) + 1
    records, summary = grover_engine.read_report_jsonl(text)
    assert records == result.records
    assert summary == result.summary


def test_read_report_errors():
    with pytest.raises(ParseError):
        grover_engine.read_report_jsonl("")
    with pytest.raises(ParseError):
        grover_engine.read_report_jsonl("{not json}\n")


def test_amplitudes_round_trip(grover8):
    state = grover8.initial_state()
    text = grover_engine.amplitudes_to_csv(state, grover8.oracle)
    lines = text.splitlines()
    assert lines[:3] == ["# n=3", "# p=1", "# m=5"]
    assert lines[3] == ",".join(grover_engine.AMPLITUDE_COLUMNS)
    assert len(lines) == 4 + 16
    assert lines[4].split(",")[:5] == ["0", "0", "0", "0", "aaa"]

    restored = grover_engine.read_amplitudes_csv(text)
    assert restored.layout == state.layout
    assert np.array_equal(restored.amplitudes, state.amplitudes)


def test_amplitude_dump_too_large(grover8, monkeypatch):
    monkeypatch.setattr(Config, "MAX_DENSE_EXPORT_BITS", 4)
    with pytest.raises(TooLarge):
        grover_engine.amplitudes_to_csv(grover8.initial_state())


def test_amplitude_sign_for_every_basis_state(grover8):
    oracle = grover8.oracle
    for x in range(8):
        state = oracle.apply(basis_state(x, oracle.layout)).tensor()
        sign = (-1) ** oracle.f[x]
        g = int(oracle.g[x])
        assert state[x, 0, g] == pytest.approx(sign / math.sqrt(2), abs=1e-12)
        assert state[x, 1, g] == pytest.approx(-sign / math.sqrt(2), abs=1e-12)
        assert np.count_nonzero(state) == 2
