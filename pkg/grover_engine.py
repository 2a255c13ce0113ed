"""
Grover Engine - dense statevector search with the trace-writing oracle

Registers: x (n qubits, enumerated working-memory states), y (one answer qubit),
z (p qubits, fired-rule codes). Basis index = x << (1 + p) | y << p | z.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import Config
from errors import DecodeFailure, DimensionMismatch, EncodingOverflow, NormalizationError, ParseError, TooLarge
from models import (
    GroverIterationRecord, GroverSummary, ProductionSystemDef, RegisterLayout, SearchMode,
)
from rule_engine import RuleEngine, apply_rule, match_rules
import utils

default_logger = logging.getLogger(__name__)

AMPLITUDE_COLUMNS = ["index", "x", "y", "z", "state", "real", "imag"]


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    layout: RegisterLayout

    def __post_init__(self):
        values = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if values.shape != (self.layout.dimension,):
            raise DimensionMismatch(f"{values.shape[0]} amplitudes for a {self.layout.m}-qubit layout")
        norm = float(np.sum(np.abs(values) ** 2))
        if abs(norm - 1.0) > Config.STATEVECTOR_TOLERANCE:
            raise NormalizationError(f"statevector norm {norm!r} is not 1")
        values.setflags(write=False)
        object.__setattr__(self, "amplitudes", values)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def tensor(self) -> np.ndarray:
        """Amplitudes indexed as [x, y, z]"""
        return self.amplitudes.reshape(self.layout.shape)

    def x_probabilities(self) -> np.ndarray:
        return np.sum(np.abs(self.tensor()) ** 2, axis=(1, 2))

    def evolve(self, amplitudes: np.ndarray) -> "StateVector":
        return StateVector(amplitudes, self.layout)


def check_layout(layout: RegisterLayout):
    if layout.m > Config.MAX_SIMULATION_QUBITS:
        raise TooLarge(f"{layout.m} qubits exceed the simulation limit of {Config.MAX_SIMULATION_QUBITS}")


def basis_index(x: int, y: int, z: int, layout: RegisterLayout) -> int:
    return (x << (1 + layout.p)) | (y << layout.p) | z


def prepare_initial_superposition(codes: Sequence[int], layout: RegisterLayout) -> StateVector:
    """Uniform over the given x codes, y in (|0> - |1>)/sqrt(2), z zero"""
    check_layout(layout)
    codes = sorted(set(codes))
    if not codes:
        raise ValueError("initial state set must be nonempty")
    if codes[-1] >= (1 << layout.n) or codes[0] < 0:
        raise EncodingOverflow(f"state codes {codes[0]}..{codes[-1]} do not fit {layout.n} qubits")

    amplitude = 1.0 / math.sqrt(2 * len(codes))
    tensor = np.zeros(layout.shape, dtype=np.complex128)
    tensor[codes, 0, 0] = amplitude
    tensor[codes, 1, 0] = -amplitude
    return StateVector(tensor.reshape(-1), layout)


def basis_state(x: int, layout: RegisterLayout, z: int = 0) -> StateVector:
    """|x>|->|z>"""
    check_layout(layout)
    tensor = np.zeros(layout.shape, dtype=np.complex128)
    tensor[x, 0, z] = 1.0 / math.sqrt(2)
    tensor[x, 1, z] = -1.0 / math.sqrt(2)
    return StateVector(tensor.reshape(-1), layout)


def diffusion(state: StateVector, mode: SearchMode = SearchMode.UNCOMPUTE,
              support: Optional[Sequence[int]] = None) -> StateVector:
    """Inversion about the mean: over x per (y, z) slice, or over the joint (x, z) block per y.

    support restricts x to the rows the search space occupies; other rows are left alone.
    """
    tensor = state.tensor().copy()
    rows = np.arange(state.layout.shape[0]) if support is None else np.asarray(sorted(set(support)))
    block = tensor[rows]
    if mode == SearchMode.UNCOMPUTE:
        mean = block.mean(axis=0, keepdims=True)
    else:
        mean = block.mean(axis=(0, 2), keepdims=True)
    tensor[rows] = 2 * mean - block
    return state.evolve(tensor.reshape(-1))


def optimal_iterations(n_states: int, solutions: int) -> int:
    """floor(pi/4 * sqrt(N/M))"""
    if not 1 <= solutions <= n_states:
        raise ValueError(f"need 1 <= M <= N, got N={n_states} M={solutions}")
    return int(math.floor(math.pi / 4 * math.sqrt(n_states / solutions)))


def neighbour_states(system: ProductionSystemDef, states: Iterable[str]) -> List[str]:
    """States plus everything one firing away, sorted"""
    found = set(states)
    for state in list(found):
        for rule_id in match_rules(state, system.rules):
            found.add(apply_rule(state, system.rule(rule_id)))
    return sorted(found)


class TraceOracle:
    """Goal test f and fired-rule trace g for a d-step run from every enumerated state"""

    def __init__(self, system: ProductionSystemDef, depth: int, states: Optional[Sequence[str]] = None,
                 logger: Optional[logging.Logger] = None):
        if depth < 1:
            raise ValueError(f"depth must be at least 1: {depth}")
        self.system = system
        self.depth = depth
        self.logger = logger or default_logger
        self.states = tuple(sorted(set(states if states is not None else system.initial_states)))
        self.codes = {state: code for code, state in enumerate(self.states)}

        # Rule codes start at 1; zero pads the slots of runs that halt early
        self.rule_width = len(system.rules).bit_length()
        self.rule_codes = {rule.id: code for code, rule in enumerate(system.rules, start=1)}
        self.layout = RegisterLayout(n=utils.ceil_log2(len(self.states)), p=depth * self.rule_width)
        check_layout(self.layout)

        engine = RuleEngine(system, logger=self.logger)
        self.f = np.zeros(1 << self.layout.n, dtype=np.int64)
        self.g = np.zeros(1 << self.layout.n, dtype=np.int64)
        for code, state in enumerate(self.states):
            trace = engine.run_forward(state, depth)
            self.f[code] = int(system.is_goal(trace.final_memory))
            self.g[code] = self._pack(trace.fired_rules)

    def _pack(self, fired: Sequence[int]) -> int:
        z = 0
        for slot in range(self.depth):
            code = self.rule_codes[fired[slot]] if slot < len(fired) else 0
            z = (z << self.rule_width) | code
        return z

    def unpack(self, z: int) -> Tuple[int, ...]:
        """Rule ids held in a z value, padding dropped"""
        by_code = {code: rule_id for rule_id, code in self.rule_codes.items()}
        mask = (1 << self.rule_width) - 1
        fired = []
        for slot in reversed(range(self.depth)):
            code = (z >> (slot * self.rule_width)) & mask
            if code:
                fired.append(by_code[code])
        return tuple(fired)

    def decode(self, code: int) -> str:
        if not 0 <= code < len(self.states):
            raise DecodeFailure(f"x code {code} names no enumerated state")
        return self.states[code]

    def encode(self, state: str) -> int:
        try:
            return self.codes[state]
        except KeyError:
            raise EncodingOverflow(f"state {state!r} is not in the enumerated table")

    def _code(self, x: Union[str, int]) -> int:
        if isinstance(x, str):
            return self.encode(x)
        self.decode(x)
        return x

    def classical_f(self, x: Union[str, int]) -> int:
        return int(self.f[self._code(x)])

    def classical_g(self, x: Union[str, int]) -> int:
        return int(self.g[self._code(x)])

    @property
    def solutions(self) -> List[int]:
        return [code for code in range(len(self.states)) if self.f[code]]

    def _xor_map(self, with_answer: bool) -> np.ndarray:
        layout = self.layout
        indices = np.arange(layout.dimension, dtype=np.int64)
        x = indices >> (1 + layout.p)
        mask = self.g[x]
        if with_answer:
            mask = mask ^ (self.f[x] << layout.p)
        return indices ^ mask

    def apply(self, state: StateVector) -> StateVector:
        """|x, y, z> -> |x, y xor f(x), z xor g(x)>"""
        return self._permute(state, self._xor_map(with_answer=True))

    def uncompute(self, state: StateVector) -> StateVector:
        """|x, y, z> -> |x, y, z xor g(x)>, the inverse run that clears the trace register"""
        return self._permute(state, self._xor_map(with_answer=False))

    def _permute(self, state: StateVector, mapping: np.ndarray) -> StateVector:
        if state.layout != self.layout:
            raise DimensionMismatch(f"state layout {state.layout} does not match oracle {self.layout}")
        amplitudes = np.empty_like(state.amplitudes)
        amplitudes[mapping] = state.amplitudes
        return state.evolve(amplitudes)


class SearchResult(NamedTuple):
    state: StateVector
    summary: GroverSummary
    records: List[GroverIterationRecord]


class GroverEngine:
    """Amplitude amplification over the enumerated initial states"""

    def __init__(self, system: ProductionSystemDef, depth: int, states: Optional[Sequence[str]] = None,
                 logger: Optional[logging.Logger] = None):
        self.logger = logger or default_logger
        self.oracle = TraceOracle(system, depth, states, self.logger)
        self.support = list(range(len(self.oracle.states)))

    @property
    def layout(self) -> RegisterLayout:
        return self.oracle.layout

    def initial_state(self) -> StateVector:
        return prepare_initial_superposition(self.support, self.layout)

    def success_probability(self, state: StateVector) -> float:
        return float(np.sum(state.x_probabilities()[self.oracle.f[:self.layout.shape[0]] == 1]))

    def iterate(self, state: StateVector, mode: SearchMode) -> StateVector:
        state = self.oracle.apply(state)
        if mode == SearchMode.UNCOMPUTE:
            state = self.oracle.uncompute(state)
        return diffusion(state, mode, self.support)

    def auto_iterations(self) -> int:
        solutions = len(self.oracle.solutions)
        if solutions == 0:
            return 0
        return optimal_iterations(len(self.support), solutions)

    def measure(self, state: StateVector, shots: Optional[int] = None, seed: Optional[int] = None,
                rng: Optional[np.random.Generator] = None) -> Dict[str, int]:
        """Sample the x register, counts keyed by decoded working memory"""
        shots = Config.DEFAULT_SHOTS if shots is None else shots
        if rng is None:
            rng = np.random.Generator(np.random.PCG64(Config.DEFAULT_SEED if seed is None else seed))
        probabilities = state.x_probabilities()
        outcomes = rng.choice(len(probabilities), size=shots, p=probabilities / probabilities.sum())
        codes, counts = np.unique(outcomes, return_counts=True)
        return {self.oracle.decode(int(code)): int(count) for code, count in zip(codes, counts)}

    def search(self, mode: SearchMode = SearchMode.UNCOMPUTE, iterations: Union[int, str] = "auto",
               seed: Optional[int] = None, shots: Optional[int] = None) -> SearchResult:
        k = self.auto_iterations() if iterations == "auto" else int(iterations)
        if k < 0:
            raise ValueError(f"iterations must be non-negative: {k}")
        seed = Config.DEFAULT_SEED if seed is None else seed
        shots = Config.DEFAULT_SHOTS if shots is None else shots
        depth = self.oracle.depth

        state = self.initial_state()
        records = [GroverIterationRecord(
            iteration=0, success_probability=self.success_probability(state), oracle_calls=0, norm=state.norm,
        )]
        for iteration in range(1, k + 1):
            state = self.iterate(state, mode)
            records.append(GroverIterationRecord(
                iteration=iteration,
                success_probability=self.success_probability(state),
                oracle_calls=iteration * depth,
                uncompute_calls=iteration * depth if mode == SearchMode.UNCOMPUTE else 0,
                norm=state.norm,
            ))
            self.logger.debug(f"[ITER {iteration}] success={records[-1].success_probability:.12f}")

        rng = np.random.Generator(np.random.PCG64(seed))
        counts = self.measure(state, shots, rng=rng) if shots else {}
        sample = self.oracle.decode(int(rng.choice(len(self.support), p=self._support_probabilities(state))))
        summary = GroverSummary(
            mode=mode,
            iterations=k,
            depth=depth,
            n=self.layout.n,
            p=self.layout.p,
            m=self.layout.m,
            solutions=len(self.oracle.solutions),
            search_space=len(self.support),
            success_probability=records[-1].success_probability,
            oracle_calls=k * depth,
            seed=seed,
            shots=shots,
            counts=counts,
            sample=sample,
        )
        self.logger.info(f"Grover {mode.value}: k={k}, m={self.layout.m}, "
                         f"success={summary.success_probability:.6f}, oracle calls={summary.oracle_calls}")
        return SearchResult(state, summary, records)

    def _support_probabilities(self, state: StateVector) -> np.ndarray:
        probabilities = state.x_probabilities()[self.support]
        return probabilities / probabilities.sum()


def grover_search(system: ProductionSystemDef, depth: int, mode: SearchMode = SearchMode.UNCOMPUTE,
                  iterations: Union[int, str] = "auto", states: Optional[Sequence[str]] = None,
                  seed: Optional[int] = None, shots: Optional[int] = None) -> SearchResult:
    return GroverEngine(system, depth, states).search(mode, iterations, seed, shots)


# Reports
def report_to_jsonl(result: SearchResult) -> str:
    """One record per iteration followed by the summary line"""
    lines = [record.model_dump_json() for record in result.records]
    lines.append(result.summary.model_dump_json())
    return "\n".join(lines) + "\n"


def read_report_jsonl(text: str) -> Tuple[List[GroverIterationRecord], GroverSummary]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ParseError("empty report")
    try:
        records = [GroverIterationRecord.model_validate_json(line) for line in lines[:-1]]
        summary = GroverSummary.model_validate_json(lines[-1])
    except ValueError as e:
        raise ParseError(f"malformed report: {e}")
    return records, summary


def amplitudes_to_frame(state: StateVector, oracle: Optional[TraceOracle] = None) -> pd.DataFrame:
    """Nonzero amplitudes only"""
    if state.layout.m > Config.MAX_DENSE_EXPORT_BITS:
        raise TooLarge(f"amplitude dump of {state.layout.m} qubits exceeds {Config.MAX_DENSE_EXPORT_BITS}")
    layout = state.layout
    rows = []
    for index in np.flatnonzero(np.abs(state.amplitudes) > Config.STATEVECTOR_TOLERANCE):
        index = int(index)
        x, y, z = index >> (1 + layout.p), (index >> layout.p) & 1, index & ((1 << layout.p) - 1)
        label = oracle.states[x] if oracle is not None and x < len(oracle.states) else ""
        amplitude = state.amplitudes[index]
        rows.append({
            "index": index, "x": x, "y": y, "z": utils.to_bits(z, layout.p), "state": label,
            "real": repr(float(amplitude.real)), "imag": repr(float(amplitude.imag)),
        })
    return pd.DataFrame(rows, columns=AMPLITUDE_COLUMNS)


def amplitudes_to_csv(state: StateVector, oracle: Optional[TraceOracle] = None) -> str:
    header = {"n": str(state.layout.n), "p": str(state.layout.p), "m": str(state.layout.m)}
    return utils.frame_to_csv(amplitudes_to_frame(state, oracle), header)


def read_amplitudes_csv(text: str) -> StateVector:
    frame, header = utils.csv_to_frame(text)
    if list(frame.columns) != AMPLITUDE_COLUMNS:
        raise ParseError(f"not an amplitude export: columns {list(frame.columns)}")
    layout = RegisterLayout(n=int(header["n"]), p=int(header["p"]))
    amplitudes = np.zeros(layout.dimension, dtype=np.complex128)
    for index, real, imag in zip(frame["index"], frame["real"], frame["imag"]):
        amplitudes[int(index)] = complex(float(real), float(imag))
    return StateVector(amplitudes, layout)
