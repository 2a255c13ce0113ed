"""
Quantum Operator - the control function as a permutation over encoded basis states

Basis index layout, big-endian: gamma (alpha bits) | b0 (beta bits) | b1 (alpha bits) | b2 (1 bit).
Column lambda of the operator carries its single 1 in row omega = map[lambda].
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import Config
from errors import DimensionMismatch, EncodingOverflow, NotDeterministic, ParseError, TooLarge
from models import Decision, Encoding, ProductionSystemDef, SymbolTransition
import utils

default_logger = logging.getLogger(__name__)

MAP_COLUMNS = ["lambda", "omega"]

TransitionFn = Callable[[str], Union[SymbolTransition, Sequence[SymbolTransition]]]


@dataclass(frozen=True, eq=False)
class PermutationOperator:
    """Unitary stored as an index map; dense form is export only"""
    map: np.ndarray
    encoding: Optional[Encoding] = None

    def __post_init__(self):
        values = np.array(self.map, dtype=np.int64)
        if values.ndim != 1:
            raise DimensionMismatch(f"operator map must be one-dimensional: shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "map", values)

    @property
    def size(self) -> int:
        return int(self.map.shape[0])

    @classmethod
    def identity(cls, size: int, encoding: Optional[Encoding] = None) -> "PermutationOperator":
        return cls(np.arange(size, dtype=np.int64), encoding)

    def inverse(self) -> "PermutationOperator":
        inverted = np.empty_like(self.map)
        inverted[self.map] = np.arange(self.size, dtype=np.int64)
        return PermutationOperator(inverted, self.encoding)

    def compose(self, other: "PermutationOperator") -> "PermutationOperator":
        """self after other"""
        if other.size != self.size:
            raise DimensionMismatch(f"cannot compose sizes {self.size} and {other.size}")
        return PermutationOperator(self.map[other.map], self.encoding)

    def decode(self, index: int) -> Tuple[int, int, int, int]:
        """Split an index into its (gamma, b0, b1, b2) field values"""
        if self.encoding is None:
            raise ValueError("operator has no encoding attached")
        return split_fields(index, self.encoding)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PermutationOperator):
            return NotImplemented
        return np.array_equal(self.map, other.map)

    __hash__ = None


def compute_encoding(system: ProductionSystemDef) -> Encoding:
    """Field widths from the alphabet and rule counts; codes follow declaration order"""
    return Encoding(
        alpha=utils.ceil_log2(len(system.alphabet)),
        beta=utils.ceil_log2(len(system.rules)),
        delta=1,
        symbol_codes={symbol: code for code, symbol in enumerate(system.alphabet.symbols)},
        rule_codes={rule.id: code for code, rule in enumerate(system.rules)},
    )


def split_fields(index: int, encoding: Encoding) -> Tuple[int, int, int, int]:
    alpha, beta = encoding.alpha, encoding.beta
    b2 = index & 1
    b1 = (index >> 1) & ((1 << alpha) - 1)
    b0 = (index >> (alpha + 1)) & ((1 << beta) - 1)
    gamma = index >> (alpha + beta + 1)
    return gamma, b0, b1, b2


def join_fields(gamma: int, b0: int, b1: int, b2: int, encoding: Encoding) -> int:
    alpha, beta = encoding.alpha, encoding.beta
    return (gamma << (alpha + beta + 1)) | (b0 << (alpha + 1)) | (b1 << 1) | b2


def symbol_transition(system: ProductionSystemDef) -> Dict[str, SymbolTransition]:
    """Deterministic single-symbol control derived from one-symbol rules.

    A symbol with no such rule keeps its value and halts with an all-zero rule field.
    """
    table = {}
    for symbol in system.alphabet.symbols:
        rules = [rule for rule in system.rules if rule.precondition == symbol]
        if len(rules) > 1:
            raise NotDeterministic(f"symbol {symbol!r} has several rules: "
                                   f"{utils.join_ids(rule.id for rule in rules)}")
        if not rules:
            table[symbol] = SymbolTransition(rule_id=None, result=symbol, decision=Decision.HALT)
            continue
        rule = rules[0]
        if len(rule.action) != 1:
            raise EncodingOverflow(f"{rule.label} action {rule.action!r} does not fit one symbol field")
        decision = Decision.HALT if system.is_goal(rule.action) else Decision.CONTINUE
        table[symbol] = SymbolTransition(rule_id=rule.id, result=rule.action, decision=decision)
    return table


def _lookup(transition: Union[Mapping[str, SymbolTransition], TransitionFn], symbol: str) -> SymbolTransition:
    outcome = transition(symbol) if callable(transition) else transition[symbol]
    if isinstance(outcome, SymbolTransition):
        return outcome
    outcomes = list(outcome)
    if len(outcomes) != 1:
        raise NotDeterministic(f"transition for {symbol!r} yields {len(outcomes)} outcomes")
    return outcomes[0]


def build_operator(system: ProductionSystemDef,
                   transition: Union[Mapping[str, SymbolTransition], TransitionFn, None] = None,
                   encoding: Optional[Encoding] = None,
                   logger: Optional[logging.Logger] = None) -> PermutationOperator:
    """Enumerate every basis index, evaluate the transition on its gamma field
    and XOR the encoded (r, gamma', d) into (b0, b1, b2)."""
    logger = logger or default_logger
    encoding = encoding or compute_encoding(system)
    transition = transition if transition is not None else symbol_transition(system)

    # Unused gamma codes keep a zero mask so those indices map to themselves
    masks = np.zeros(1 << encoding.alpha, dtype=np.int64)
    for symbol, code in encoding.symbol_codes.items():
        outcome = _lookup(transition, symbol)
        rule_code = 0 if outcome.rule_id is None else encoding.rule_codes[outcome.rule_id]
        halt = encoding.halt_code if outcome.decision == Decision.HALT else 1 - encoding.halt_code
        masks[code] = join_fields(0, rule_code, encoding.symbol_codes[outcome.result], halt, encoding)

    indices = np.arange(encoding.size, dtype=np.int64)
    gamma = indices >> (encoding.alpha + encoding.beta + 1)
    operator = PermutationOperator(indices ^ masks[gamma], encoding)
    logger.info(f"Built operator: alpha={encoding.alpha} beta={encoding.beta} "
                f"delta={encoding.delta}, size {operator.size}")
    return operator


def verify_bijection(op: PermutationOperator) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """True when the map is a permutation of [0, size); otherwise the first colliding
    (earlier, later) index pair, or None if an image falls outside the range"""
    values = op.map
    if op.size and (values.min() < 0 or values.max() >= op.size):
        return False, None
    order = np.argsort(values, kind="stable")
    ordered = values[order]
    repeats = np.flatnonzero(ordered[1:] == ordered[:-1]) + 1
    if repeats.size == 0:
        return True, None
    later = order[repeats]
    earlier = order[np.searchsorted(ordered, ordered[repeats], side="left")]
    first = int(np.argmin(later))
    return False, (int(earlier[first]), int(later[first]))


def apply(op: PermutationOperator, vector: np.ndarray) -> np.ndarray:
    """Amplitude at lambda moves to map[lambda]"""
    vector = np.asarray(vector)
    if vector.shape != (op.size,):
        raise DimensionMismatch(f"vector of shape {vector.shape} for operator of size {op.size}")
    result = np.empty_like(vector)
    result[op.map] = vector
    return result


def power(op: PermutationOperator, d: int) -> PermutationOperator:
    if d < 0:
        raise ValueError(f"power must be non-negative: {d}")
    result = PermutationOperator.identity(op.size, op.encoding)
    base = op
    while d:
        if d & 1:
            result = base.compose(result)
        base = base.compose(base)
        d >>= 1
    return result


def export_dense(op: PermutationOperator) -> np.ndarray:
    """0/1 matrix with row omega, column lambda"""
    if op.size > (1 << Config.MAX_DENSE_EXPORT_BITS):
        raise TooLarge(f"dense export of size {op.size} exceeds 2^{Config.MAX_DENSE_EXPORT_BITS}")
    matrix = np.zeros((op.size, op.size), dtype=np.int8)
    matrix[op.map, np.arange(op.size)] = 1
    return matrix


# Export formats
def _header(op: PermutationOperator) -> Dict[str, str]:
    return op.encoding.header() if op.encoding is not None else {}


def dense_to_csv(op: PermutationOperator) -> str:
    frame = pd.DataFrame(export_dense(op), columns=[str(column) for column in range(op.size)])
    return utils.frame_to_csv(frame, _header(op))


def map_to_csv(op: PermutationOperator) -> str:
    frame = pd.DataFrame({"lambda": np.arange(op.size), "omega": op.map}, columns=MAP_COLUMNS)
    return utils.frame_to_csv(frame, _header(op))


def encoding_from_header(header: Dict[str, str]) -> Optional[Encoding]:
    if "alpha" not in header:
        return None

    def pairs(text: str) -> Dict[str, int]:
        entries = [entry.split("=", 1) for entry in text.split(",") if entry]
        return {key: int(value) for key, value in entries}

    try:
        return Encoding(
            alpha=int(header["alpha"]),
            beta=int(header["beta"]),
            delta=int(header["delta"]),
            symbol_codes=pairs(header.get("symbols", "")),
            rule_codes={int(rule_id): code for rule_id, code in pairs(header.get("rules", "")).items()},
            halt_code=int(header.get("halt", "1")),
        )
    except (KeyError, ValueError) as e:
        raise ParseError(f"malformed encoding header: {e}")


def read_map_csv(text: str) -> PermutationOperator:
    frame, header = utils.csv_to_frame(text)
    if list(frame.columns) != MAP_COLUMNS:
        raise ParseError(f"not an operator map export: columns {list(frame.columns)}")
    lambdas = frame["lambda"].astype(np.int64).to_numpy()
    if not np.array_equal(lambdas, np.arange(len(frame))):
        raise ParseError("lambda column must list 0..size-1 in order")
    return PermutationOperator(frame["omega"].astype(np.int64).to_numpy(), encoding_from_header(header))


def read_dense_csv(text: str) -> PermutationOperator:
    """Operator back from a 0/1 matrix export; every column must hold exactly one 1"""
    frame, header = utils.csv_to_frame(text)
    size = len(frame.columns)
    if list(frame.columns) != [str(column) for column in range(size)] or len(frame) != size:
        raise ParseError(f"not a square dense export: {len(frame)} rows, columns {list(frame.columns)}")
    try:
        matrix = frame.astype(np.int64).to_numpy()
    except ValueError as e:
        raise ParseError(f"dense export holds a non-integer cell: {e}")
    if not np.isin(matrix, (0, 1)).all():
        raise ParseError("dense export must hold only 0 and 1")
    if not (matrix.sum(axis=0) == 1).all() or not (matrix.sum(axis=1) == 1).all():
        raise ParseError("dense export is not a permutation matrix")
    return PermutationOperator(np.argmax(matrix, axis=0), encoding_from_header(header))
