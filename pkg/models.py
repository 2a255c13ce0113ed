"""
Domain Models and Schemas
"""
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

BLANK = None  # tape cell that holds no rule


class ConflictStrategy(str, Enum):
    LOWEST_RULE_ID = "lowest"
    CUSTOM_ORDERED = "priority"


class Decision(str, Enum):
    CONTINUE = "continue"
    HALT = "halt"


class Outcome(str, Enum):
    GOAL_REACHED = "goal_reached"
    NO_RULE_APPLICABLE = "no_rule_applicable"
    CONTROL_UNDEFINED = "control_undefined"
    STEP_LIMIT = "step_limit"


class Phase(str, Enum):
    FORWARD = "forward"
    REWIND_HISTORY = "rewind_history"
    COPY_TO_OUTPUT = "copy_to_output"
    REWIND_OUTPUT = "rewind_output"
    BACKWARD = "backward"
    DONE = "done"


class SearchMode(str, Enum):
    UNCOMPUTE = "uncompute"
    JOINT = "joint"


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True)


def rule_label(rule_id: Optional[int], inverse: bool = False) -> str:
    """R3, or R3^-1 for an inverse"""
    if rule_id is None:
        return ""
    return f"R{rule_id}^-1" if inverse else f"R{rule_id}"


# Rule-core schemas
class Alphabet(FrozenModel):
    """Ordered finite symbol set; order fixes the binary encoding"""
    symbols: Tuple[str, ...]

    @field_validator("symbols")
    @classmethod
    def _check_symbols(cls, symbols):
        if not symbols:
            raise ValueError("alphabet must be nonempty")
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"alphabet has duplicate symbols: {symbols}")
        for symbol in symbols:
            if len(symbol) != 1:
                raise ValueError(f"symbols must be single characters: {symbol!r}")
        return symbols

    @classmethod
    def from_string(cls, text: str) -> "Alphabet":
        return cls(symbols=tuple(text))

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.symbols

    def index(self, symbol: str) -> int:
        return self.symbols.index(symbol)

    def covers(self, text: str) -> bool:
        return all(ch in self.symbols for ch in text)


class Production(FrozenModel):
    """A (precondition, action) rewriting rule"""
    id: int = Field(ge=1)
    precondition: str = Field(min_length=1)
    action: str = Field(min_length=1)
    inverse: bool = False

    @property
    def label(self) -> str:
        return rule_label(self.id, self.inverse)

    def __str__(self) -> str:
        return f"{self.label}: {self.precondition} -> {self.action}"


class ProductionSystemDef(FrozenModel):
    """The (alphabet, initial states, goal states, rules, control) tuple"""
    alphabet: Alphabet
    rules: Tuple[Production, ...]
    initial_states: Tuple[str, ...]
    goal_states: FrozenSet[str] = frozenset()
    conflict_strategy: ConflictStrategy = ConflictStrategy.LOWEST_RULE_ID
    priority: Tuple[int, ...] = ()

    @field_validator("rules")
    @classmethod
    def _check_rules(cls, rules):
        if not rules:
            raise ValueError("rule set must be nonempty")
        ids = [rule.id for rule in rules]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate rule ids: {ids}")
        return tuple(sorted(rules, key=lambda rule: rule.id))

    @field_validator("initial_states")
    @classmethod
    def _check_initial(cls, states):
        if not states:
            raise ValueError("initial state set must be nonempty")
        return tuple(dict.fromkeys(states))

    @model_validator(mode="after")
    def _check_symbols(self):
        for rule in self.rules:
            for text in (rule.precondition, rule.action):
                if not self.alphabet.covers(text):
                    raise ValueError(f"{rule.label} uses symbols outside the alphabet: {text!r}")
        for state in (*self.initial_states, *self.goal_states):
            if not self.alphabet.covers(state):
                raise ValueError(f"state uses symbols outside the alphabet: {state!r}")
        known = {rule.id for rule in self.rules}
        unknown = [rule_id for rule_id in self.priority if rule_id not in known]
        if unknown:
            raise ValueError(f"priority lists unknown rule ids: {unknown}")
        return self

    def rule(self, rule_id: int) -> Production:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(rule_id)

    def is_goal(self, memory: str) -> bool:
        return memory in self.goal_states


class TraceStep(FrozenModel):
    """One row of a forward-chaining run"""
    iteration: int = Field(ge=0)
    memory: str
    conflict_set: Tuple[int, ...] = ()
    fired: Optional[int] = None
    decision: Decision = Decision.CONTINUE

    @model_validator(mode="after")
    def _check_fired(self):
        if self.fired is not None and self.fired not in self.conflict_set:
            raise ValueError(f"fired rule {self.fired} not in conflict set {self.conflict_set}")
        if (self.decision == Decision.HALT) != (self.fired is None):
            raise ValueError("a step halts exactly when no rule fires")
        return self


class Trace(FrozenModel):
    steps: Tuple[TraceStep, ...]
    outcome: Outcome

    @property
    def fired_rules(self) -> Tuple[int, ...]:
        return tuple(step.fired for step in self.steps if step.fired is not None)

    @property
    def firings(self) -> int:
        return len(self.fired_rules)

    @property
    def final_memory(self) -> str:
        return self.steps[-1].memory


# Reversible engine schemas
class Tape(FrozenModel):
    """Blank-extended tape of rule ids; head may sit one past the end"""
    cells: Tuple[Optional[int], ...] = ()
    head: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_head(self):
        if self.head > len(self.cells):
            raise ValueError(f"head {self.head} beyond tape of {len(self.cells)} cells")
        return self

    @property
    def written(self) -> Tuple[int, ...]:
        return tuple(cell for cell in self.cells if cell is not BLANK)

    @property
    def is_blank(self) -> bool:
        return not self.written

    def render(self) -> str:
        """Cells joined by ';' with the head cell in brackets"""
        cells = list(self.cells) or [BLANK]
        parts = []
        for index, cell in enumerate(cells):
            token = rule_label(cell) if cell is not BLANK else "_"
            parts.append(f"[{token}]" if index == self.head else token)
        if self.head >= len(cells):
            parts.append("[_]")
        return ";".join(parts)


class ReversibleMachineState(FrozenModel):
    memory: str
    history: Tape = Tape()
    output: Tape = Tape()
    phase: Phase = Phase.FORWARD

    @model_validator(mode="after")
    def _check_output(self):
        if self.phase == Phase.FORWARD and not self.output.is_blank:
            raise ValueError("output tape must stay blank during the forward phase")
        return self


class ReversibleLogRow(FrozenModel):
    """One logged iteration of a reversible run"""
    iteration: int
    phase: Phase
    memory: str
    rule: str
    history: str
    history_head: int
    output: str
    output_head: int
    cells_moved: int = 0


class ReversibleRun(FrozenModel):
    rows: Tuple[ReversibleLogRow, ...]
    final: ReversibleMachineState


# Probabilistic engine schemas
class Transition(FrozenModel):
    rule_id: int
    result: str
    decision: Decision
    probability: float = Field(ge=0.0, le=1.0)


class StochasticControl(FrozenModel):
    """Whole-memory condition -> weighted (rule, result, decision) outcomes"""
    table: Dict[str, Tuple[Transition, ...]]

    def transitions(self, condition: str) -> Tuple[Transition, ...]:
        return self.table.get(condition, ())


class TreeNode(FrozenModel):
    node_id: int
    parent_id: Optional[int] = None
    rule_id: Optional[int] = None
    state: str
    depth: int
    edge_probability: float = 1.0
    probability: float
    label: str = ""
    halted: bool = False


class ComputationTree(FrozenModel):
    nodes: Tuple[TreeNode, ...]

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def node(self, node_id: int) -> TreeNode:
        return self.nodes[node_id]

    def layer(self, depth: int) -> Tuple[TreeNode, ...]:
        return tuple(node for node in self.nodes if node.depth == depth)

    def children(self, node_id: int) -> Tuple[TreeNode, ...]:
        return tuple(node for node in self.nodes if node.parent_id == node_id)

    def leaves(self) -> Tuple[TreeNode, ...]:
        parents = {node.parent_id for node in self.nodes}
        return tuple(node for node in self.nodes if node.node_id not in parents)

    def by_label(self, label: str) -> TreeNode:
        for node in self.nodes:
            if node.label == label:
                return node
        raise KeyError(label)


# Quantum operator schemas
class SymbolTransition(FrozenModel):
    """Single-symbol control outcome C(gamma) = (r, gamma', d)"""
    rule_id: Optional[int] = None
    result: str
    decision: Decision


class Encoding(FrozenModel):
    alpha: int = Field(ge=0)
    beta: int = Field(ge=0)
    delta: int = 1
    symbol_codes: Dict[str, int]
    rule_codes: Dict[int, int]
    halt_code: int = 1

    @property
    def width(self) -> int:
        return 2 * self.alpha + self.beta + self.delta

    @property
    def size(self) -> int:
        return 1 << self.width

    def header(self) -> Dict[str, str]:
        return {
            "alpha": str(self.alpha),
            "beta": str(self.beta),
            "delta": str(self.delta),
            "symbols": ",".join(f"{s}={c}" for s, c in self.symbol_codes.items()),
            "rules": ",".join(f"{r}={c}" for r, c in self.rule_codes.items()),
            "halt": str(self.halt_code),
        }


# Grover engine schemas
class RegisterLayout(FrozenModel):
    """Widths of |x>, |y>, |z>; y is always one qubit"""
    n: int = Field(ge=0)
    p: int = Field(ge=0)

    @property
    def m(self) -> int:
        return self.n + 1 + self.p

    @property
    def dimension(self) -> int:
        return 1 << self.m

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (1 << self.n, 2, 1 << self.p)


class GroverIterationRecord(FrozenModel):
    iteration: int
    success_probability: float
    oracle_calls: int
    uncompute_calls: int = 0
    norm: float = 1.0


class GroverSummary(FrozenModel):
    mode: SearchMode
    iterations: int
    depth: int
    n: int
    p: int
    m: int
    solutions: int
    search_space: int
    success_probability: float
    oracle_calls: int
    seed: int
    shots: int
    counts: Dict[str, int] = {}
    sample: Optional[str] = None


# Performance model schemas
class RatioModel(FrozenModel):
    s_i: int = Field(ge=1)
    d: int = Field(default=1, ge=1)
    n: int = Field(default=0, ge=0)
    p: int = Field(default=0, ge=0)
    m: int = Field(default=0, ge=0)


# CLI schemas
class RunConfig(FrozenModel):
    subcommand: str
    input: Optional[Path] = None
    out: Optional[Path] = None
    seed: int = 0
    step_limit: int = Field(default=10000, ge=0)
    initial: Optional[str] = None
    depth: int = Field(default=1, ge=0)
    mode: SearchMode = SearchMode.UNCOMPUTE
    iterations: Union[int, str] = "auto"
    shots: int = Field(default=1024, ge=0)

    @field_validator("input")
    @classmethod
    def _check_input(cls, path):
        if path is not None and not path.is_file():
            raise ValueError(f"input file not found: {path}")
        return path

    @field_validator("iterations")
    @classmethod
    def _check_iterations(cls, value):
        if isinstance(value, str):
            if value == "auto":
                return value
            if not value.isdigit():
                raise ValueError(f"iterations must be a non-negative integer or 'auto': {value}")
            value = int(value)
        if value < 0:
            raise ValueError(f"iterations must be non-negative: {value}")
        return value

    @model_validator(mode="after")
    def _check_depth(self):
        if self.subcommand in ("grover", "perf") and self.depth < 1:
            raise ValueError(f"{self.subcommand} needs --depth of at least 1: {self.depth}")
        return self


class ValidationReport(FrozenModel):
    deterministic: bool
    reversible: bool
    domain_overlaps: Tuple[Tuple[int, int], ...] = ()
    range_overlaps: Tuple[Tuple[int, int], ...] = ()
    alpha: int
    beta: int
    delta: int

    def summary(self) -> str:
        yes_no = {True: "yes", False: "no"}
        return (f"deterministic: {yes_no[self.deterministic]}, "
                f"reversible: {yes_no[self.reversible]}, "
                f"α={self.alpha} β={self.beta} δ={self.delta}")
