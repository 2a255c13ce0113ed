"""
Reversible Engine - three-tape execution with history, copy and backward phases
"""
import logging
from typing import List, Optional

import pandas as pd

from config import Config
from errors import InverseNoMatch, NoMatch, NotReversible, OutputNotBlank, ParseError, PhaseError
from models import (
    Phase, Production, ProductionSystemDef, ReversibleLogRow, ReversibleMachineState,
    ReversibleRun, Tape, rule_label,
)
from rule_engine import Cycle, RuleEngine, StrategyFn, apply_rule, check_reversible
import utils

default_logger = logging.getLogger(__name__)

LOG_COLUMNS = ["iteration", "phase", "memory", "rule", "history", "history_head",
               "output", "output_head", "cells_moved"]


def invert_rule(rule: Production) -> Production:
    """R: A -> B becomes R^-1: B -> A"""
    return Production(
        id=rule.id, precondition=rule.action, action=rule.precondition, inverse=not rule.inverse
    )


def _tape(cells) -> Tape:
    """Tape holding cells with the head on the last written cell"""
    cells = tuple(cells)
    return Tape(cells=cells, head=max(len(cells) - 1, 0))


class ReversibleEngine:
    """Forward phase, history rewind, history-to-output copy, output rewind, backward phase"""

    def __init__(self, system: ProductionSystemDef, strategy: Optional[StrategyFn] = None,
                 logger: Optional[logging.Logger] = None):
        self.system = system
        self.logger = logger or default_logger
        self.rule_engine = RuleEngine(system, strategy, self.logger)
        self.reversible, self.range_overlaps = check_reversible(system.rules)

    def _require_reversible(self):
        if not self.reversible:
            raise NotReversible(f"rules overlap in range: {self.range_overlaps}")

    @staticmethod
    def _require_phase(state: ReversibleMachineState, phase: Phase):
        if state.phase != phase:
            raise PhaseError(f"expected phase {phase.value}, machine is in {state.phase.value}")

    def _unapply(self, memory: str, rule_id: int) -> str:
        """Undo one firing; refiring the rule must give memory back"""
        rule = self.system.rule(rule_id)
        try:
            undone = apply_rule(memory, invert_rule(rule))
        except NoMatch as e:
            raise InverseNoMatch(str(e))
        if apply_rule(undone, rule) != memory:
            raise InverseNoMatch(f"{rule_label(rule_id, inverse=True)} turns {memory!r} into {undone!r}, "
                                 f"which {rule.label} does not map back")
        return undone

    # Forward phase
    def _advance(self, state: ReversibleMachineState, cycle: Cycle) -> ReversibleMachineState:
        if cycle.outcome is not None:
            return state.model_copy(update={"phase": Phase.REWIND_HISTORY})
        memory = apply_rule(state.memory, self.system.rule(cycle.fired))
        return state.model_copy(update={
            "memory": memory,
            "history": _tape(state.history.written + (cycle.fired,)),
        })

    def fire(self, state: ReversibleMachineState, step_limit: Optional[int] = None) -> ReversibleMachineState:
        """One forward transition: fire and record a rule, or close the forward phase"""
        self._require_phase(state, Phase.FORWARD)
        limit = Config.STEP_LIMIT if step_limit is None else step_limit
        cycle = self.rule_engine.cycle(state.memory, len(state.history.written), limit)
        return self._advance(state, cycle)

    def forward_phase(self, initial: str, step_limit: Optional[int] = None) -> ReversibleMachineState:
        self._require_reversible()
        state = ReversibleMachineState(memory=initial)
        while state.phase == Phase.FORWARD:
            state = self.fire(state, step_limit)
        self.logger.debug(f"Forward phase done: {state.memory!r}, history {state.history.render()}")
        return state

    # Tape phases
    def rewind_history_head(self, state: ReversibleMachineState) -> ReversibleMachineState:
        self._require_phase(state, Phase.REWIND_HISTORY)
        return state.model_copy(update={
            "history": state.history.model_copy(update={"head": 0}),
            "phase": Phase.COPY_TO_OUTPUT,
        })

    def copy_history_to_output(self, state: ReversibleMachineState) -> ReversibleMachineState:
        """Copy cell by cell onto a blank output tape; both heads end on the last cell"""
        self._require_phase(state, Phase.COPY_TO_OUTPUT)
        if not state.output.is_blank:
            raise OutputNotBlank(f"output tape already holds {state.output.render()}")
        if state.history.head != 0:
            raise PhaseError("history head must be rewound before copying")
        written = state.history.written
        return state.model_copy(update={
            "history": _tape(written),
            "output": _tape(written),
            "phase": Phase.REWIND_OUTPUT,
        })

    def rewind_output_head(self, state: ReversibleMachineState) -> ReversibleMachineState:
        self._require_phase(state, Phase.REWIND_OUTPUT)
        return state.model_copy(update={
            "output": state.output.model_copy(update={"head": 0}),
            "phase": Phase.BACKWARD,
        })

    # Backward phase
    def backward_step(self, state: ReversibleMachineState) -> ReversibleMachineState:
        """Undo the rule under the history head, blank its cell and move left"""
        self._require_phase(state, Phase.BACKWARD)
        written = state.history.written
        if not written:
            raise PhaseError("history tape is already blank")
        if state.history.head != len(written) - 1:
            raise PhaseError("history head must sit on the last entry")
        return state.model_copy(update={
            "memory": self._unapply(state.memory, written[-1]),
            "history": _tape(written[:-1]),
        })

    def backward_phase(self, state: ReversibleMachineState) -> ReversibleMachineState:
        while state.history.written:
            state = self.backward_step(state)
        self._require_phase(state, Phase.BACKWARD)
        return state.model_copy(update={"phase": Phase.DONE})

    # Single-transition interface
    def step(self, state: ReversibleMachineState, step_limit: Optional[int] = None) -> ReversibleMachineState:
        if state.phase == Phase.FORWARD:
            return self.fire(state, step_limit)
        if state.phase == Phase.REWIND_HISTORY:
            return self.rewind_history_head(state)
        if state.phase == Phase.COPY_TO_OUTPUT:
            return self.copy_history_to_output(state)
        if state.phase == Phase.REWIND_OUTPUT:
            return self.rewind_output_head(state)
        if state.phase == Phase.BACKWARD:
            if state.history.written:
                return self.backward_step(state)
            return state.model_copy(update={"phase": Phase.DONE})
        raise PhaseError("machine already done")

    def undo(self, state: ReversibleMachineState) -> ReversibleMachineState:
        """Inverse of step: restore the state the last transition came from"""
        history, output = state.history.written, state.output.written

        if state.phase == Phase.FORWARD:
            if not history:
                raise PhaseError("nothing to undo at the initial state")
            return state.model_copy(update={
                "memory": self._unapply(state.memory, history[-1]),
                "history": _tape(history[:-1]),
            })
        if state.phase == Phase.REWIND_HISTORY:
            return state.model_copy(update={"phase": Phase.FORWARD})
        if state.phase == Phase.COPY_TO_OUTPUT:
            return state.model_copy(update={"history": _tape(history), "phase": Phase.REWIND_HISTORY})
        if state.phase == Phase.REWIND_OUTPUT:
            if output != history:
                raise PhaseError("output tape no longer mirrors the history tape")
            return state.model_copy(update={
                "history": Tape(cells=history, head=0),
                "output": Tape(),
                "phase": Phase.COPY_TO_OUTPUT,
            })
        if state.phase == Phase.BACKWARD:
            undone = len(output) - len(history)
            if undone == 0:
                return state.model_copy(update={"output": _tape(output), "phase": Phase.REWIND_OUTPUT})
            rule_id = output[len(history)]
            return state.model_copy(update={
                "memory": apply_rule(state.memory, self.system.rule(rule_id)),
                "history": _tape(history + (rule_id,)),
            })
        return state.model_copy(update={"phase": Phase.BACKWARD})

    # Full run
    def _row(self, rows: List[ReversibleLogRow], state: ReversibleMachineState, phase: Phase,
             rule: str = "", cells_moved: int = 0):
        rows.append(ReversibleLogRow(
            iteration=len(rows),
            phase=phase,
            memory=state.memory,
            rule=rule,
            history=utils.join_ids(state.history.written),
            history_head=state.history.head,
            output=utils.join_ids(state.output.written),
            output_head=state.output.head,
            cells_moved=cells_moved,
        ))

    def run_reversible(self, initial: str, step_limit: Optional[int] = None,
                       verify: bool = False) -> ReversibleRun:
        """All five phases; one log row per forward decision, tape phase and backward step"""
        self._require_reversible()
        limit = Config.STEP_LIMIT if step_limit is None else step_limit
        rows: List[ReversibleLogRow] = []

        state = ReversibleMachineState(memory=initial)
        while state.phase == Phase.FORWARD:
            cycle = self.rule_engine.cycle(state.memory, len(state.history.written), limit)
            self._row(rows, state, Phase.FORWARD, rule_label(cycle.fired))
            state = self._advance(state, cycle)

        travelled = state.history.head
        state = self.rewind_history_head(state)
        self._row(rows, state, Phase.REWIND_HISTORY, cells_moved=travelled)

        state = self.copy_history_to_output(state)
        self._row(rows, state, Phase.COPY_TO_OUTPUT, cells_moved=len(state.output.written))

        travelled = state.output.head
        state = self.rewind_output_head(state)
        self._row(rows, state, Phase.REWIND_OUTPUT, cells_moved=travelled)

        self._row(rows, state, Phase.BACKWARD)
        while state.history.written:
            rule_id = state.history.written[-1]
            state = self.backward_step(state)
            self._row(rows, state, Phase.BACKWARD, rule_label(rule_id, inverse=True))
        state = state.model_copy(update={"phase": Phase.DONE})

        if state.memory != initial:
            raise InverseNoMatch(f"backward phase ended at {state.memory!r}, expected {initial!r}")
        if verify:
            trace = self.rule_engine.run_forward(initial, limit)
            if trace.fired_rules != state.output.written:
                raise InverseNoMatch(f"output tape {state.output.written} disagrees with "
                                     f"forward run {trace.fired_rules}")

        self.logger.info(f"Reversible run from {initial!r}: {len(state.output.written)} firings, "
                         f"{len(rows)} logged iterations")
        return ReversibleRun(rows=tuple(rows), final=state)


def forward_phase(system: ProductionSystemDef, initial: str,
                  step_limit: Optional[int] = None) -> ReversibleMachineState:
    return ReversibleEngine(system).forward_phase(initial, step_limit)


def run_reversible(system: ProductionSystemDef, initial: str,
                   step_limit: Optional[int] = None) -> ReversibleRun:
    return ReversibleEngine(system).run_reversible(initial, step_limit)


# Log export
def log_to_frame(run: ReversibleRun) -> pd.DataFrame:
    rows = [{**row.model_dump(), "phase": row.phase.value} for row in run.rows]
    return pd.DataFrame(rows, columns=LOG_COLUMNS)


def log_to_csv(run: ReversibleRun) -> str:
    return utils.frame_to_csv(log_to_frame(run))


def read_log_csv(text: str) -> List[ReversibleLogRow]:
    frame, _ = utils.csv_to_frame(text)
    if list(frame.columns) != LOG_COLUMNS:
        raise ParseError(f"not a reversible log export: columns {list(frame.columns)}")
    return [ReversibleLogRow(
        iteration=int(row.iteration),
        phase=Phase(row.phase),
        memory=row.memory,
        rule=row.rule,
        history=row.history,
        history_head=int(row.history_head),
        output=row.output,
        output_head=int(row.output_head),
        cells_moved=int(row.cells_moved),
    ) for row in frame.itertuples(index=False)]
