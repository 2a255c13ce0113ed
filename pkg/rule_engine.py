"""
Rule Engine - matching, conflict resolution and forward chaining
"""
import logging
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import pandas as pd

from config import Config
from errors import NoMatch, ParseError, ProductionSystemError
from models import (
    ConflictStrategy, Decision, Outcome, Production, ProductionSystemDef, Trace, TraceStep,
    rule_label,
)
import utils

default_logger = logging.getLogger(__name__)

StrategyFn = Callable[[Tuple[int, ...]], Optional[int]]

TRACE_COLUMNS = ["iteration", "memory", "conflict_set", "fired", "decision"]


def match_rules(memory: str, rules: Sequence[Production]) -> Tuple[int, ...]:
    """Ids of every rule whose precondition occurs in memory, ascending"""
    return tuple(sorted({rule.id for rule in rules if rule.precondition in memory}))


def resolve_conflict(conflict: Sequence[int],
                     strategy: ConflictStrategy = ConflictStrategy.LOWEST_RULE_ID,
                     priority: Sequence[int] = ()) -> Optional[int]:
    """Pick one rule id from the conflict set"""
    if not conflict:
        return None
    if strategy == ConflictStrategy.LOWEST_RULE_ID:
        return min(conflict)

    ranks = {rule_id: rank for rank, rule_id in enumerate(priority)}
    return min(conflict, key=lambda rule_id: (ranks.get(rule_id, len(ranks)), rule_id))


def apply_rule(memory: str, rule: Production) -> str:
    """Replace the leftmost occurrence of the precondition by the action"""
    position = memory.find(rule.precondition)
    if position < 0:
        raise NoMatch(f"{rule.label} precondition {rule.precondition!r} not in {memory!r}")
    return memory[:position] + rule.action + memory[position + len(rule.precondition):]


def _overlaps(rules: Sequence[Production], field: str) -> List[Tuple[int, int]]:
    ordered = sorted(rules, key=lambda rule: rule.id)
    pairs = []
    for i, first in enumerate(ordered):
        for second in ordered[i + 1:]:
            if getattr(first, field) == getattr(second, field):
                pairs.append((first.id, second.id))
    return pairs


def check_deterministic(rules: Sequence[Production]) -> Tuple[bool, List[Tuple[int, int]]]:
    """Quadruples must have non-overlapping domains"""
    pairs = _overlaps(rules, "precondition")
    return not pairs, pairs


def check_reversible(rules: Sequence[Production]) -> Tuple[bool, List[Tuple[int, int]]]:
    """Quadruples must have non-overlapping ranges"""
    pairs = _overlaps(rules, "action")
    return not pairs, pairs


class Cycle(NamedTuple):
    """Result of one recognise-act decision"""
    conflict_set: Tuple[int, ...]
    fired: Optional[int]
    outcome: Optional[Outcome]


class RuleEngine:
    """Forward-chaining interpreter for a production system"""

    def __init__(self, system: ProductionSystemDef, strategy: Optional[StrategyFn] = None,
                 logger: Optional[logging.Logger] = None):
        self.system = system
        self.strategy = strategy
        self.logger = logger or default_logger

    def resolve(self, conflict: Tuple[int, ...]) -> Optional[int]:
        if self.strategy is not None:
            chosen = self.strategy(conflict)
            if chosen is not None and chosen not in conflict:
                raise ProductionSystemError(f"strategy chose rule {chosen} outside {conflict}")
            return chosen
        return resolve_conflict(conflict, self.system.conflict_strategy, self.system.priority)

    def cycle(self, memory: str, firings: int, step_limit: int) -> Cycle:
        """Decide whether to halt, and otherwise which rule fires next.

        Goal membership only stops the run once a production has fired.
        """
        conflict = match_rules(memory, self.system.rules)
        if firings > 0 and self.system.is_goal(memory):
            return Cycle(conflict, None, Outcome.GOAL_REACHED)
        if not conflict:
            return Cycle(conflict, None, Outcome.NO_RULE_APPLICABLE)
        if firings >= step_limit:
            return Cycle(conflict, None, Outcome.STEP_LIMIT)
        return Cycle(conflict, self.resolve(conflict), None)

    def run_forward(self, initial: str, step_limit: Optional[int] = None) -> Trace:
        """Match, resolve and fire until a halting condition; returns the full trace"""
        if step_limit is None:
            step_limit = Config.STEP_LIMIT
        if step_limit < 0:
            raise ValueError(f"step_limit must be non-negative: {step_limit}")
        if not self.system.alphabet.covers(initial):
            raise ProductionSystemError(f"initial state {initial!r} uses symbols outside the alphabet")

        steps = []
        memory = initial
        while True:
            iteration = len(steps)
            cycle = self.cycle(memory, iteration, step_limit)
            if cycle.outcome is not None:
                steps.append(TraceStep(
                    iteration=iteration, memory=memory, conflict_set=cycle.conflict_set,
                    fired=None, decision=Decision.HALT,
                ))
                break

            self.logger.debug(f"[STEP {iteration}] {memory} conflict={utils.join_ids(cycle.conflict_set)} "
                              f"fire={rule_label(cycle.fired)}")
            steps.append(TraceStep(
                iteration=iteration, memory=memory, conflict_set=cycle.conflict_set,
                fired=cycle.fired, decision=Decision.CONTINUE,
            ))
            memory = apply_rule(memory, self.system.rule(cycle.fired))

        trace = Trace(steps=tuple(steps), outcome=cycle.outcome)
        self.logger.info(f"Forward run from {initial!r}: {trace.firings} firings, "
                         f"outcome {trace.outcome.value}, final {trace.final_memory!r}")
        return trace


def run_forward(system: ProductionSystemDef, initial: str, step_limit: Optional[int] = None) -> Trace:
    return RuleEngine(system).run_forward(initial, step_limit)


# Trace export
def trace_to_frame(trace: Trace) -> pd.DataFrame:
    rows = [{
        "iteration": step.iteration,
        "memory": step.memory,
        "conflict_set": utils.join_ids(step.conflict_set),
        "fired": rule_label(step.fired),
        "decision": step.decision.value,
    } for step in trace.steps]
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def trace_to_csv(trace: Trace) -> str:
    return utils.frame_to_csv(trace_to_frame(trace), {"outcome": trace.outcome.value})


def read_trace_csv(text: str) -> Trace:
    frame, header = utils.csv_to_frame(text)
    if list(frame.columns) != TRACE_COLUMNS or "outcome" not in header:
        raise ParseError(f"not a trace export: columns {list(frame.columns)}")
    steps = []
    for row in frame.itertuples(index=False):
        fired = utils.split_ids(row.fired)
        steps.append(TraceStep(
            iteration=int(row.iteration),
            memory=row.memory,
            conflict_set=utils.split_ids(row.conflict_set),
            fired=fired[0] if fired else None,
            decision=Decision(row.decision),
        ))
    return Trace(steps=tuple(steps), outcome=Outcome(header["outcome"]))
