"""
System definition files - line-oriented text format

    alphabet: abcde
    rule 1: ba -> ab
    initial: edcba, abced
    goal: abcde
    strategy: priority 3, 1, 2
    prob edcba: 1=0.5, 5=0.5
"""
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from errors import NoMatch, ParseError
from models import (
    Alphabet, ConflictStrategy, Decision, Production, ProductionSystemDef,
    StochasticControl, Transition,
)
import rule_engine
import utils

logger = logging.getLogger(__name__)

KEY_PATTERN = re.compile(r"^(alphabet|initial|goal|strategy)\s*:\s*(.*)$", re.IGNORECASE)
RULE_PATTERN = re.compile(r"^rule\s+R?(\d+)\s*:\s*(\S+)\s*->\s*(\S+)$", re.IGNORECASE)
PROB_PATTERN = re.compile(r"^prob\s+(\S+)\s*:\s*(.+)$", re.IGNORECASE)
WEIGHT_PATTERN = re.compile(r"^R?(\d+)\s*=\s*([0-9.eE+-]+)$", re.IGNORECASE)


def _split_list(value: str) -> List[str]:
    return [token for token in re.split(r"[,\s]+", value.strip()) if token]


def _parse_alphabet(value: str, line_number: int) -> Alphabet:
    tokens = _split_list(value)
    if len(tokens) == 1:
        tokens = list(tokens[0])
    try:
        return Alphabet(symbols=tuple(tokens))
    except ValidationError as e:
        raise ParseError(f"invalid alphabet: {e.errors()[0]['msg']}", line_number)


def _clean_lines(text: str):
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_number, line


def parse_system(text: str) -> ProductionSystemDef:
    """Parse a system definition; prob lines are ignored here"""
    alphabet: Optional[Alphabet] = None
    rules: Dict[int, Production] = {}
    rule_lines: Dict[int, int] = {}
    initial: List[Tuple[str, int]] = []
    goal: List[Tuple[str, int]] = []
    strategy = ConflictStrategy.LOWEST_RULE_ID
    priority: Tuple[int, ...] = ()

    for line_number, line in _clean_lines(text):
        if PROB_PATTERN.match(line):
            continue

        rule_match = RULE_PATTERN.match(line)
        if rule_match:
            rule_id = int(rule_match.group(1))
            if rule_id in rules:
                raise ParseError(f"duplicate rule id {rule_id}", line_number)
            try:
                rules[rule_id] = Production(
                    id=rule_id, precondition=rule_match.group(2), action=rule_match.group(3)
                )
            except ValidationError as e:
                raise ParseError(f"invalid rule: {e.errors()[0]['msg']}", line_number)
            rule_lines[rule_id] = line_number
            continue

        key_match = KEY_PATTERN.match(line)
        if not key_match:
            raise ParseError(f"unrecognised line: {line!r}", line_number)

        key, value = key_match.group(1).lower(), key_match.group(2)
        if key == "alphabet":
            if alphabet is not None:
                raise ParseError("alphabet defined twice", line_number)
            alphabet = _parse_alphabet(value, line_number)
        elif key == "initial":
            initial.extend((state, line_number) for state in _split_list(value))
        elif key == "goal":
            goal.extend((state, line_number) for state in _split_list(value))
        elif key == "strategy":
            tokens = _split_list(value)
            if not tokens or tokens[0].lower() not in ("lowest", "priority"):
                raise ParseError(f"unknown strategy: {value!r}", line_number)
            if tokens[0].lower() == "priority":
                strategy = ConflictStrategy.CUSTOM_ORDERED
                try:
                    priority = tuple(int(token.lstrip("Rr")) for token in tokens[1:])
                except ValueError:
                    raise ParseError(f"priority must list rule ids: {value!r}", line_number)

    if alphabet is None:
        raise ParseError("missing alphabet line")
    if not rules:
        raise ParseError("no rules defined")
    if not initial:
        raise ParseError("missing initial line")

    for rule_id, rule in rules.items():
        for text_part in (rule.precondition, rule.action):
            if not alphabet.covers(text_part):
                raise ParseError(f"rule {rule_id} uses symbols outside the alphabet", rule_lines[rule_id])
    for state, line_number in (*initial, *goal):
        if not alphabet.covers(state):
            raise ParseError(f"state {state!r} uses symbols outside the alphabet", line_number)

    try:
        system = ProductionSystemDef(
            alphabet=alphabet,
            rules=tuple(rules.values()),
            initial_states=tuple(state for state, _ in initial),
            goal_states=frozenset(state for state, _ in goal),
            conflict_strategy=strategy,
            priority=priority,
        )
    except ValidationError as e:
        raise ParseError(e.errors()[0]["msg"])

    logger.debug(f"Parsed system: {len(system.rules)} rules, {len(system.initial_states)} initial states")
    return system


def parse_control(text: str, system: ProductionSystemDef) -> Optional[StochasticControl]:
    """Build the stochastic control table from prob lines, None if there are none"""
    table: Dict[str, Tuple[Transition, ...]] = {}

    for line_number, line in _clean_lines(text):
        prob_match = PROB_PATTERN.match(line)
        if not prob_match:
            continue
        condition = prob_match.group(1)
        if not system.alphabet.covers(condition):
            raise ParseError(f"condition {condition!r} uses symbols outside the alphabet", line_number)
        if condition in table:
            raise ParseError(f"condition {condition!r} defined twice", line_number)

        transitions = []
        for entry in prob_match.group(2).split(","):
            weight_match = WEIGHT_PATTERN.match(entry.strip())
            if not weight_match:
                raise ParseError(f"malformed weight {entry.strip()!r}", line_number)
            rule_id, probability = int(weight_match.group(1)), float(weight_match.group(2))
            try:
                rule = system.rule(rule_id)
            except KeyError:
                raise ParseError(f"unknown rule id {rule_id}", line_number)
            try:
                result = rule_engine.apply_rule(condition, rule)
            except NoMatch:
                raise ParseError(f"rule {rule_id} does not match {condition!r}", line_number)
            if not 0.0 <= probability <= 1.0:
                raise ParseError(f"probability out of range: {probability}", line_number)
            decision = Decision.HALT if system.is_goal(result) else Decision.CONTINUE
            transitions.append(Transition(
                rule_id=rule_id, result=result, decision=decision, probability=probability
            ))
        table[condition] = tuple(transitions)

    if not table:
        return None
    return StochasticControl(table=table)


def load_system(path: Path) -> Tuple[ProductionSystemDef, Optional[StochasticControl]]:
    """Read a system file and its optional control table"""
    text = utils.read_text(path)
    system = parse_system(text)
    return system, parse_control(text, system)


def render_system(system: ProductionSystemDef, control: Optional[StochasticControl] = None) -> str:
    """Inverse of parse_system/parse_control"""
    lines = [f"alphabet: {''.join(system.alphabet.symbols)}"]
    lines.extend(f"rule {rule.id}: {rule.precondition} -> {rule.action}" for rule in system.rules)
    lines.append(f"initial: {', '.join(system.initial_states)}")
    if system.goal_states:
        lines.append(f"goal: {', '.join(sorted(system.goal_states))}")
    if system.conflict_strategy == ConflictStrategy.CUSTOM_ORDERED:
        lines.append(f"strategy: priority {', '.join(str(rule_id) for rule_id in system.priority)}")
    if control is not None:
        for condition, transitions in control.table.items():
            weights = ", ".join(f"{t.rule_id}={t.probability!r}" for t in transitions)
            lines.append(f"prob {condition}: {weights}")
    return "\n".join(lines) + "\n"
