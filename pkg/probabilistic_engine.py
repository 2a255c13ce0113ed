"""
Probabilistic Engine - weighted control, computation trees and seeded sampling
"""
import logging
from collections import deque
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import Config
from errors import NotNormalized, ParseError
from models import (
    ComputationTree, Decision, Outcome, ProductionSystemDef, StochasticControl, Trace, TraceStep,
    Transition, TreeNode,
)
from rule_engine import RuleEngine, apply_rule, match_rules
import utils

default_logger = logging.getLogger(__name__)

TREE_COLUMNS = ["node_id", "parent_id", "rule", "state", "depth", "edge_probability", "probability", "label",
                "halted"]


def validate_normalization(control: StochasticControl,
                           tolerance: Optional[float] = None) -> Tuple[bool, Dict[str, float]]:
    """Every condition's outcome probabilities must sum to one"""
    tolerance = Config.NORMALIZATION_TOLERANCE if tolerance is None else tolerance
    sums = {
        condition: float(np.sum([t.probability for t in transitions]))
        for condition, transitions in control.table.items()
    }
    return all(abs(total - 1.0) <= tolerance for total in sums.values()), sums


def node_label(index: int) -> str:
    """A, B, ..., Z, AA, AB, ... for breadth-first node numbers"""
    label = ""
    index += 1
    while index:
        index, remainder = divmod(index - 1, 26)
        label = chr(ord("A") + remainder) + label
    return label


# Control builders
Weigh = Callable[[str, Tuple[int, ...]], Dict[int, float]]


def uniform_weights(state: str, conflict: Tuple[int, ...]) -> Dict[int, float]:
    return {rule_id: 1.0 for rule_id in conflict}


def rule_weights(weights: Dict[int, float]) -> Weigh:
    return lambda state, conflict: {rule_id: weights.get(rule_id, 0.0) for rule_id in conflict}


def strategy_weights(system: ProductionSystemDef) -> Weigh:
    engine = RuleEngine(system)
    return lambda state, conflict: {engine.resolve(conflict): 1.0}


def control_row(system: ProductionSystemDef, state: str, weigh: Weigh) -> Tuple[Transition, ...]:
    """Normalized outcomes for one memory; empty when no rule matches"""
    conflict = match_rules(state, system.rules)
    if not conflict:
        return ()
    weights = weigh(state, conflict)
    total = sum(weights.values())
    if total <= 0:
        raise NotNormalized(f"no positive weight for {state!r} over {utils.join_ids(conflict)}")
    transitions = []
    for rule_id in conflict:
        result = apply_rule(state, system.rule(rule_id))
        transitions.append(Transition(
            rule_id=rule_id,
            result=result,
            decision=Decision.HALT if system.is_goal(result) else Decision.CONTINUE,
            probability=weights.get(rule_id, 0.0) / total,
        ))
    return tuple(transitions)


def reachable_states(system: ProductionSystemDef, roots: Iterable[str], depth: int) -> List[str]:
    """States reachable within depth firings, breadth-first, goals not expanded"""
    seen = dict.fromkeys(roots)
    frontier = list(seen)
    starts = set(seen)
    for _ in range(depth):
        following = []
        for state in frontier:
            if system.is_goal(state) and state not in starts:
                continue
            for rule_id in match_rules(state, system.rules):
                result = apply_rule(state, system.rule(rule_id))
                if result not in seen:
                    seen[result] = None
                    following.append(result)
        frontier = following
    return list(seen)


def _control(system: ProductionSystemDef, roots: Iterable[str], depth: int, weigh: Weigh) -> StochasticControl:
    table = {}
    for state in reachable_states(system, roots, depth):
        row = control_row(system, state, weigh)
        if row:
            table[state] = row
    return StochasticControl(table=table)


def uniform_control(system: ProductionSystemDef, roots: Optional[Sequence[str]] = None,
                    depth: int = 3) -> StochasticControl:
    """Equal weight over the conflict set of every reachable state"""
    return _control(system, roots or system.initial_states, depth, uniform_weights)


def weighted_control(system: ProductionSystemDef, weights: Dict[int, float],
                     roots: Optional[Sequence[str]] = None, depth: int = 3) -> StochasticControl:
    """Per-rule weights renormalized over each conflict set"""
    return _control(system, roots or system.initial_states, depth, rule_weights(weights))


def strategy_control(system: ProductionSystemDef, roots: Optional[Sequence[str]] = None,
                     depth: int = 3) -> StochasticControl:
    """Degenerate control: probability one on the rule the deterministic strategy fires"""
    return _control(system, roots or system.initial_states, depth, strategy_weights(system))


class ProbabilisticEngine:
    """Tree expansion and sampling under a stochastic control table.

    States missing from the table have no outcomes unless extend is given, in which
    case their rows are derived from it on first use.
    """

    def __init__(self, system: ProductionSystemDef, control: StochasticControl,
                 logger: Optional[logging.Logger] = None, extend: Optional[Weigh] = None):
        self.system = system
        self.control = control
        self.logger = logger or default_logger
        self.extend = extend
        self._derived: Dict[str, Tuple[Transition, ...]] = {}

    def transitions(self, memory: str) -> Tuple[Transition, ...]:
        if memory in self.control.table or self.extend is None:
            return self.control.transitions(memory)
        if memory not in self._derived:
            self._derived[memory] = control_row(self.system, memory, self.extend)
        return self._derived[memory]

    def _require_normalized(self):
        normalized, sums = validate_normalization(self.control)
        if not normalized:
            bad = {condition: total for condition, total in sums.items()
                   if abs(total - 1.0) > Config.NORMALIZATION_TOLERANCE}
            raise NotNormalized(f"probabilities do not sum to 1: {bad}")

    def expand_tree(self, root: str, depth: int) -> ComputationTree:
        """Breadth-first expansion over every positive-probability outcome"""
        if depth < 0:
            raise ValueError(f"depth must be non-negative: {depth}")

        nodes = [TreeNode(node_id=0, state=root, depth=0, probability=1.0, label=node_label(0))]
        queue = deque([nodes[0]])
        while queue:
            parent = queue.popleft()
            if parent.depth == depth or parent.halted:
                continue
            outcomes = sorted(self.transitions(parent.state), key=lambda t: t.rule_id)
            for transition in outcomes:
                if transition.probability <= 0.0:
                    continue
                child = TreeNode(
                    node_id=len(nodes),
                    parent_id=parent.node_id,
                    rule_id=transition.rule_id,
                    state=transition.result,
                    depth=parent.depth + 1,
                    edge_probability=transition.probability,
                    probability=parent.probability * transition.probability,
                    label=node_label(len(nodes)),
                    halted=transition.decision == Decision.HALT,
                )
                nodes.append(child)
                queue.append(child)

        tree = ComputationTree(nodes=tuple(nodes))
        self.logger.debug(f"Expanded tree from {root!r} to depth {depth}: "
                          f"{len(nodes)} nodes, {len(tree.leaves())} leaves")
        return tree

    def sample_run(self, initial: str, seed: Optional[int] = None, step_limit: Optional[int] = None,
                   rng: Optional[np.random.Generator] = None) -> Trace:
        """One stochastic run; same seed, same trace"""
        self._require_normalized()
        if rng is None:
            rng = np.random.Generator(np.random.PCG64(Config.DEFAULT_SEED if seed is None else seed))
        limit = Config.STEP_LIMIT if step_limit is None else step_limit

        steps = []
        memory = initial
        outcome = None
        while outcome is None:
            conflict = match_rules(memory, self.system.rules)
            outcomes = [t for t in self.transitions(memory) if t.probability > 0.0]
            if not outcomes:
                outcome = Outcome.CONTROL_UNDEFINED if conflict else Outcome.NO_RULE_APPLICABLE
                break
            if len(steps) >= limit:
                outcome = Outcome.STEP_LIMIT
                break

            weights = np.array([t.probability for t in outcomes])
            chosen = outcomes[rng.choice(len(outcomes), p=weights / weights.sum())]
            steps.append(TraceStep(
                iteration=len(steps), memory=memory, conflict_set=conflict,
                fired=chosen.rule_id, decision=Decision.CONTINUE,
            ))
            memory = chosen.result
            if chosen.decision == Decision.HALT:
                outcome = Outcome.GOAL_REACHED

        steps.append(TraceStep(
            iteration=len(steps), memory=memory,
            conflict_set=match_rules(memory, self.system.rules), decision=Decision.HALT,
        ))
        return Trace(steps=tuple(steps), outcome=outcome)

    def sample_runs(self, initial: str, count: int, seed: Optional[int] = None,
                    step_limit: Optional[int] = None) -> List[Trace]:
        """Independent runs, one spawned generator each"""
        seed_sequence = np.random.SeedSequence(Config.DEFAULT_SEED if seed is None else seed)
        traces = [
            self.sample_run(initial, step_limit=step_limit, rng=np.random.Generator(np.random.PCG64(child)))
            for child in seed_sequence.spawn(count)
        ]
        self.logger.info(f"Sampled {count} runs from {initial!r}")
        return traces


def expand_tree(system: ProductionSystemDef, control: StochasticControl, root: str,
                depth: int, extend: Optional[Weigh] = None) -> ComputationTree:
    return ProbabilisticEngine(system, control, extend=extend).expand_tree(root, depth)


def sample_run(system: ProductionSystemDef, control: StochasticControl, initial: str,
               seed: Optional[int] = None, step_limit: Optional[int] = None,
               extend: Optional[Weigh] = None) -> Trace:
    return ProbabilisticEngine(system, control, extend=extend).sample_run(initial, seed, step_limit)


def follow_path(tree: ComputationTree, rule_ids: Sequence[int]) -> TreeNode:
    """Node reached from the root by firing rule_ids in order"""
    node = tree.root
    for rule_id in rule_ids:
        matches = [child for child in tree.children(node.node_id) if child.rule_id == rule_id]
        if not matches:
            raise KeyError(f"no R{rule_id} edge below node {node.label}")
        node = matches[0]
    return node


def path_probability(tree: ComputationTree, node: Union[TreeNode, int]) -> float:
    """Product of the edge probabilities from the root down to node"""
    current = tree.node(node) if isinstance(node, int) else node
    probability = 1.0
    while current.parent_id is not None:
        probability *= current.edge_probability
        current = tree.node(current.parent_id)
    return probability


def layer_probability(tree: ComputationTree, depth: int) -> float:
    return float(np.sum([node.probability for node in tree.layer(depth)]))


def transition_frequencies(traces: Sequence[Trace]) -> Dict[int, float]:
    """Share of runs whose first firing was each rule"""
    firsts = [trace.fired_rules[0] for trace in traces if trace.fired_rules]
    if not firsts:
        return {}
    counts = pd.Series(firsts).value_counts(normalize=True).sort_index()
    return {int(rule_id): float(share) for rule_id, share in counts.items()}


# Tree export
def tree_to_frame(tree: ComputationTree) -> pd.DataFrame:
    rows = [{
        "node_id": node.node_id,
        "parent_id": "" if node.parent_id is None else node.parent_id,
        "rule": "" if node.rule_id is None else f"R{node.rule_id}",
        "state": node.state,
        "depth": node.depth,
        "edge_probability": repr(node.edge_probability),
        "probability": repr(node.probability),
        "label": node.label,
        "halted": "halt" if node.halted else "",
    } for node in tree.nodes]
    return pd.DataFrame(rows, columns=TREE_COLUMNS)


def tree_to_csv(tree: ComputationTree) -> str:
    return utils.frame_to_csv(tree_to_frame(tree))


def read_tree_csv(text: str) -> ComputationTree:
    frame, _ = utils.csv_to_frame(text)
    if list(frame.columns) != TREE_COLUMNS:
        raise ParseError(f"not a tree export: columns {list(frame.columns)}")
    nodes = []
    for row in frame.itertuples(index=False):
        rule = utils.split_ids(row.rule)
        nodes.append(TreeNode(
            node_id=int(row.node_id),
            parent_id=int(row.parent_id) if row.parent_id else None,
            rule_id=rule[0] if rule else None,
            state=row.state,
            depth=int(row.depth),
            edge_probability=float(row.edge_probability),
            probability=float(row.probability),
            label=row.label,
            halted=row.halted == "halt",
        ))
    return ComputationTree(nodes=tuple(nodes))
