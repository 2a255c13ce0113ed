"""
Tests for the three-tape reversible engine
"""
from itertools import permutations

import pytest

from conftest import SORTED, make_system
from errors import InverseNoMatch, NotReversible, OutputNotBlank, PhaseError
from models import Phase, Production, ReversibleMachineState, Tape
import reversible_engine
from reversible_engine import ReversibleEngine, invert_rule
from rule_engine import run_forward

LOG_MEMORY = [
    "edcba", "edcab", "edacb", "eadcb", "aedcb", "aedbc", "aebdc", "abedc", "abecd", "abced",
    "abcde", "abcde", "abcde", "abcde", "abcde",
    "abced", "abecd", "abedc", "aebdc", "aedbc", "aedcb", "eadcb", "edacb", "edcab", "edcba",
]
LOG_RULES = (
    [f"R{i}" for i in range(1, 11)]
    + [""] * 5
    + [f"R{i}^-1" for i in range(10, 0, -1)]
)
ALL_FIRED = ";".join(f"R{i}" for i in range(1, 11))


@pytest.fixture
def engine(sort_system) -> ReversibleEngine:
    return ReversibleEngine(sort_system)


def test_invert_rule(sort_system):
    inverse = invert_rule(sort_system.rule(1))
    assert (inverse.precondition, inverse.action, inverse.label) == ("ab", "ba", "R1^-1")
    inverse = invert_rule(sort_system.rule(10))
    assert (inverse.precondition, inverse.action, inverse.label) == ("de", "ed", "R10^-1")


def test_invert_rule_involution(sort_system):
    for rule in sort_system.rules:
        assert invert_rule(invert_rule(rule)) == rule


@pytest.mark.parametrize("initial, memory, history", [
    ("edcba", SORTED, tuple(range(1, 11))),
    (SORTED, SORTED, ()),
    ("abced", SORTED, (10,)),
])
def test_forward_phase(engine, initial, memory, history):
    state = engine.forward_phase(initial)
    assert state.memory == memory
    assert state.history.written == history
    assert state.history.head == max(len(history) - 1, 0)
    assert state.output.is_blank
    assert state.phase == Phase.REWIND_HISTORY


def test_history_length_matches_forward_firings(engine, sort_system):
    for initial in ("edcba", "baced", "cbade"):
        assert len(engine.forward_phase(initial).history.written) == run_forward(sort_system, initial).firings


def test_tape_phases(engine):
    state = engine.rewind_history_head(engine.forward_phase("edcba"))
    assert state.history.head == 0
    assert state.history.written == tuple(range(1, 11))

    state = engine.copy_history_to_output(state)
    assert state.output.written == state.history.written
    assert state.history.head == 9
    assert state.output.head == 9

    state = engine.rewind_output_head(state)
    assert state.output.head == 0
    assert state.phase == Phase.BACKWARD


@pytest.mark.parametrize("cells", [(), (10,)])
def test_tape_phases_short_history(engine, cells):
    state = ReversibleMachineState(memory=SORTED, history=Tape(cells=cells, head=0), phase=Phase.REWIND_HISTORY)
    state = engine.rewind_output_head(engine.copy_history_to_output(engine.rewind_history_head(state)))
    assert state.history.head == 0
    assert state.output.written == cells
    assert state.output.head == 0


def test_copy_onto_written_output(engine):
    state = ReversibleMachineState(
        memory=SORTED, history=Tape(cells=(10,), head=0), output=Tape(cells=(1,), head=0),
        phase=Phase.COPY_TO_OUTPUT,
    )
    with pytest.raises(OutputNotBlank):
        engine.copy_history_to_output(state)


def test_phase_order_enforced(engine):
    state = ReversibleMachineState(memory="edcba")
    with pytest.raises(PhaseError):
        engine.rewind_history_head(state)
    with pytest.raises(PhaseError):
        engine.backward_step(state)


def test_backward_single_entry(engine):
    state = ReversibleMachineState(
        memory=SORTED, history=Tape(cells=(10,), head=0), output=Tape(cells=(10,), head=0),
        phase=Phase.BACKWARD,
    )
    state = engine.backward_phase(state)
    assert state.memory == "abced"
    assert state.history.is_blank
    assert state.phase == Phase.DONE


def test_backward_empty_history(engine):
    state = ReversibleMachineState(memory=SORTED, phase=Phase.BACKWARD)
    assert engine.backward_phase(state).memory == SORTED


def test_backward_corrupted_history(engine):
    state = engine.rewind_output_head(engine.copy_history_to_output(
        engine.rewind_history_head(engine.forward_phase("edcba"))))
    # R4^-1 needs "ae", which abcde lacks
    corrupted = state.model_copy(update={"history": Tape(cells=tuple(range(1, 10)) + (4,), head=9)})
    with pytest.raises(InverseNoMatch):
        engine.backward_step(corrupted)


def test_leftmost_inverse_that_does_not_undo():
    system = make_system("ab", [("ab", "ba")], initial=("abab",))
    engine = ReversibleEngine(system)
    state = engine.forward_phase("abab")
    assert (state.memory, state.history.written) == ("bbaa", (1, 1, 1))

    state = engine.rewind_output_head(engine.copy_history_to_output(engine.rewind_history_head(state)))
    state = engine.backward_step(engine.backward_step(state))
    # forward went abab, baab, baba; leftmost ba in baba gives abba
    assert state.memory == "abba"
    with pytest.raises(InverseNoMatch):
        engine.backward_step(state)
    with pytest.raises(InverseNoMatch):
        engine.run_reversible("abab")


def test_backward_ending_away_from_initial():
    engine = ReversibleEngine(make_system("ab", [("ab", "ba")], initial=("baab",)))
    # every backward step refires correctly but the chain ends at abba
    with pytest.raises(InverseNoMatch, match="abba"):
        engine.run_reversible("baab")


def test_run_reversible_log(engine):
    run = engine.run_reversible("edcba")

    assert len(run.rows) == 25
    assert [row.memory for row in run.rows] == LOG_MEMORY
    assert [row.rule for row in run.rows] == LOG_RULES
    assert [row.iteration for row in run.rows] == list(range(25))

    assert run.final.memory == "edcba"
    assert run.final.history.is_blank
    assert run.final.output.written == tuple(range(1, 11))
    assert run.final.phase == Phase.DONE


def test_run_reversible_tape_columns(engine):
    rows = engine.run_reversible("edcba").rows

    assert (rows[0].history, rows[0].history_head, rows[0].output) == ("", 0, "")
    assert (rows[10].history, rows[10].history_head) == (ALL_FIRED, 9)
    assert (rows[11].history_head, rows[11].output, rows[11].phase) == (0, "", Phase.REWIND_HISTORY)
    assert (rows[12].history_head, rows[12].output, rows[12].output_head) == (9, ALL_FIRED, 9)
    assert (rows[13].output_head, rows[13].phase) == (0, Phase.REWIND_OUTPUT)
    assert rows[14].phase == Phase.BACKWARD
    assert (rows[15].history, rows[15].history_head) == (";".join(f"R{i}" for i in range(1, 10)), 8)
    assert (rows[24].history, rows[24].output, rows[24].output_head) == ("", ALL_FIRED, 0)


def test_run_reversible_cell_counts(engine):
    rows = engine.run_reversible("edcba").rows
    assert rows[11].cells_moved == 9
    assert rows[12].cells_moved == 10
    assert rows[13].cells_moved == 9


def test_run_reversible_already_sorted(engine):
    run = engine.run_reversible(SORTED)
    assert len(run.rows) == 5
    assert [row.phase for row in run.rows] == [
        Phase.FORWARD, Phase.REWIND_HISTORY, Phase.COPY_TO_OUTPUT, Phase.REWIND_OUTPUT, Phase.BACKWARD,
    ]
    assert all(row.memory == SORTED and row.history == "" and row.output == "" for row in run.rows)


def test_not_reversible():
    system = make_system("abc", [("ba", "ab"), ("ca", "ab")], initial=("ba",))
    engine = ReversibleEngine(system)
    with pytest.raises(NotReversible):
        engine.run_reversible("ba")
    with pytest.raises(NotReversible):
        engine.forward_phase("ba")


def test_round_trip_every_permutation(engine, sort_system):
    for letters in permutations(SORTED):
        initial = "".join(letters)
        run = engine.run_reversible(initial)
        assert run.final.memory == initial
        assert run.final.output.written == run_forward(sort_system, initial).fired_rules


def test_verify_flag(engine):
    run = engine.run_reversible("ebdca", verify=True)
    assert run.final.memory == "ebdca"


def test_every_step_is_undoable(engine):
    state = ReversibleMachineState(memory="edcba")
    transitions = 0
    while state.phase != Phase.DONE:
        following = engine.step(state)
        assert engine.undo(following) == state
        state = following
        transitions += 1
    assert state.memory == "edcba"
    # 10 firings, the forward close, 3 tape phases, 10 inverses and the final close
    assert transitions == 25


def test_step_after_done(engine):
    with pytest.raises(PhaseError):
        engine.step(ReversibleMachineState(memory=SORTED, phase=Phase.DONE))


def test_undo_at_initial_state(engine):
    with pytest.raises(PhaseError):
        engine.undo(ReversibleMachineState(memory="edcba"))


def test_log_csv_round_trip(engine):
    run = engine.run_reversible("edcba")
    text = reversible_engine.log_to_csv(run)
    assert text.splitlines()[0] == ",".join(reversible_engine.LOG_COLUMNS)
    assert text.splitlines()[16].startswith("15,backward,abced,R10^-1,")
    assert reversible_engine.read_log_csv(text) == list(run.rows)


def test_module_level_helpers(sort_system):
    assert reversible_engine.forward_phase(sort_system, "abced").history.written == (10,)
    assert reversible_engine.run_reversible(sort_system, "abced").final.memory == "abced"


def test_identity_rule_reversible():
    system = make_system("ab", [("ab", "ab")], initial=("ab",), goal=("ab",))
    run = ReversibleEngine(system).run_reversible("ab")
    assert run.final.output.written == (1,)
    assert run.final.memory == "ab"


def test_inverse_flag_distinguishes_rules():
    assert Production(id=1, precondition="a", action="b") != Production(id=1, precondition="a", action="b", inverse=True)
