"""
Shared fixtures: the sorting system and the small toy systems under systems/
"""
from pathlib import Path

import pytest

from models import Alphabet, Production, ProductionSystemDef
import system_file

SYSTEMS_DIR = Path(__file__).parent / "systems"

SORTED = "abcde"


@pytest.fixture
def systems_dir() -> Path:
    return SYSTEMS_DIR


@pytest.fixture
def sort_system() -> ProductionSystemDef:
    system, _ = system_file.load_system(SYSTEMS_DIR / "sort.ps")
    return system


@pytest.fixture
def toy2_system() -> ProductionSystemDef:
    system, _ = system_file.load_system(SYSTEMS_DIR / "toy2.ps")
    return system


@pytest.fixture
def grover8_system() -> ProductionSystemDef:
    system, _ = system_file.load_system(SYSTEMS_DIR / "grover8.ps")
    return system


@pytest.fixture
def grover4_system() -> ProductionSystemDef:
    system, _ = system_file.load_system(SYSTEMS_DIR / "grover4.ps")
    return system


@pytest.fixture
def tree_system():
    """(system, control) for the binary branching tree"""
    return system_file.load_system(SYSTEMS_DIR / "tree.ps")


def make_system(alphabet: str, rules, initial=("a",), goal=()) -> ProductionSystemDef:
    """rules given as (precondition, action) pairs, ids 1..n"""
    return ProductionSystemDef(
        alphabet=Alphabet.from_string(alphabet),
        rules=tuple(Production(id=i, precondition=pre, action=act) for i, (pre, act) in enumerate(rules, start=1)),
        initial_states=tuple(initial),
        goal_states=frozenset(goal),
    )
