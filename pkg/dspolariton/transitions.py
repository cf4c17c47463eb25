# transitions.py
# This file contains the tags that select which dressed-state transition a
# computation refers to, and the sweep/phase-cell tags built on top of them.

ONE_TWO = "one_two"
TWO_ONE = "two_one"
EQUILIBRIUM = "equilibrium"

TRANSITIONS = [
    ONE_TWO,
    TWO_ONE,
]

SWEEP_TARGETS = TRANSITIONS + [EQUILIBRIUM]

# Phase-diagram classification, with the one-character code used in the
# compact classification matrix.
SUPERRADIANT_EQUILIBRIUM = "superradiant_equilibrium"
LASING_12 = "lasing_12"
LASING_21 = "lasing_21"
NORMAL = "normal"

CLASSIFICATION_CODES = {
    SUPERRADIANT_EQUILIBRIUM: "S",
    LASING_12: "1",
    LASING_21: "2",
    NORMAL: "N",
}


def check_transition(transition: str) -> str:
    """Returns the tag unchanged, or raises ValueError for an unknown one."""
    if transition not in TRANSITIONS:
        raise ValueError(
            f"Unknown transition '{transition}', expected one of {TRANSITIONS}"
        )
    return transition
