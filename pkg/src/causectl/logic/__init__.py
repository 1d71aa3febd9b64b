from .formula import (
    CONTROL_VALUE,
    FALSE,
    STATE_THRESHOLD,
    TIME_BOUND,
    TRUE,
    And,
    ControlAtom,
    FalseF,
    Formula,
    Not,
    Or,
    Param,
    PastEventually,
    PastGlobally,
    Since,
    StateAtom,
    TrueF,
    conjunction,
    disjunction,
    format_formula,
    free_parameters,
    instantiate,
    is_parametric,
    length,
    operator_count,
)
from .parser import FormulaSyntaxError, parse
from .semantics import SignalBank, evaluate, satisfaction
from .trace import Trace

__all__ = [
    "And", "CONTROL_VALUE", "ControlAtom", "FALSE", "FalseF", "Formula", "FormulaSyntaxError",
    "Not", "Or", "Param", "PastEventually", "PastGlobally", "STATE_THRESHOLD", "Since",
    "SignalBank", "StateAtom", "TIME_BOUND", "TRUE", "Trace", "TrueF", "conjunction",
    "disjunction", "evaluate", "format_formula", "free_parameters", "instantiate",
    "is_parametric", "length", "operator_count", "parse", "satisfaction",
]
