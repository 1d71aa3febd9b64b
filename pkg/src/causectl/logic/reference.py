"""Direct recursive semantics, kept as the oracle for the optimized evaluators.

Everything is reduced to true / atoms / not / and / since exactly as the
derived operators are defined; no shortcuts.
"""

from .formula import (
    And,
    ControlAtom,
    FalseF,
    Not,
    Or,
    PastEventually,
    PastGlobally,
    Since,
    StateAtom,
    TrueF,
)


def holds(phi, trace, k: int) -> bool:
    if isinstance(phi, TrueF):
        return True
    if isinstance(phi, FalseF):
        return not holds(TrueF(), trace, k)
    if isinstance(phi, StateAtom):
        x = trace.states[k][phi.var]
        return x > phi.threshold if phi.relation == ">" else x < phi.threshold
    if isinstance(phi, ControlAtom):
        return trace.controls[k][phi.var] == phi.value
    if isinstance(phi, Not):
        return not holds(phi.child, trace, k)
    if isinstance(phi, And):
        return holds(phi.left, trace, k) and holds(phi.right, trace, k)
    if isinstance(phi, Or):
        return holds(Not(And(Not(phi.left), Not(phi.right))), trace, k)
    if isinstance(phi, PastEventually):
        return holds(Since(TrueF(), phi.child, phi.lo, phi.hi), trace, k)
    if isinstance(phi, PastGlobally):
        return holds(Not(PastEventually(Not(phi.child), phi.lo, phi.hi)), trace, k)
    if isinstance(phi, Since):
        for j in range(k - phi.hi, k - phi.lo + 1):
            if j < 0 or j > k:
                continue
            if holds(phi.right, trace, j) and all(holds(phi.left, trace, l) for l in range(j, k + 1)):
                return True
        return False
    raise TypeError(f"not a formula: {phi!r}")
