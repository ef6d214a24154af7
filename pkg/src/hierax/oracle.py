"""Brute-force reference inference by full joint enumeration.

Deliberately naive: multiply every CPT into one dense table and condition
by zeroing. This is the independent yardstick the clever machinery is
tested against, so it shares no code with the join-tree path beyond the
factor algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EnumerationSizeError, ImpossibleEvidenceError, UnknownVariableError
from .factors import product
from .network import BayesianNetwork

CELL_GUARD = 2**24
JOINT_TOL = 1e-9


@dataclass(frozen=True)
class JointTable:
    """Normalized joint distribution over every network variable."""

    scope: tuple[str, ...]
    states: tuple[tuple[str, ...], ...]
    values: np.ndarray

    def state_index(self, var: str, label: str) -> int:
        try:
            k = self.scope.index(var)
        except ValueError:
            raise UnknownVariableError(f"no variable {var!r} in the joint") from None
        try:
            return self.states[k].index(label)
        except ValueError:
            raise UnknownVariableError(f"{var!r} has no state {label!r}") from None

    def marginal(self, var: str) -> np.ndarray:
        k = self.scope.index(var)
        axes = tuple(i for i in range(len(self.scope)) if i != k)
        return self.values.sum(axis=axes)


def enumerate_joint(net: BayesianNetwork, guard: int = CELL_GUARD) -> JointTable:
    """Dense joint over all variables; refuses to build monsters."""
    cells = 1
    for v in net.variables:
        cells *= net.card(v)
        if cells > guard:
            raise EnumerationSizeError(
                f"joint would need {cells}+ cells (guard is {guard})"
            )
    joint = product(net.cpts.values()).project(net.variables)
    total = joint.values.sum()
    if abs(total - 1.0) > JOINT_TOL:
        raise ValueError(f"joint mass {total!r} deviates from 1 beyond {JOINT_TOL}")
    return JointTable(joint.scope, tuple(net.domains[v] for v in joint.scope), joint.values)


def condition_joint(joint: JointTable, observation: dict[str, str]) -> dict[str, np.ndarray]:
    """Posterior marginals for every variable given the observation.

    Raises ImpossibleEvidenceError when the observation has zero mass.
    """
    values = joint.values
    for var, label in observation.items():
        if var not in joint.scope:
            raise UnknownVariableError(f"no variable {var!r} in the joint")
        k = joint.scope.index(var)
        ix = joint.state_index(var, label)
        keep = np.zeros(values.shape[k])
        keep[ix] = 1.0
        shape = [1] * values.ndim
        shape[k] = values.shape[k]
        values = values * keep.reshape(shape)
    z = values.sum()
    if z <= 0.0:
        raise ImpossibleEvidenceError(f"observation {observation} has zero probability")
    values = values / z
    out = {}
    for k, var in enumerate(joint.scope):
        axes = tuple(i for i in range(len(joint.scope)) if i != k)
        out[var] = values.sum(axis=axes)
    return out
