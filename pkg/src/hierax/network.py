"""Discrete Bayesian networks with dense conditional tables.

Each variable owns an ordered tuple of state labels and a CPT stored as a
Factor whose scope is (*parents, variable); the last axis is therefore the
distribution axis and CPT "rows" are parent configurations in row-major
order. Networks are treated as immutable values: the transformation
operations return fresh copies rather than mutating in place.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import NetworkStructureError
from .factors import Factor

ROW_SUM_TOL = 1e-12


@dataclass
class BayesianNetwork:
    domains: dict[str, tuple[str, ...]] = field(default_factory=dict)
    parents: dict[str, tuple[str, ...]] = field(default_factory=dict)
    cpts: dict[str, Factor] = field(default_factory=dict)

    # -- construction -------------------------------------------------

    def add_variable(self, var, labels, parents, table):
        """Insert a variable with its CPT.

        `table` must have shape (*parent cards, len(labels)). Parents must
        already exist so insertion order is a topological order.
        """
        if var in self.domains:
            raise NetworkStructureError(f"variable {var!r} already present")
        for p in parents:
            if p not in self.domains:
                raise NetworkStructureError(f"parent {p!r} of {var!r} not present")
        labels = tuple(labels)
        if len(labels) < 2:
            raise NetworkStructureError(f"{var!r} needs at least two states")
        scope = tuple(parents) + (var,)
        arr = np.asarray(table, dtype=float)
        expected = tuple(len(self.domains[p]) for p in parents) + (len(labels),)
        if arr.shape != expected:
            raise NetworkStructureError(
                f"CPT for {var!r} has shape {arr.shape}, expected {expected}"
            )
        self.domains[var] = labels
        self.parents[var] = tuple(parents)
        self.cpts[var] = Factor(scope, arr)
        return self

    # -- queries -------------------------------------------------------

    @property
    def variables(self):
        return tuple(self.domains)

    def card(self, var):
        return len(self.domains[var])

    def state_index(self, var, label):
        try:
            return self.domains[var].index(label)
        except ValueError:
            raise NetworkStructureError(f"{var!r} has no state {label!r}") from None

    def children(self, var):
        return tuple(v for v in self.domains if var in self.parents[v])

    def roots(self):
        return tuple(v for v in self.domains if not self.parents[v])

    def has_arc(self, x, y):
        return x in self.parents.get(y, ())

    def has_path(self, x, y, skip_direct=False):
        """Directed reachability x => y, optionally ignoring the arc x->y."""
        stack = [x]
        seen = set()
        while stack:
            v = stack.pop()
            for c in self.children(v):
                if skip_direct and v == x and c == y:
                    continue
                if c == y:
                    return True
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def topological_order(self):
        """Kahn's algorithm, ties broken by ascending variable id."""
        remaining = {v: len(self.parents[v]) for v in self.domains}
        ready = [v for v, d in remaining.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self.children(v):
                remaining[c] -= 1
                if remaining[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != len(self.domains):
            raise NetworkStructureError("network contains a directed cycle")
        return tuple(order)

    def is_acyclic(self):
        try:
            self.topological_order()
            return True
        except NetworkStructureError:
            return False

    def copy(self):
        out = BayesianNetwork()
        out.domains = dict(self.domains)
        out.parents = dict(self.parents)
        out.cpts = dict(self.cpts)
        return out

    # -- checks ---------------------------------------------------------

    def check_cpts(self, tol=ROW_SUM_TOL):
        """Return a list of CPT normalization defects (empty when sound)."""
        problems = []
        for v, f in self.cpts.items():
            rows = f.values.sum(axis=-1)
            worst = float(np.abs(rows - 1.0).max()) if rows.size else 0.0
            if worst > tol:
                problems.append(f"CPT rows of {v!r} deviate from 1 by {worst:g}")
        return problems

    def is_deterministic(self, var):
        vals = self.cpts[var].values
        return bool(np.all((vals == 0.0) | (vals == 1.0)))

    # -- replacement helpers used by the transformations ----------------

    def with_cpt(self, var, parents, table):
        out = self.copy()
        scope = tuple(parents) + (var,)
        out.parents[var] = tuple(parents)
        out.cpts[var] = Factor(scope, table)
        return out

    def without(self, var):
        out = self.copy()
        del out.domains[var]
        del out.parents[var]
        del out.cpts[var]
        for v, ps in list(out.parents.items()):
            if var in ps:
                raise NetworkStructureError(
                    f"cannot drop {var!r}: still a parent of {v!r}"
                )
        return out

    def reorder_parents(self, var, new_order):
        """Permute a CPT's parent axes without changing its meaning."""
        old = self.parents[var]
        if sorted(old) != sorted(new_order):
            raise NetworkStructureError("reorder must permute the existing parents")
        f = self.cpts[var]
        out = self.copy()
        out.parents[var] = tuple(new_order)
        out.cpts[var] = f.project(tuple(new_order) + (var,))
        return out


def network_to_text(net: BayesianNetwork) -> str:
    """Deterministic plain-text dump, one block per variable.

    CPT rows appear in row-major parent order, first parent slowest.
    Intended for golden-file diffing and debugging.
    """
    lines = []
    for v in net.variables:
        lines.append(f"node {v}")
        lines.append("  states: " + " ".join(net.domains[v]))
        ps = net.parents[v]
        lines.append("  parents: " + (" ".join(ps) if ps else "-"))
        f = net.cpts[v].project(ps + (v,))
        table = f.values.reshape(-1, net.card(v))
        labels = [net.domains[p] for p in ps]
        for row_idx in range(table.shape[0]):
            combo = []
            rem = row_idx
            for k in range(len(ps) - 1, -1, -1):
                rem, ix = divmod(rem, len(labels[k]))
                combo.append(labels[k][ix])
            combo.reverse()
            head = " ".join(combo) if combo else "-"
            body = " ".join(f"{x:.9f}" for x in table[row_idx])
            lines.append(f"  {head} | {body}")
    return "\n".join(lines) + "\n"
