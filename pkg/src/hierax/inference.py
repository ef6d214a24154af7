"""Calibration and queries over a composite join tree.

A session keeps one immutable potential per clique (the product of the
uncompiled CPTs whose families it hosts) and a cache of directed
messages, one per edge direction, in Shafer-Shenoy style. Evidence is
applied as indicator slices at each variable's query site when messages
and beliefs are computed, so nothing is ever baked into a potential and
rollback after impossible evidence is free: staged messages are simply
not committed.

Propagation is scoped by hierarchy level. The effective scope is the
requested set of levels plus every level holding evidence, closed
toward the root; messages between in-scope cliques are recomputed in a
collect/distribute sweep and everything else keeps its cached value.
Cached messages stay valid because a message toward the root only
depends on its own side of the tree, and levels outside the effective
scope never hold unpropagated evidence.

Sessions track an evidence epoch and a per-level sync mark. Querying a
level that has not been propagated at the current epoch raises, which
is the contract the HTTP layer turns into a dirty-scope response.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DirtyScopeError,
    HiddenVariableError,
    ImpossibleEvidenceError,
    NetworkStructureError,
    UnknownVariableError,
    VerificationError,
)
from .factors import Factor, multiply
from .jointree import CompositeJoinTree
from .network import BayesianNetwork
from .translate import TranslationIndex

CONSISTENCY_TOL = 1e-9

# When enabled, every posterior is recomputed from all cliques holding
# the variable and cross-checked; used by the test suite.
DEBUG_CROSSCHECK = False


@dataclass(frozen=True)
class ReportEntry:
    component: str
    variable: str
    states: tuple[str, ...]
    probabilities: tuple[float, ...]
    ok_state: str
    ok_probability: float


@dataclass(frozen=True)
class PosteriorReport:
    """Mode posteriors ranked most-suspicious first."""

    entries: tuple[ReportEntry, ...]
    impossible: bool
    likelihood: float


@dataclass(frozen=True)
class ActionResult:
    notice: str
    impossible: bool = False


def _designated_ok(labels) -> str:
    return "ok" if "ok" in labels else labels[0]


class Session:
    """Mutable inference state bound to one model's composite tree."""

    def __init__(self, net: BayesianNetwork, composite: CompositeJoinTree,
                 index: TranslationIndex):
        self.net = net
        self.composite = composite
        self.index = index

        self._phi = [self._materialize(i) for i in range(len(composite.cliques))]
        self._sep: dict[tuple[int, int], tuple[str, ...]] = {}
        for a, b, sep, _ in composite.edges:
            self._sep[(a, b)] = sep
            self._sep[(b, a)] = sep

        order = [composite.root_clique]
        parent: dict[int, int | None] = {composite.root_clique: None}
        for c in order:
            for _, n in composite.neighbors[c]:
                if n not in parent:
                    parent[n] = c
                    order.append(n)
        self._order = order
        self._parent = parent

        self._messages: dict[tuple[int, int], tuple[Factor, float]] = {}
        self._evidence: dict[str, str] = {}
        self._expanded: set[str] = set()
        self._epoch = 0
        self._synced = {lvl: -1 for lvl in composite.levels}
        self._counters = {lvl: 0 for lvl in composite.levels}
        self._impossible = False
        self._likelihood = 1.0

        if self.propagate("global").impossible:
            raise VerificationError("initial calibration had zero mass")
        self._counters = {lvl: 0 for lvl in composite.levels}

    def _materialize(self, i: int) -> Factor:
        members = self.composite.cliques[i]
        shape = tuple(self.net.card(v) for v in members)
        phi = Factor(members, np.ones(shape))
        for v, site in self.composite.family_site.items():
            if site == i:
                phi = multiply(phi, self.net.cpts[v]).project(members)
        return phi

    def _indicator(self, var: str, state: str) -> Factor:
        labels = self.net.domains[var]
        one_hot = np.zeros(len(labels))
        one_hot[labels.index(state)] = 1.0
        return Factor((var,), one_hot)

    def _content(self, i: int) -> Factor:
        out = self._phi[i]
        for var, state in self._evidence.items():
            if self.composite.query_site[var] == i:
                out = multiply(out, self._indicator(var, state))
        return out

    def _inbound(self, i: int, skip: int | None, staged) -> list[Factor]:
        msgs = []
        for _, n in self.composite.neighbors[i]:
            if n == skip:
                continue
            entry = staged.get((n, i)) or self._messages.get((n, i))
            if entry is None:
                raise VerificationError(f"missing message {n} -> {i}")
            msgs.append(entry[0])
        return msgs

    def _message(self, i: int, j: int, staged):
        """Fresh message i -> j, or None when its mass is zero."""
        prod = self._content(i)
        for m in self._inbound(i, j, staged):
            prod = multiply(prod, m)
        raw = prod.project(self._sep[(i, j)])
        z = raw.total()
        if z == 0.0:
            return None
        return Factor(raw.scope, raw.values / z), z

    def _belief(self, i: int, staged=None) -> Factor:
        staged = staged or {}
        out = self._content(i)
        for m in self._inbound(i, None, staged):
            out = multiply(out, m)
        return out

    # -- scope handling -------------------------------------------------

    def _holds_evidence(self, level: str) -> bool:
        return any(
            self.composite.home_level[v] == level for v in self._evidence
        )

    def _effective_levels(self, requested) -> set[str]:
        levels = set(requested)
        levels.update(
            lvl for lvl in self.composite.levels if self._holds_evidence(lvl)
        )
        closed: set[str] = set()
        for lvl in levels:
            while lvl is not None:
                closed.add(lvl)
                lvl = self.composite.level_parent[lvl]
        return closed

    def visible_levels(self) -> set[str]:
        return {""} | self._expanded

    def _resolve_scope(self, scope) -> set[str]:
        if scope == "global":
            return set(self.composite.levels)
        if scope == "visible":
            return self.visible_levels()
        if isinstance(scope, str):
            if scope not in self.composite.levels:
                raise UnknownVariableError(f"unknown level {scope!r}")
            return {scope}
        return {self._check_level(lvl) for lvl in scope}

    def _check_level(self, lvl: str) -> str:
        if lvl not in self.composite.levels:
            raise UnknownVariableError(f"unknown level {lvl!r}")
        return lvl

    # -- mutations ------------------------------------------------------

    def assert_evidence(self, var: str, state: str) -> None:
        self.validate_assertion(var, state)
        self._evidence[var] = state
        self._epoch += 1
        self._impossible = False

    def retract_evidence(self, var: str) -> None:
        if var not in self.net.domains:
            raise UnknownVariableError(f"unknown variable {var!r}")
        if var in self._evidence:
            del self._evidence[var]
            self._epoch += 1
            self._impossible = False

    def propagate(self, scope="visible") -> ActionResult:
        """Collect/distribute over the scoped levels; commit on success.

        Returns a result whose `impossible` flag is set when the evidence
        has zero probability; in that case no message is committed and
        the session's cached state is exactly what it was before.
        """
        effective = self._effective_levels(self._resolve_scope(scope))
        in_scope = [
            c for c in self._order
            if self.composite.clique_level[c] in effective
        ]
        scoped = set(in_scope)
        staged: dict[tuple[int, int], tuple[Factor, float]] = {}
        delta = {lvl: 0 for lvl in self.composite.levels}

        for c in reversed(in_scope):
            p = self._parent[c]
            if p is None:
                continue
            entry = self._message(c, p, staged)
            if entry is None:
                return self._fail()
            staged[(c, p)] = entry
            delta[self.composite.clique_level[c]] += 1

        root = self.composite.root_clique
        root_belief = self._belief(root, staged)
        if root_belief.total() == 0.0:
            return self._fail()

        for c in in_scope:
            p = self._parent[c]
            if p is None:
                continue
            if p not in scoped:
                raise VerificationError("scope closure lost a parent clique")
            entry = self._message(p, c, staged)
            if entry is None:
                return self._fail()
            staged[(p, c)] = entry
            delta[self.composite.clique_level[p]] += 1

        self._commit(staged, delta, effective)
        self._likelihood = self._evidence_mass()
        return ActionResult("propagated")

    def expand(self, component: str) -> ActionResult:
        """Open a refinement; refresh its level from the cached upper state."""
        link = self.composite.links.get(component)
        if link is None:
            if component in self.index.component_spec:
                raise NetworkStructureError(
                    f"component {component!r} has no refinement"
                )
            raise UnknownVariableError(f"unknown component {component!r}")
        parent_level = self.composite.level_parent[component]
        if parent_level != "" and parent_level not in self._expanded:
            raise HiddenVariableError(
                f"expand {parent_level!r} before {component!r}",
                component=parent_level,
            )
        if component in self._expanded:
            return ActionResult("already-expanded")
        self._expanded.add(component)
        if self._synced[component] == self._epoch:
            return ActionResult("expanded")

        chain = []
        lvl = parent_level
        while lvl is not None:
            chain.append(lvl)
            lvl = self.composite.level_parent[lvl]
        if any(self._synced[lvl] != self._epoch for lvl in chain):
            result = self.propagate({component})
            return ActionResult("expanded", impossible=result.impossible)

        staged: dict[tuple[int, int], tuple[Factor, float]] = {}
        delta = {lvl: 0 for lvl in self.composite.levels}
        for c in self._order:
            if self.composite.clique_level[c] != component:
                continue
            p = self._parent[c]
            entry = self._message(p, c, staged)
            if entry is None:
                return self._fail()
            staged[(p, c)] = entry
            delta[self.composite.clique_level[p]] += 1
        self._commit(staged, delta, {component})
        return ActionResult("expanded")

    def collapse(self, component: str) -> ActionResult:
        """Iconify a refinement; its evidence stays latent."""
        if component not in self.composite.links:
            if component in self.index.component_spec:
                raise NetworkStructureError(
                    f"component {component!r} has no refinement"
                )
            raise UnknownVariableError(f"unknown component {component!r}")
        if component not in self._expanded:
            return ActionResult("already-collapsed")
        dropped = {component} | {
            lvl for lvl in self._expanded if self._descends(lvl, component)
        }
        self._expanded -= dropped
        for lvl in dropped:
            self._synced[lvl] = -1
        return ActionResult("collapsed")

    def _descends(self, level: str, ancestor: str) -> bool:
        lvl = self.composite.level_parent[level]
        while lvl is not None:
            if lvl == ancestor:
                return True
            lvl = self.composite.level_parent[lvl]
        return False

    def _fail(self) -> ActionResult:
        self._impossible = True
        return ActionResult("impossible-evidence", impossible=True)

    def _commit(self, staged, delta, levels) -> None:
        self._messages.update(staged)
        for lvl, n in delta.items():
            self._counters[lvl] += n
        for lvl in levels:
            self._synced[lvl] = self._epoch
        self._impossible = False

    def _evidence_mass(self) -> float:
        mass = self._belief(self.composite.root_clique).total()
        for c in self._order:
            p = self._parent[c]
            if p is not None:
                mass *= self._messages[(c, p)][1]
        return mass

    # -- queries --------------------------------------------------------

    def _require_visible(self, var: str) -> str:
        if var not in self.net.domains:
            raise UnknownVariableError(f"unknown variable {var!r}")
        home = self.composite.home_level[var]
        if home != "" and home not in self._expanded:
            raise HiddenVariableError(
                f"variable {var!r} is hidden; expand {home!r} first",
                component=home,
            )
        return home

    def validate_assertion(self, var: str, state: str) -> None:
        """Run every assert_evidence check without mutating anything."""
        self._require_visible(var)
        if state not in self.net.domains[var]:
            raise UnknownVariableError(
                f"state {state!r} not in domain of {var!r}"
            )

    def posterior(self, var: str) -> tuple[float, ...]:
        home = self._require_visible(var)
        if self._impossible:
            raise ImpossibleEvidenceError("evidence has zero probability")
        if self._synced[home] != self._epoch:
            raise DirtyScopeError(
                f"level {home or '(top)'!r} has unpropagated evidence"
            )
        site = self.composite.query_site[var]
        belief = self._belief(site).project((var,)).normalized()
        if DEBUG_CROSSCHECK:
            for i, members in enumerate(self.composite.cliques):
                lvl = self.composite.clique_level[i]
                if var not in members or self._synced[lvl] != self._epoch:
                    continue
                other = self._belief(i).project((var,)).normalized()
                if not np.allclose(other.values, belief.values,
                                   atol=CONSISTENCY_TOL):
                    raise VerificationError(
                        f"cliques disagree on posterior of {var!r}"
                    )
        return tuple(float(p) for p in belief.values)

    def visible_variables(self) -> tuple[str, ...]:
        vis = self.visible_levels()
        return tuple(
            sorted(v for v in self.net.variables
                   if self.composite.home_level[v] in vis)
        )

    def dirty_levels(self) -> tuple[str, ...]:
        return tuple(
            sorted(lvl for lvl in self.visible_levels()
                   if self._synced[lvl] != self._epoch)
        )

    def diagnose(self) -> PosteriorReport:
        """Ranked posterior over every visible mode variable."""
        if self._impossible:
            return PosteriorReport((), True, 0.0)
        entries = []
        vis = self.visible_levels()
        for path, var in self.index.mode_of_component.items():
            if self.composite.home_level[var] not in vis:
                continue
            probs = self.posterior(var)
            states = self.net.domains[var]
            ok = _designated_ok(states)
            entries.append(ReportEntry(
                path, var, states, probs, ok, probs[states.index(ok)]
            ))
        entries.sort(key=lambda e: (e.ok_probability, e.variable))
        return PosteriorReport(tuple(entries), False, self._likelihood)

    # -- introspection --------------------------------------------------

    @property
    def evidence(self) -> dict[str, str]:
        return dict(self._evidence)

    @property
    def expanded(self) -> tuple[str, ...]:
        return tuple(sorted(self._expanded))

    @property
    def counters(self) -> dict[str, int]:
        return dict(self._counters)

    @property
    def impossible(self) -> bool:
        return self._impossible

    @property
    def likelihood(self) -> float:
        return 0.0 if self._impossible else self._likelihood

    def separator_consistency(self) -> float:
        """Largest disagreement between endpoint marginals, for checks."""
        worst = 0.0
        for a, b, sep, _ in self.composite.edges:
            left = self._belief(a).project(sep).normalized()
            right = self._belief(b).project(sep).normalized()
            worst = max(worst, float(np.abs(left.values - right.values).max()))
        return worst
