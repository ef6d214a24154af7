"""Join trees, flat and stacked per hierarchy level.

The flat path is classical: moralize, triangulate with min-fill,
collect the maximal cliques along the elimination order, connect them
with a maximum-separator-weight spanning tree. Chordality of the
triangulated graph is re-checked with a maximum-cardinality-search test
that shares no code with the triangulator, and assembled trees are
verified (tree shape, coverage, running intersection) before release.

The composite builder stacks one join tree per hierarchy level: the
top level comes from the compiled network, each refinement level from
its pre-compilation fragment. A refined component's interface (its
input variables, hierarchical mode and output) is forced into a single
clique on both sides, and a link edge joins the two host cliques. A
host that carries nothing beyond the interface is redundant and is
dissolved into its counterpart: a bare lower host merges up into the
upper one, a bare upper host is swallowed by the lower one, which then
takes its place in the upper tree. Either way the surviving clique
serves both levels and the dissolved clique's tree edges become
crossings of the link.

Everything here is deterministic: ties in min-fill, clique ordering,
spanning-tree assembly and host-clique selection all break
lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import NotChordalError, UnknownVariableError, VerificationError
from .network import BayesianNetwork
from .translate import TranslationIndex
from .transform import compile_network


class MarkovGraph:
    """Simple undirected graph over variable ids."""

    def __init__(self, vertices=()):
        self.adj: dict[str, set[str]] = {v: set() for v in vertices}

    def add_vertex(self, v: str) -> None:
        self.adj.setdefault(v, set())

    def add_edge(self, a: str, b: str) -> None:
        if a == b:
            return
        for v in (a, b):
            if v not in self.adj:
                raise UnknownVariableError(f"unknown variable {v!r}")
        self.adj[a].add(b)
        self.adj[b].add(a)

    def has_edge(self, a: str, b: str) -> bool:
        return b in self.adj.get(a, ())

    def neighbors(self, v: str) -> set[str]:
        return self.adj[v]

    def complete(self, vs) -> None:
        vs = list(vs)
        for i, a in enumerate(vs):
            for b in vs[i + 1:]:
                self.add_edge(a, b)

    def copy(self) -> "MarkovGraph":
        g = MarkovGraph()
        g.adj = {v: set(nb) for v, nb in self.adj.items()}
        return g

    @property
    def vertices(self) -> tuple[str, ...]:
        return tuple(self.adj)

    def edges(self) -> tuple[tuple[str, str], ...]:
        out = set()
        for a, nbrs in self.adj.items():
            for b in nbrs:
                out.add((a, b) if a < b else (b, a))
        return tuple(sorted(out))


def moralize(net: BayesianNetwork, forced=()) -> MarkovGraph:
    """Undirected skeleton plus marriages, plus forced complete subsets.

    Forced sets stand in for the dummy-node construction: they guarantee
    that some clique of the eventual join tree contains the whole set.
    """
    g = MarkovGraph(net.variables)
    for v in net.variables:
        g.complete(net.parents[v] + (v,))
    for group in forced:
        for v in group:
            if v not in g.adj:
                raise UnknownVariableError(f"forced variable {v!r} not in network")
        g.complete(group)
    return g


def triangulate(g: MarkovGraph):
    """Min-fill triangulation; returns (chordal graph, elimination order).

    Ties on fill count break by variable id so repeated runs agree.
    """
    work = g.copy()
    chordal = g.copy()
    order: list[str] = []
    remaining = sorted(work.adj)
    while remaining:
        best = None
        for v in remaining:
            nbrs = sorted(work.adj[v])
            fill = sum(
                1
                for i, a in enumerate(nbrs)
                for b in nbrs[i + 1:]
                if not work.has_edge(a, b)
            )
            if best is None or (fill, v) < best[:2]:
                best = (fill, v, nbrs)
        _, v, nbrs = best
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1:]:
                work.add_edge(a, b)
                chordal.add_edge(a, b)
        for a in nbrs:
            work.adj[a].discard(v)
        del work.adj[v]
        order.append(v)
        remaining.remove(v)
    return chordal, tuple(order)


def is_chordal(g: MarkovGraph) -> bool:
    """Maximum-cardinality-search chordality test.

    Independent of the triangulator: visits vertices by descending count
    of already-visited neighbors, then checks that each vertex's earlier
    neighborhood is covered by its most recently visited earlier neighbor.
    """
    weight = {v: 0 for v in g.adj}
    position: dict[str, int] = {}
    visit: list[str] = []
    while len(visit) < len(weight):
        v = min(
            (u for u in weight if u not in position),
            key=lambda u: (-weight[u], u),
        )
        position[v] = len(visit)
        visit.append(v)
        for n in g.adj[v]:
            if n not in position:
                weight[n] += 1
    for v in visit:
        earlier = [u for u in g.adj[v] if position[u] < position[v]]
        if not earlier:
            continue
        u = max(earlier, key=lambda x: position[x])
        for w in earlier:
            if w != u and not g.has_edge(u, w):
                return False
    return True


@dataclass(frozen=True)
class JoinTree:
    """Tree of maximal cliques with separators on the edges."""

    cliques: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[int, int, tuple[str, ...]], ...]
    assignment: dict[str, int] = field(default_factory=dict)

    def variables(self) -> tuple[str, ...]:
        return tuple(sorted({v for c in self.cliques for v in c}))

    def containing(self, group) -> list[int]:
        need = set(group)
        return [i for i, c in enumerate(self.cliques) if need <= set(c)]


class _DisjointSets:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def extract_cliques_and_assemble(chordal: MarkovGraph, order) -> JoinTree:
    """Maximal cliques along the elimination order, Kruskal-joined.

    Spanning-tree candidates are sorted by descending separator weight,
    then by clique index, so the result is reproducible. Zero-weight
    edges are allowed, which keeps disconnected inputs in one tree.
    """
    if not is_chordal(chordal):
        raise NotChordalError("clique extraction requires a chordal graph")
    remaining = set(chordal.adj)
    kept: list[frozenset[str]] = []
    for v in order:
        cand = frozenset({v} | (chordal.adj[v] & remaining))
        remaining.discard(v)
        if not any(cand <= k for k in kept):
            kept.append(cand)
    cliques = tuple(sorted(tuple(sorted(c)) for c in kept))

    n = len(cliques)
    pairs = sorted(
        ((i, j) for i in range(n) for j in range(i + 1, n)),
        key=lambda ij: (-len(set(cliques[ij[0]]) & set(cliques[ij[1]])), ij),
    )
    dsu = _DisjointSets(n)
    edges = []
    for i, j in pairs:
        if dsu.union(i, j):
            sep = tuple(sorted(set(cliques[i]) & set(cliques[j])))
            edges.append((i, j, sep))
        if len(edges) == n - 1:
            break
    return JoinTree(cliques, tuple(sorted(edges)))


def assign_families(jt: JoinTree, net: BayesianNetwork) -> JoinTree:
    """Pick the clique hosting each variable's family (smallest, then lex)."""
    assignment: dict[str, int] = {}
    for v in net.variables:
        family = set(net.parents[v]) | {v}
        hosts = jt.containing(family)
        if not hosts:
            raise VerificationError(f"family of {v!r} not covered by any clique")
        assignment[v] = min(hosts, key=lambda i: (len(jt.cliques[i]), jt.cliques[i]))
    return replace(jt, assignment=assignment)


def _connected(n: int, links) -> bool:
    if n == 0:
        return True
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in links:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    stack = [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == n


def _verify_structure(cliques, edges, net=None, forced=()) -> list[str]:
    """Shared checks for flat trees and composite unions."""
    problems: list[str] = []
    n = len(cliques)
    if len(edges) != n - 1:
        problems.append(f"edge count {len(edges)} does not match {n} cliques")
    if not _connected(n, [(a, b) for a, b, *_ in edges]):
        problems.append("clique graph is not connected")
    for a, b, sep in edges:
        want = tuple(sorted(set(cliques[a]) & set(cliques[b])))
        if sep != want:
            problems.append(f"separator of ({a},{b}) is {sep}, expected {want}")
    variables = sorted({v for c in cliques for v in c})
    for v in variables:
        holders = [i for i, c in enumerate(cliques) if v in c]
        incident = [
            (a, b) for a, b, *_ in edges if v in cliques[a] and v in cliques[b]
        ]
        index = {i: k for k, i in enumerate(holders)}
        if not _connected(len(holders), [(index[a], index[b]) for a, b in incident]):
            problems.append(f"running intersection fails for {v!r}")
    if net is not None:
        for v in net.variables:
            family = set(net.parents[v]) | {v}
            if not any(family <= set(c) for c in cliques):
                problems.append(f"family of {v!r} not covered")
    for group in forced:
        if not any(set(group) <= set(c) for c in cliques):
            problems.append(f"forced set {tuple(sorted(group))} not covered")
    return problems


def verify_join_tree(jt: JoinTree, net: BayesianNetwork | None = None,
                     forced=()) -> list[str]:
    """Validity report; empty means the tree holds up.

    Checks tree shape, separator contents, running intersection, family
    coverage against the network when one is supplied, and containment
    of every forced set. Violations come back as data, not exceptions.
    """
    problems = _verify_structure(jt.cliques, jt.edges, net, forced)
    for v, i in jt.assignment.items():
        if net is not None:
            family = set(net.parents[v]) | {v}
            if not family <= set(jt.cliques[i]):
                problems.append(f"assigned clique {i} misses family of {v!r}")
    return problems


def build_join_tree(net: BayesianNetwork, forced=()) -> JoinTree:
    """Moralize, triangulate, assemble and verify in one step."""
    moral = moralize(net, forced)
    chordal, order = triangulate(moral)
    if not is_chordal(chordal):
        raise VerificationError("triangulation produced a non-chordal graph")
    jt = assign_families(extract_cliques_and_assemble(chordal, order), net)
    problems = verify_join_tree(jt, net, forced)
    if problems:
        raise VerificationError("; ".join(problems))
    return jt


@dataclass(frozen=True)
class Link:
    """Crossing between an upper-level clique and a refinement's tree."""

    component: str
    upper_level: str
    lower_level: str
    interface: tuple[str, ...]
    upper_clique: int
    lower_clique: int
    crossings: tuple[tuple[int, int], ...]
    merged: bool


@dataclass(frozen=True)
class CompositeJoinTree:
    """Join trees of every hierarchy level, linked into one union tree.

    Clique indices are global across levels. `family_site` maps each
    variable of the full uncompiled network to the clique that hosts its
    CPT; `query_site` maps each variable to its uppermost, smallest
    clique (where evidence enters and posteriors are read).
    """

    levels: tuple[str, ...]
    level_parent: dict[str, str | None]
    level_cliques: dict[str, tuple[int, ...]]
    cliques: tuple[tuple[str, ...], ...]
    clique_level: tuple[str, ...]
    edges: tuple[tuple[int, int, tuple[str, ...], str], ...]
    links: dict[str, Link]
    root_level: str
    root_clique: int
    family_site: dict[str, int]
    query_site: dict[str, int]
    home_level: dict[str, str]
    neighbors: dict[int, tuple[tuple[int, int], ...]]

    def separator(self, edge_index: int) -> tuple[str, ...]:
        return self.edges[edge_index][2]

    def level_of_component(self, path: str) -> str:
        return path if path in self.levels else self.root_level


def _host_clique(cliques, indices, interface):
    need = set(interface)
    hosts = [i for i in indices if need <= set(cliques[i])]
    if not hosts:
        return None
    return min(hosts, key=lambda i: (len(cliques[i]), cliques[i]))


def _level_tree(network, forced):
    moral = moralize(network, forced)
    chordal, order = triangulate(moral)
    if not is_chordal(chordal):
        raise VerificationError("triangulation produced a non-chordal graph")
    return extract_cliques_and_assemble(chordal, order)


def verify_composite(comp: CompositeJoinTree, net: BayesianNetwork) -> list[str]:
    """Check the union structure against the full uncompiled network."""
    problems = _verify_structure(
        comp.cliques,
        [(a, b, sep) for a, b, sep, _ in comp.edges],
        net,
        [link.interface for link in comp.links.values()],
    )
    for path, link in comp.links.items():
        for idx in (link.upper_clique, link.lower_clique):
            if not set(link.interface) <= set(comp.cliques[idx]):
                problems.append(
                    f"link for {path!r}: interface not inside clique {idx}"
                )
    for v, i in comp.family_site.items():
        family = set(net.parents[v]) | {v}
        if not family <= set(comp.cliques[i]):
            problems.append(f"family site of {v!r} misses its family")
    for v, i in comp.query_site.items():
        if v not in comp.cliques[i]:
            problems.append(f"query site of {v!r} does not contain it")
    return problems


def build_composite(net: BayesianNetwork, idx: TranslationIndex,
                    compiled: BayesianNetwork | None = None,
                    fragments=None) -> CompositeJoinTree:
    """Stack per-level join trees and link them at the interfaces.

    The top level is built from the compiled network; every refinement
    level from its fragment snapshot, with its own interface and the
    interfaces of directly nested refinements forced into cliques. The
    assembled union is verified against the uncompiled network before it
    is returned; any violation is a construction bug and raises.

    Callers that already ran the compiler can pass its outputs to avoid
    compiling twice.
    """
    if compiled is None or fragments is None:
        compiled, fragments = compile_network(net, idx)
    refined = sorted(idx.refined, key=lambda p: (idx.component_depth[p], p))
    levels = ("",) + tuple(refined)

    level_parent: dict[str, str | None] = {"": None}
    for p in refined:
        parent = next((q for q in refined if p in idx.refined[q]), "")
        level_parent[p] = parent

    level_networks = {"": compiled}
    level_forced: dict[str, list[tuple[str, ...]]] = {lvl: [] for lvl in levels}
    for p in refined:
        level_networks[p] = fragments[p].network
        level_forced[p].append(idx.interface_of(p))
        for c in fragments[p].nested:
            level_forced[p].append(idx.interface_of(c))
        level_forced[level_parent[p]].append(idx.interface_of(p))

    cliques: list[tuple[str, ...]] = []
    clique_level: list[str] = []
    level_cliques: dict[str, tuple[int, ...]] = {}
    edges: list[tuple[int, int, tuple[str, ...], str]] = []
    for lvl in levels:
        tree = _level_tree(level_networks[lvl], level_forced[lvl])
        offset = len(cliques)
        cliques.extend(tree.cliques)
        clique_level.extend([lvl] * len(tree.cliques))
        level_cliques[lvl] = tuple(range(offset, len(cliques)))
        for a, b, sep in tree.edges:
            edges.append((offset + a, offset + b, sep, "intra"))

    links: dict[str, Link] = {}
    removed: set[int] = set()

    def nested_hosted_without(p: str, skip: int) -> bool:
        return all(
            _host_clique(
                cliques,
                [i for i in level_cliques[p] if i != skip],
                idx.interface_of(c),
            ) is not None
            for c in fragments[p].nested
        )

    for p in refined:
        upper = level_parent[p]
        interface = tuple(sorted(idx.interface_of(p)))
        alive_upper = [i for i in level_cliques[upper] if i not in removed]
        delta_h = _host_clique(cliques, alive_upper, interface)
        delta_l = _host_clique(cliques, level_cliques[p], interface)
        if delta_h is None or delta_l is None:
            raise VerificationError(
                f"interface of {p!r} not present at both levels"
            )
        enough_below = len(level_cliques[p]) > 1
        if set(cliques[delta_l]) <= set(cliques[delta_h]) and enough_below:
            crossings = []
            fresh = []
            for a, b, sep, kind in edges:
                if delta_l in (a, b):
                    other = b if a == delta_l else a
                    crossings.append((delta_h, other))
                    fresh.append((delta_h, other, sep, "link"))
                else:
                    fresh.append((a, b, sep, kind))
            edges = fresh
            removed.add(delta_l)
            links[p] = Link(
                p, upper, p, interface, delta_h, delta_h,
                tuple(sorted(crossings)), True,
            )
        elif (
            set(cliques[delta_h]) <= set(cliques[delta_l])
            and enough_below
            and nested_hosted_without(p, delta_l)
            and all(
                delta_h not in (ln.upper_clique, ln.lower_clique)
                for ln in links.values()
            )
        ):
            # The upper host reduced to the bare interface. The lower
            # host swallows it and moves up a level, so the upper tree
            # stays connected through it and the lower tree hangs off it
            # across the link.
            crossings = []
            fresh = []
            for a, b, sep, kind in edges:
                if delta_h in (a, b):
                    other = b if a == delta_h else a
                    fresh.append((delta_l, other, sep, kind))
                elif delta_l in (a, b):
                    other = b if a == delta_l else a
                    crossings.append((delta_l, other))
                    fresh.append((delta_l, other, sep, "link"))
                else:
                    fresh.append((a, b, sep, kind))
            edges = fresh
            removed.add(delta_h)
            clique_level[delta_l] = upper
            level_cliques[upper] = tuple(
                i for i in level_cliques[upper] if i != delta_h
            ) + (delta_l,)
            level_cliques[p] = tuple(
                i for i in level_cliques[p] if i != delta_l
            )
            links[p] = Link(
                p, upper, p, interface, delta_l, delta_l,
                tuple(sorted(crossings)), True,
            )
        else:
            sep = tuple(sorted(set(cliques[delta_h]) & set(cliques[delta_l])))
            edges.append((delta_h, delta_l, sep, "link"))
            links[p] = Link(
                p, upper, p, interface, delta_h, delta_l,
                ((delta_h, delta_l),), False,
            )

    if removed:
        remap = {}
        fresh_cliques = []
        fresh_level = []
        for i, c in enumerate(cliques):
            if i in removed:
                continue
            remap[i] = len(fresh_cliques)
            fresh_cliques.append(c)
            fresh_level.append(clique_level[i])
        cliques = fresh_cliques
        clique_level = fresh_level
        edges = [(remap[a], remap[b], sep, kind) for a, b, sep, kind in edges]
        level_cliques = {
            lvl: tuple(remap[i] for i in ids if i not in removed)
            for lvl, ids in level_cliques.items()
        }
        links = {
            p: replace(
                ln,
                upper_clique=remap[ln.upper_clique],
                lower_clique=remap[ln.lower_clique],
                crossings=tuple(
                    sorted((remap[a], remap[b]) for a, b in ln.crossings)
                ),
            )
            for p, ln in links.items()
        }

    edges_t = tuple(
        sorted((a, b, sep, kind) if a < b else (b, a, sep, kind)
               for a, b, sep, kind in edges)
    )
    neighbors: dict[int, list[tuple[int, int]]] = {i: [] for i in range(len(cliques))}
    for e_ix, (a, b, _, _) in enumerate(edges_t):
        neighbors[a].append((e_ix, b))
        neighbors[b].append((e_ix, a))
    neighbors_t = {i: tuple(sorted(nb, key=lambda t: t[1])) for i, nb in neighbors.items()}

    rank = {lvl: k for k, lvl in enumerate(levels)}

    def pick_site(group) -> int | None:
        need = set(group)
        hosts = [i for i, c in enumerate(cliques) if need <= set(c)]
        if not hosts:
            return None
        return min(
            hosts, key=lambda i: (rank[clique_level[i]], len(cliques[i]), cliques[i])
        )

    # A variable's home level comes from its dot-path, not from clique
    # placement: a merged clique can host lower-level variables inside
    # the upper tree, and those must stay hidden until their refinement
    # is expanded.
    interface_sets = {q: set(idx.interface_of(q)) for q in refined}
    deepest_first = sorted(refined, key=len, reverse=True)

    def home_of(v: str) -> str:
        for q in deepest_first:
            if v.startswith(q + ".") and v not in interface_sets[q]:
                return q
        return ""

    family_site: dict[str, int] = {}
    query_site: dict[str, int] = {}
    home_level: dict[str, str] = {}
    for v in net.variables:
        site = pick_site(set(net.parents[v]) | {v})
        if site is None:
            raise VerificationError(f"family of {v!r} not covered by any clique")
        family_site[v] = site
        query_site[v] = pick_site({v})
        home_level[v] = home_of(v)

    root_clique = (
        links[refined[0]].upper_clique if refined else level_cliques[""][0]
    )

    comp = CompositeJoinTree(
        levels=levels,
        level_parent=level_parent,
        level_cliques=level_cliques,
        cliques=tuple(cliques),
        clique_level=tuple(clique_level),
        edges=edges_t,
        links=links,
        root_level="",
        root_clique=root_clique,
        family_site=family_site,
        query_site=query_site,
        home_level=home_level,
        neighbors=neighbors_t,
    )
    problems = verify_composite(comp, net)
    if problems:
        raise VerificationError("; ".join(problems))
    return comp


def outline(comp: CompositeJoinTree) -> str:
    """Textual dump of a composite tree for golden-file comparison."""
    lines: list[str] = []
    for lvl in comp.levels:
        label = lvl if lvl else "(top)"
        lines.append(f"level {label}")
        for i in comp.level_cliques[lvl]:
            lines.append(f"  clique {i}: {' '.join(comp.cliques[i])}")
        for a, b, sep, kind in comp.edges:
            if kind == "intra" and comp.clique_level[a] == lvl:
                lines.append(f"  edge {a}-{b} sep {' '.join(sep) if sep else '-'}")
    for p in sorted(comp.links):
        ln = comp.links[p]
        tag = " merged" if ln.merged else ""
        lines.append(f"link {p}{tag}")
        lines.append(f"  interface {' '.join(ln.interface)}")
        for a, b in ln.crossings:
            lines.append(f"  crossing {a}-{b}")
    return "\n".join(lines) + "\n"
