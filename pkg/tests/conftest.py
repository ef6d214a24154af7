"""Shared fixtures: canned schematic documents plus seeded generators.

The random generators are deliberately small (a handful of binary gates,
at most one refinement level) so that full joint enumeration stays cheap
and every property can be checked against it.
"""

import itertools
import json
import random
from pathlib import Path

import numpy as np
import pytest

from hierax.network import BayesianNetwork
from hierax.oracle import condition_joint, enumerate_joint
from hierax.pipeline import build_model
from hierax.schematic import parse_document, validate_schematic

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

BIT = ["0", "1"]


def load_fixture(name: str) -> dict:
    return json.loads((FIXTURE_DIR / name).read_text())


@pytest.fixture
def f1_doc():
    return load_fixture("f1_two_gate.json")


@pytest.fixture
def f2_doc():
    return load_fixture("f2_xor_hier.json")


@pytest.fixture
def f3_doc():
    return load_fixture("f3_buffer.json")


@pytest.fixture(params=["f1_two_gate.json", "f2_xor_hier.json", "f3_buffer.json"])
def any_doc(request):
    return load_fixture(request.param)


def buffer_component(cid: str, port: str) -> dict:
    rows = []
    for b in BIT:
        rows.append([b, "ok", b])
        rows.append([b, "broken", "0"])
    return {
        "id": cid,
        "inputs": [{"name": port, "states": BIT}],
        "output": {"name": "out", "states": BIT},
        "mode": {"states": ["ok", "broken"], "prior": [0.99, 0.01]},
        "behavior": {"table": rows},
    }


def refined_chain_doc(n: int) -> dict:
    """One refined component wrapping a buffer chain of length n.

    Handy geometry: for n == 1 the lower level is a single clique and
    the link stays unmerged; for n >= 2 the upper host is exactly the
    interface and dissolves into the lower one.
    """
    comps = [buffer_component("C0", "I")]
    conns = []
    for k in range(1, n):
        comps.append(buffer_component(f"C{k}", "a"))
        conns.append({"from": f"C{k - 1}.out", "to": f"C{k}.a"})
    inner = {
        "system_inputs": [{"name": "I", "states": BIT}],
        "components": comps,
        "connections": conns,
    }
    return {
        "system_inputs": [{"name": "I", "states": BIT, "prior": [0.5, 0.5]}],
        "components": [{
            "id": "W",
            "inputs": [{"name": "I", "states": BIT}],
            "output": {"name": "out", "states": BIT},
            "mode": {"states": ["ok", "broken"]},
            "refinement": {"schematic": inner, "abstraction": "any_broken"},
        }],
    }


# ---------------------------------------------------------------------------
# random Bayesian networks (for the transformation suite)
# ---------------------------------------------------------------------------


def random_network(rng: random.Random, max_nodes=6, max_states=3) -> BayesianNetwork:
    net = BayesianNetwork()
    n = rng.randint(2, max_nodes)
    for i in range(n):
        var = f"v{i}"
        card = rng.randint(2, max_states)
        pool = [f"v{j}" for j in range(i)]
        parents = sorted(rng.sample(pool, min(len(pool), rng.randint(0, 2))))
        shape = tuple(net.card(p) for p in parents) + (card,)
        cells = int(np.prod(shape))
        raw = np.array([rng.random() + 0.05 for _ in range(cells)]).reshape(shape)
        table = raw / raw.sum(axis=-1, keepdims=True)
        net.add_variable(var, [f"s{k}" for k in range(card)], parents, table)
    return net


# ---------------------------------------------------------------------------
# random schematic documents (for join-tree and inference suites)
# ---------------------------------------------------------------------------


def _gate_table(rng: random.Random, arity: int) -> list[list[str]]:
    """Full function table: random truth function when ok, stuck at 0 broken."""
    rows = []
    for combo in itertools.product(BIT, repeat=arity):
        rows.append([*combo, "ok", rng.choice(BIT)])
        rows.append([*combo, "broken", "0"])
    return rows


def _atomic(rng: random.Random, cid: str, ports: list[dict]) -> dict:
    p_broken = rng.choice([0.01, 0.02, 0.05, 0.1])
    return {
        "id": cid,
        "inputs": ports,
        "output": {"name": "out", "states": BIT},
        "mode": {"states": ["ok", "broken"], "prior": [1.0 - p_broken, p_broken]},
        "behavior": {"table": _gate_table(rng, len(ports))},
    }


def _chain_level(rng: random.Random, input_names: list[str], count: int):
    """Wire `count` gates so exactly one output is left unconsumed.

    Gate k>0 always eats the single pending output, so the level ends as a
    chain with optional side taps into system inputs or earlier outputs.
    """
    components = []
    connections = []
    pending = None
    produced = []
    for k in range(count):
        cid = f"G{k}"
        ports = []
        if k == 0:
            bound = rng.sample(input_names, rng.randint(1, min(2, len(input_names))))
            ports = [{"name": b, "states": BIT} for b in bound]
        else:
            ports.append({"name": "a", "states": BIT})
            connections.append({"from": pending, "to": f"{cid}.a"})
            if rng.random() < 0.6:
                name = rng.choice(input_names) if input_names else "a"
                if rng.random() < 0.5 and name not in ("a", "b"):
                    ports.append({"name": name, "states": BIT})
                else:
                    src = rng.choice(produced)
                    ports.append({"name": "b", "states": BIT})
                    connections.append({"from": src, "to": f"{cid}.b"})
        components.append(_atomic(rng, cid, ports))
        pending = f"{cid}.out"
        produced.append(pending)
    return components, connections


def _refine(rng: random.Random, component: dict, inner_count: int) -> dict:
    """Swap an atomic gate's behavior for an equivalent-shape refinement."""
    inner_inputs = [
        {"name": p["name"], "states": list(p["states"])} for p in component["inputs"]
    ]
    names = [p["name"] for p in inner_inputs]
    comps, conns = _chain_level(rng, names, inner_count)
    # the first inner gate must consume every interface input
    comps[0]["inputs"] = [dict(p) for p in inner_inputs]
    comps[0]["behavior"] = {"table": _gate_table(rng, len(inner_inputs))}
    refined = dict(component)
    del refined["behavior"]
    refined["mode"] = {"states": ["ok", "broken"]}
    refined["refinement"] = {
        "schematic": {
            "system_inputs": inner_inputs,
            "components": comps,
            "connections": conns,
        },
        "abstraction": "any_broken",
    }
    return refined


def random_schematic_doc(rng: random.Random, max_components=6) -> dict:
    """A valid document with at most `max_components` gates over two levels."""
    n_inputs = rng.randint(1, 3)
    input_names = [f"I{i + 1}" for i in range(n_inputs)]
    budget = rng.randint(2, max_components)
    n_top = rng.randint(1, min(3, budget))
    budget -= n_top

    components, connections = _chain_level(rng, input_names, n_top)
    for k in range(n_top):
        if budget >= 2 and rng.random() < 0.55:
            inner = rng.randint(2, min(3, budget))
            budget -= inner
            components[k] = _refine(rng, components[k], inner)

    system_inputs = []
    for n in input_names:
        entry = {"name": n, "states": list(BIT)}
        if rng.random() < 0.3:
            w = round(rng.uniform(0.2, 0.8), 2)
            entry["prior"] = [w, round(1.0 - w, 2)]
        system_inputs.append(entry)
    doc = {
        "system_inputs": system_inputs,
        "components": components,
        "connections": connections,
    }
    report = validate_schematic(parse_document(doc))
    assert report.ok, f"generator produced an invalid document: {report.violations}"
    return doc


def random_model(rng: random.Random, max_components=6):
    return build_model(random_schematic_doc(rng, max_components))


# ---------------------------------------------------------------------------
# enumeration yardstick
# ---------------------------------------------------------------------------


def oracle_posteriors(net: BayesianNetwork, evidence: dict[str, str]):
    return condition_joint(enumerate_joint(net), evidence)


def oracle_mass(net: BayesianNetwork, evidence: dict[str, str]) -> float:
    """Probability of the observation under the full joint."""
    joint = enumerate_joint(net)
    values = joint.values
    for var, label in evidence.items():
        k = joint.scope.index(var)
        values = np.take(values, [joint.state_index(var, label)], axis=k)
    return float(values.sum())


def random_evidence(rng: random.Random, net: BayesianNetwork, variables) -> dict:
    """Pick a satisfiable observation by sampling a world from the joint."""
    joint = enumerate_joint(net)
    flat = joint.values.reshape(-1)
    pick = rng.choices(range(flat.size), weights=flat, k=1)[0]
    world = np.unravel_index(pick, joint.values.shape)
    pool = list(variables)
    chosen = rng.sample(pool, rng.randint(1, len(pool)))
    out = {}
    for var in chosen:
        k = joint.scope.index(var)
        out[var] = joint.states[k][world[k]]
    return out
