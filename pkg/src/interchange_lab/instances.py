"""Named instance generators.

Rates default to 1; hyperedges of size 2 get the transposition law and
larger ones the uniform law unless ``law`` overrides it.
"""

from __future__ import annotations

import itertools
from pathlib import Path

import networkx as nx

from .model import Hyperedge, HypergraphInstance, PermutationLaw

GENERATORS = (
    "cycle",
    "path",
    "complete",
    "torus",
    "hypercube",
    "complete-uniform",
    "random-regular",
    "single-hyperedge",
    "three-cycle",
    "from-file",
)


def _law_for(size: int, law: str | None) -> PermutationLaw:
    if law is None:
        return PermutationLaw.transposition() if size == 2 else PermutationLaw.uniform()
    if law == "uniform":
        return PermutationLaw.uniform()
    if law == "transposition":
        return PermutationLaw.transposition()
    raise ValueError(f"unknown law override {law!r}")


def from_edge_list(n: int, edges, rate: float = 1.0, law: str | None = None, allow_small: bool = False) -> HypergraphInstance:
    es = tuple(Hyperedge(tuple(e), rate, _law_for(len(e), law)) for e in edges)
    return HypergraphInstance(n, es, allow_small=allow_small)


def from_networkx(g: nx.Graph, rate: float = 1.0, law: str | None = None) -> HypergraphInstance:
    g = nx.convert_node_labels_to_integers(g, ordering="sorted")
    return from_edge_list(g.number_of_nodes(), sorted(tuple(sorted(e)) for e in g.edges()), rate, law)


def cycle(n: int, **kw) -> HypergraphInstance:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return from_edge_list(n, [(i, (i + 1) % n) for i in range(n)], **kw)


def path(n: int, **kw) -> HypergraphInstance:
    if n < 2:
        raise ValueError("path needs n >= 2")
    return from_edge_list(n, [(i, i + 1) for i in range(n - 1)], **kw)


def complete(n: int, **kw) -> HypergraphInstance:
    return from_edge_list(n, list(itertools.combinations(range(n), 2)), **kw)


def torus(d: int, m: int, **kw) -> HypergraphInstance:
    """Discrete torus Z_m^d (m >= 3); vertex index is row-major in the coordinates."""
    if d < 1 or m < 3:
        raise ValueError("torus needs d >= 1 and m >= 3")
    n = m**d
    edges = set()
    for coords in itertools.product(range(m), repeat=d):
        u = _flat(coords, m)
        for axis in range(d):
            nb = list(coords)
            nb[axis] = (nb[axis] + 1) % m
            edges.add(tuple(sorted((u, _flat(nb, m)))))
    return from_edge_list(n, sorted(edges), **kw)


def _flat(coords, m: int) -> int:
    out = 0
    for c in coords:
        out = out * m + c
    return out


def hypercube(d: int, **kw) -> HypergraphInstance:
    n = 2**d
    edges = [(u, u ^ (1 << b)) for u in range(n) for b in range(d) if u < u ^ (1 << b)]
    return from_edge_list(n, sorted(edges), **kw)


def complete_uniform(n: int, s: int, **kw) -> HypergraphInstance:
    """All C(n, s) hyperedges of size s."""
    if not 2 <= s <= n:
        raise ValueError("complete-uniform needs 2 <= s <= n")
    return from_edge_list(n, list(itertools.combinations(range(n), s)), **kw)


def random_regular(d: int, n: int, seed: int = 0, **kw) -> HypergraphInstance:
    g = nx.random_regular_graph(d, n, seed=seed)
    return from_networkx(g, **kw)


def single_hyperedge(n: int, rate: float = 1.0, law: PermutationLaw | None = None) -> HypergraphInstance:
    return HypergraphInstance(n, (Hyperedge(tuple(range(n)), rate, law or PermutationLaw.uniform()),))


def three_cycle_law(vertices=(0, 1, 2, 3)) -> PermutationLaw:
    """Uniform law over the eight 3-cycles of a 4-element set."""
    verts = list(vertices)
    perms = []
    for perm in itertools.permutations(range(len(verts))):
        moved = [i for i in range(len(verts)) if perm[i] != i]
        if len(moved) == 3:
            perms.append(tuple(verts[perm[i]] for i in range(len(verts))))
    return PermutationLaw.explicit((p, 1.0 / len(perms)) for p in perms)


def three_cycle_instance() -> HypergraphInstance:
    """Four vertices, one hyperedge, a uniformly random 3-cycle per ring."""
    return single_hyperedge(4, law=three_cycle_law())


def generate_instance(name: str, params: dict | None = None) -> HypergraphInstance:
    """Build a named instance; ``params`` holds generator arguments plus ``rate``/``law``."""
    p = dict(params or {})
    kw = {key: p.pop(key) for key in ("rate", "law") if key in p}
    if name == "cycle":
        return cycle(int(p["n"]), **kw)
    if name == "path":
        return path(int(p["n"]), **kw)
    if name == "complete":
        return complete(int(p["n"]), **kw)
    if name == "torus":
        return torus(int(p["d"]), int(p["m"]), **kw)
    if name == "hypercube":
        return hypercube(int(p["d"]), **kw)
    if name == "complete-uniform":
        return complete_uniform(int(p["n"]), int(p["s"]), **kw)
    if name == "random-regular":
        return random_regular(int(p["d"]), int(p["n"]), int(p.get("seed", 0)), **kw)
    if name == "single-hyperedge":
        law = kw.get("law")
        if law == "three-cycle":
            return single_hyperedge(int(p["n"]), kw.get("rate", 1.0), three_cycle_law(range(int(p["n"]))))
        return single_hyperedge(int(p["n"]), kw.get("rate", 1.0), _law_for(int(p["n"]), law) if law else None)
    if name == "three-cycle":
        return three_cycle_instance()
    if name == "from-file":
        return HypergraphInstance.from_json(Path(p["path"]).read_text())
    raise ValueError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")


def parse_generator(text: str) -> tuple[str, dict]:
    """``"torus:d=2,m=4"`` -> ``("torus", {"d": "2", "m": "4"})``; bare ints fill ``n``."""
    name, _, rest = text.partition(":")
    params: dict = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if eq:
            params[key.strip()] = val.strip()
        else:
            params["n"] = key.strip()
    if "rate" in params:
        params["rate"] = float(params["rate"])
    return name.strip(), params
