"""NEAT genomes: node and connection genes, structural mutation, crossover.

Node ids ``0..n_in-1`` are inputs and ``n_in..n_in+n_out-1`` outputs; hidden
nodes get ids from the :class:`InnovationRegistry`. Connection genes are keyed
by innovation number, and a genome never holds two genes for the same
(src, dst) pair.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

INPUT, OUTPUT, HIDDEN = "input", "output", "hidden"


class StructureError(RuntimeError):
    """The enabled connections of a genome contain a cycle."""


@dataclass(frozen=True)
class NodeGene:
    id: int
    kind: str
    bias: float = 0.0


@dataclass(frozen=True)
class ConnectionGene:
    innovation: int
    src: int
    dst: int
    weight: float
    enabled: bool = True


@dataclass
class Genome:
    n_inputs: int
    n_outputs: int
    nodes: dict[int, NodeGene]
    connections: dict[int, ConnectionGene]
    fitness: float | None = None

    @property
    def input_ids(self) -> range:
        return range(self.n_inputs)

    @property
    def output_ids(self) -> range:
        return range(self.n_inputs, self.n_inputs + self.n_outputs)

    def hidden_ids(self) -> list[int]:
        return [k for k, n in self.nodes.items() if n.kind == HIDDEN]

    def copy(self) -> Genome:
        return Genome(self.n_inputs, self.n_outputs, dict(self.nodes), dict(self.connections), self.fitness)

    def pair_index(self) -> dict[tuple[int, int], ConnectionGene]:
        return {(c.src, c.dst): c for c in self.connections.values()}

    def enabled_edges(self) -> list[tuple[int, int]]:
        return [(c.src, c.dst) for c in self.connections.values() if c.enabled]


class InnovationRegistry:
    """Hands out node ids and innovation numbers.

    Within one generation the same structural event (a new (src, dst)
    connection, or splitting a given connection) gets the same numbers in
    every genome; :meth:`new_generation` forgets those events while the
    counters keep increasing.
    """

    def __init__(self, next_node: int, next_innovation: int) -> None:
        self.next_node = next_node
        self.next_innovation = next_innovation
        self._connections: dict[tuple[int, int], int] = {}
        self._splits: dict[int, int] = {}

    def new_generation(self) -> None:
        self._connections.clear()
        self._splits.clear()

    def connection(self, src: int, dst: int) -> int:
        key = (src, dst)
        if key not in self._connections:
            self._connections[key] = self.next_innovation
            self.next_innovation += 1
        return self._connections[key]

    def fresh_node(self) -> int:
        self.next_node += 1
        return self.next_node - 1

    def split(self, innovation: int) -> int:
        """Hidden node id for splitting connection ``innovation``."""
        if innovation not in self._splits:
            self._splits[innovation] = self.fresh_node()
        return self._splits[innovation]


@dataclass(frozen=True)
class MutationRates:
    conn_add: float = 0.5
    conn_delete: float = 0.5
    node_add: float = 0.2
    node_delete: float = 0.2
    weight_mutate: float = 0.8
    bias_mutate: float = 0.7
    weight_replace: float = 0.1
    mutate_sigma: float = 0.5
    replace_range: float = 2.0
    init_range: float = 1.0
    weight_limit: float = 8.0


def initial_genome(
    n_inputs: int, n_outputs: int, registry: InnovationRegistry, rng: np.random.Generator, init_range: float = 1.0
) -> Genome:
    """Fully connected input -> output, weights uniform in [-init_range, init_range], zero biases."""
    nodes = {i: NodeGene(i, INPUT) for i in range(n_inputs)}
    nodes.update({o: NodeGene(o, OUTPUT) for o in range(n_inputs, n_inputs + n_outputs)})
    conns = {}
    for i in range(n_inputs):
        for o in range(n_inputs, n_inputs + n_outputs):
            innov = registry.connection(i, o)
            conns[innov] = ConnectionGene(innov, i, o, float(rng.uniform(-init_range, init_range)))
    return Genome(n_inputs, n_outputs, nodes, conns)


def creates_cycle(edges: list[tuple[int, int]], src: int, dst: int) -> bool:
    """Would adding src -> dst to ``edges`` close a directed cycle?"""
    if src == dst:
        return True
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    stack, seen = [dst], {dst}
    while stack:
        node = stack.pop()
        for nxt in adj.get(node, ()):
            if nxt == src:
                return True
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def is_acyclic(genome: Genome) -> bool:
    try:
        _topological_order(genome)
    except StructureError:
        return False
    return True


def _topological_order(genome: Genome) -> list[int]:
    indeg = {k: 0 for k in genome.nodes if genome.nodes[k].kind != INPUT}
    adj: dict[int, list[int]] = {}
    for c in genome.connections.values():
        if c.enabled and c.dst in indeg:
            adj.setdefault(c.src, []).append(c.dst)
            if c.src in indeg:
                indeg[c.dst] += 1
    ready = sorted(k for k, d in indeg.items() if d == 0)
    order = []
    while ready:
        node = ready.pop()
        order.append(node)
        for nxt in adj.get(node, ()):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
    if len(order) != len(indeg):
        raise StructureError("enabled connections contain a cycle")
    return order


class Network:
    """Feed-forward evaluator compiled from a genome; every non-input node applies tanh."""

    def __init__(self, genome: Genome) -> None:
        incoming: dict[int, list[tuple[int, float]]] = {}
        for c in genome.connections.values():
            if c.enabled:
                incoming.setdefault(c.dst, []).append((c.src, c.weight))
        self.n_inputs = genome.n_inputs
        self.outputs = list(genome.output_ids)
        self.plan = [(k, genome.nodes[k].bias, incoming.get(k, [])) for k in _topological_order(genome)]

    def activate(self, inputs) -> list[float]:
        if len(inputs) != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} inputs, got {len(inputs)}")
        values = dict(enumerate(inputs))
        tanh = math.tanh
        for node, bias, links in self.plan:
            total = bias
            for src, w in links:
                total += w * values[src]
            values[node] = tanh(total)
        return [values[o] for o in self.outputs]


def activate(genome: Genome, inputs) -> list[float]:
    return Network(genome).activate(inputs)


# -- mutation ----------------------------------------------------------------


def _perturb(value: float, rates: MutationRates, rng: np.random.Generator) -> float:
    if rng.random() < rates.weight_replace:
        value = rng.uniform(-rates.replace_range, rates.replace_range)
    else:
        value += rates.mutate_sigma * rng.standard_normal()
    return float(min(max(value, -rates.weight_limit), rates.weight_limit))


def _add_node(g: Genome, registry: InnovationRegistry, rng: np.random.Generator) -> None:
    enabled = [c for c in g.connections.values() if c.enabled]
    if not enabled:
        return
    old = enabled[rng.integers(len(enabled))]
    node = registry.split(old.innovation)
    if node in g.nodes:
        node = registry.fresh_node()
    g.nodes[node] = NodeGene(node, HIDDEN, 0.0)
    g.connections[old.innovation] = replace(old, enabled=False)
    inn_in = registry.connection(old.src, node)
    inn_out = registry.connection(node, old.dst)
    g.connections[inn_in] = ConnectionGene(inn_in, old.src, node, 1.0)
    g.connections[inn_out] = ConnectionGene(inn_out, node, old.dst, old.weight)


def _delete_node(g: Genome, rng: np.random.Generator) -> None:
    hidden = g.hidden_ids()
    if not hidden:
        return
    node = hidden[rng.integers(len(hidden))]
    del g.nodes[node]
    for k in [k for k, c in g.connections.items() if node in (c.src, c.dst)]:
        del g.connections[k]


def _add_connection(g: Genome, registry: InnovationRegistry, rates: MutationRates, rng: np.random.Generator) -> None:
    sources = [k for k, n in g.nodes.items() if n.kind != OUTPUT]
    targets = [k for k, n in g.nodes.items() if n.kind != INPUT]
    src = sources[rng.integers(len(sources))]
    dst = targets[rng.integers(len(targets))]
    existing = g.pair_index().get((src, dst))
    if existing is not None and existing.enabled:
        return
    if creates_cycle(g.enabled_edges(), src, dst):
        return
    if existing is not None:
        g.connections[existing.innovation] = replace(existing, enabled=True)
        return
    innov = registry.connection(src, dst)
    w = float(rng.uniform(-rates.init_range, rates.init_range))
    g.connections[innov] = ConnectionGene(innov, src, dst, w)


def _delete_connection(g: Genome, rng: np.random.Generator) -> None:
    if not g.connections:
        return
    keys = list(g.connections)
    del g.connections[keys[rng.integers(len(keys))]]


def mutate(
    genome: Genome,
    registry: InnovationRegistry,
    rates: MutationRates,
    rng: np.random.Generator,
    attempts: Counter | None = None,
) -> Genome:
    """Return a mutated copy; each mutation class fires independently with its rate.

    ``attempts`` (if given) counts which structural mutations were tried.
    """
    g = genome.copy()
    g.fitness = None
    for name, rate, op in (
        ("node_add", rates.node_add, lambda: _add_node(g, registry, rng)),
        ("node_delete", rates.node_delete, lambda: _delete_node(g, rng)),
        ("conn_add", rates.conn_add, lambda: _add_connection(g, registry, rates, rng)),
        ("conn_delete", rates.conn_delete, lambda: _delete_connection(g, rng)),
    ):
        if rate > 0 and rng.random() < rate:
            if attempts is not None:
                attempts[name] += 1
            op()
    if rates.weight_mutate > 0:
        for k, c in g.connections.items():
            if rng.random() < rates.weight_mutate:
                g.connections[k] = replace(c, weight=_perturb(c.weight, rates, rng))
    if rates.bias_mutate > 0:
        for k, n in g.nodes.items():
            if n.kind != INPUT and rng.random() < rates.bias_mutate:
                g.nodes[k] = replace(n, bias=_perturb(n.bias, rates, rng))
    return g


def crossover(fitter: Genome, other: Genome, rng: np.random.Generator, reenable: float = 0.25) -> Genome:
    """Child with ``fitter``'s structure.

    Matching genes take attributes from a random parent; disjoint and excess
    genes come from ``fitter``. A gene disabled in either parent is enabled
    in the child with probability ``reenable``, unless that would close a
    cycle.
    """
    conns: dict[int, ConnectionGene] = {}
    to_enable = []
    for innov, gene in fitter.connections.items():
        partner = other.connections.get(innov)
        if partner is not None and rng.random() < 0.5:
            child = replace(gene, weight=partner.weight)
        else:
            child = gene
        disabled_somewhere = not gene.enabled or (partner is not None and not partner.enabled)
        if disabled_somewhere:
            if rng.random() < reenable:
                to_enable.append(innov)
            child = replace(child, enabled=False)
        conns[innov] = child
    nodes = {}
    for k, node in fitter.nodes.items():
        partner = other.nodes.get(k)
        nodes[k] = replace(node, bias=partner.bias) if partner is not None and rng.random() < 0.5 else node
    g = Genome(fitter.n_inputs, fitter.n_outputs, nodes, conns)
    for innov in to_enable:
        c = g.connections[innov]
        if not creates_cycle(g.enabled_edges(), c.src, c.dst):
            g.connections[innov] = replace(c, enabled=True)
    return g


def compatibility_distance(g1: Genome, g2: Genome, c1: float = 1.0, c2: float = 1.0, c3: float = 0.4) -> float:
    """c1*E/N + c2*D/N + c3*W over connection genes aligned by innovation.

    N is the larger gene count, or 1 when both genomes have fewer than 20
    genes; W is the mean absolute weight difference of matching genes.
    """
    a, b = g1.connections, g2.connections
    if not a and not b:
        return 0.0
    max_a = max(a, default=-1)
    max_b = max(b, default=-1)
    excess = disjoint = 0
    diffs = []
    for innov in a.keys() | b.keys():
        if innov in a and innov in b:
            diffs.append(abs(a[innov].weight - b[innov].weight))
        elif innov > (max_b if innov in a else max_a):
            excess += 1
        else:
            disjoint += 1
    n = max(len(a), len(b))
    if n < 20:
        n = 1
    w_bar = sum(diffs) / len(diffs) if diffs else 0.0
    return c1 * excess / n + c2 * disjoint / n + c3 * w_bar
