import random

import pytest

from autolock.circuits import c17, random_dag
from autolock.lock import Gene, Genotype, validate_genotype
from autolock.netlist import parse_bench

TINY_BENCH = """\
INPUT(a)
INPUT(b)
INPUT(c)
OUTPUT(n2)
n1 = AND(a, b)
n2 = OR(n1, c)
"""


@pytest.fixture
def tiny():
    return parse_bench(TINY_BENCH, name="tiny")


@pytest.fixture
def c17_net():
    return c17()


@pytest.fixture(scope="session")
def dag120():
    return random_dag(16, 120, 1)


@pytest.fixture(scope="session")
def dag200():
    return random_dag(32, 200, 2)


def tiny_gene(k=0):
    return Gene(fi="a", gi="n1", pini=0, fj="c", gj="n2", pinj=1, k=k)


# ------------------------------------------------------- independent oracles

def has_cycle(edges):
    """Plain recursive-free DFS cycle check over an edge list."""
    succ = {}
    for u, v in edges:
        succ.setdefault(u, []).append(v)
        succ.setdefault(v, [])
    state = {n: 0 for n in succ}
    for root in succ:
        if state[root]:
            continue
        stack = [(root, iter(succ[root]))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state[nxt] == 1:
                return True
            elif state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
    return False


def locked_edges(netlist, genes):
    """Edges of ``netlist`` plus the pass-through edges of each gene's MUX pair."""
    edges = [(src, g) for g, gate in netlist.gates.items() for src in gate.inputs]
    for gene in genes:
        edges += [(gene.fj, gene.gi), (gene.fi, gene.gj)]
    return edges


def genotype_ok(netlist, genotype):
    """From-scratch check: original wires, slot disjointness, acyclicity."""
    slots = set()
    for gene in genotype:
        for f, g, pin in ((gene.fi, gene.gi, gene.pini), (gene.fj, gene.gj, gene.pinj)):
            if g not in netlist.gates or netlist.gates[g].inputs[pin] != f:
                return False
            if (g, pin) in slots:
                return False
            slots.add((g, pin))
        if gene.fi == gene.fj or gene.k not in (0, 1):
            return False
    return not has_cycle(locked_edges(netlist, genotype))


def eval_bench_reference(netlist, assignment):
    """Slow reference evaluator written independently of autolock.netlist."""
    ops = {
        "AND": lambda v: int(all(v)), "NAND": lambda v: int(not all(v)),
        "OR": lambda v: int(any(v)), "NOR": lambda v: int(not any(v)),
        "XOR": lambda v: sum(v) % 2, "XNOR": lambda v: 1 - sum(v) % 2,
        "NOT": lambda v: 1 - v[0], "BUFF": lambda v: v[0],
        "MUX": lambda v: v[2] if v[0] else v[1],
    }
    env = dict(assignment)

    def value(name):
        if name not in env:
            gate = netlist.gates[name]
            env[name] = ops[gate.kind.value]([value(s) for s in gate.inputs])
        return env[name]

    return {po: value(po) for po in netlist.primary_outputs}


def leaky_genotype(netlist, key_length, seed):
    """Genes whose true drivers stay inside one gate-kind family and whose
    decoys always cross into the other family."""
    rng = random.Random(seed)
    side_a = [(g, p) for g, gate in netlist.gates.items() if g.startswith("a") for p in range(len(gate.inputs))]
    side_b = [(g, p) for g, gate in netlist.gates.items() if g.startswith("b") for p in range(len(gate.inputs))]
    genes = []
    used = set()
    while len(genes) < key_length:
        gi, pi = rng.choice(side_a)
        gj, pj = rng.choice(side_b)
        if (gi, pi) in used or (gj, pj) in used:
            continue
        gene = Gene(netlist.gates[gi].inputs[pi], gi, pi, netlist.gates[gj].inputs[pj], gj, pj,
                    rng.randrange(2))
        if validate_genotype(netlist, Genotype(tuple(genes + [gene]))).ok:
            genes.append(gene)
            used.update({(gi, pi), (gj, pj)})
    return Genotype(tuple(genes))
