"""Built-in benchmark circuits: ISCAS-85 c17 and seeded synthetic DAGs."""
import random
from typing import Dict, List, Sequence

from .netlist import Gate, GateKind, Netlist, parse_bench

C17_BENCH = """\
# c17
# 5 inputs
# 2 outputs
# 0 inverters
# 6 gates ( 6 NANDs )

INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)

OUTPUT(22)
OUTPUT(23)

10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
"""

DEFAULT_KINDS = (GateKind.AND, GateKind.NAND, GateKind.OR, GateKind.NOR,
                 GateKind.XOR, GateKind.XNOR, GateKind.NOT, GateKind.BUFF)


def c17() -> Netlist:
    return parse_bench(C17_BENCH, name="c17")


def random_dag(n_inputs: int, n_gates: int, seed: int, kinds: Sequence[GateKind] = DEFAULT_KINDS,
               window: int = 6, prefix: str = "", name: str = None) -> Netlist:
    """Random combinational DAG.

    Gates draw their fanin from the ``window`` most recent signals (plus any
    signal with probability 0.2) so the circuit has depth and reconvergence.
    Every signal left without fanout becomes a primary output.
    """
    rng = random.Random(seed)
    pis = [f"{prefix}i{i}" for i in range(n_inputs)]
    signals: List[str] = list(pis)
    gates: Dict[str, Gate] = {}
    used = set()
    for g in range(n_gates):
        kind = kinds[rng.randrange(len(kinds))]
        arity = 1 if kind in (GateKind.NOT, GateKind.BUFF) else (3 if rng.random() < 0.15 else 2)
        arity = min(arity, len(signals)) if arity > 1 else 1
        if arity < 2 and kind not in (GateKind.NOT, GateKind.BUFF):
            kind = GateKind.BUFF
        ins: List[str] = []
        while len(ins) < arity:
            if rng.random() < 0.2:
                cand = signals[rng.randrange(len(signals))]
            else:
                lo = max(0, len(signals) - window)
                cand = signals[rng.randrange(lo, len(signals))]
            if cand not in ins:
                ins.append(cand)
        out = f"{prefix}n{g}"
        gates[out] = Gate(kind, tuple(ins))
        used.update(ins)
        signals.append(out)
    pos = [s for s in gates if s not in used]
    netlist = Netlist(name or f"dag{n_gates}_{seed}", gates, tuple(pis), tuple(pos))
    netlist.validate()
    return netlist


def stratified_dag(n_inputs: int, n_gates: int, seed: int) -> Netlist:
    """Two disconnected halves built from disjoint gate-kind families.

    The ``a`` half uses AND/NAND/NOR only and the ``b`` half XOR/XNOR/OR only.
    """
    a = random_dag(n_inputs, n_gates, seed, (GateKind.AND, GateKind.NAND, GateKind.NOR), prefix="a")
    b = random_dag(n_inputs, n_gates, seed + 1, (GateKind.XOR, GateKind.XNOR, GateKind.OR), prefix="b")
    gates = dict(a.gates)
    gates.update(b.gates)
    netlist = Netlist(f"strat{n_gates}_{seed}", gates, a.primary_inputs + b.primary_inputs,
                      a.primary_outputs + b.primary_outputs)
    netlist.validate()
    return netlist


def c17_chain(copies: int) -> Netlist:
    """``copies`` c17 instances in series: inputs 3 and 6 of each copy take the
    previous copy's outputs 22 and 23.  NAND-only, ``6 * copies`` gates."""
    base = c17()
    pis: List[str] = []
    gates: Dict[str, Gate] = {}
    prev_outputs = None
    for c in range(copies):
        names = {s: f"c{c}_{s}" for s in list(base.primary_inputs) + list(base.gates)}
        if prev_outputs is not None:
            names["3"], names["6"] = prev_outputs
        for pi in base.primary_inputs:
            if names[pi].startswith(f"c{c}_"):
                pis.append(names[pi])
        for g, gate in base.gates.items():
            gates[names[g]] = Gate(gate.kind, tuple(names[s] for s in gate.inputs))
        prev_outputs = (names["22"], names["23"])
    netlist = Netlist(f"c17x{copies}", gates, tuple(pis), prev_outputs)
    netlist.validate()
    return netlist
