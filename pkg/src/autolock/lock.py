"""D-MUX locking: the genotype encoding and its materialization.

A gene names two existing wires ``f_i -> (g_i, pin_i)`` and
``f_j -> (g_j, pin_j)``.  Applying it inserts two multiplexers sharing one
key input; each consumer pin can then be fed by either driver, and only the
correct key bit restores the original wires.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple

from .netlist import Gate, GateKind, Netlist, NetlistError, is_key_input

Slot = Tuple[str, int]

RETRIES_PER_KEY_BIT = 100


class LockingError(ValueError):
    pass


class ExhaustionError(LockingError):
    """No valid gene could be sampled within the retry budget."""


@dataclass(frozen=True)
class Gene:
    fi: str
    gi: str
    pini: int
    fj: str
    gj: str
    pinj: int
    k: int

    @property
    def slot_i(self) -> Slot:
        return (self.gi, self.pini)

    @property
    def slot_j(self) -> Slot:
        return (self.gj, self.pinj)

    def flipped(self) -> "Gene":
        return Gene(self.fi, self.gi, self.pini, self.fj, self.gj, self.pinj, 1 - self.k)


@dataclass(frozen=True)
class Genotype:
    genes: Tuple[Gene, ...]

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(self.genes))

    def __len__(self) -> int:
        return len(self.genes)

    def __iter__(self) -> Iterator[Gene]:
        return iter(self.genes)

    def __getitem__(self, i):
        return self.genes[i]

    @property
    def key_bits(self) -> List[int]:
        return [g.k for g in self.genes]

    def replace(self, index: int, gene: Gene) -> "Genotype":
        genes = list(self.genes)
        genes[index] = gene
        return Genotype(tuple(genes))

    def to_dict(self, origin: str) -> dict:
        return {"origin": origin, "genes": [asdict(g) for g in self.genes]}

    def to_json(self, origin: str) -> str:
        return json.dumps(self.to_dict(origin), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "Genotype":
        try:
            genes = tuple(
                Gene(str(g["fi"]), str(g["gi"]), int(g["pini"]), str(g["fj"]), str(g["gj"]),
                     int(g["pinj"]), int(g["k"]))
                for g in data["genes"])
        except (KeyError, TypeError, ValueError) as exc:
            raise LockingError(f"malformed genotype record: {exc}") from None
        return cls(genes)

    @classmethod
    def from_json(cls, text: str) -> "Genotype":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class LockedNetlist:
    netlist: Netlist
    genotype: Genotype
    correct_key: Dict[str, int]
    origin_name: str

    @property
    def key_length(self) -> int:
        return len(self.genotype)


def key_name(bit: int) -> str:
    return f"keyinput{bit}"


def mux_names(bit: int) -> Tuple[str, str]:
    return f"mux_{bit}_0", f"mux_{bit}_1"


# ---------------------------------------------------------------- acyclicity

class _LockGraph:
    """Original fanout plus the cross edges added by accepted genes."""

    def __init__(self, n: Netlist, genes: Iterable[Gene] = ()):
        self.fanout = n.fanout
        self.extra: Dict[str, List[str]] = {}
        for g in genes:
            self.add(g)

    def add(self, g: Gene) -> None:
        self.extra.setdefault(g.fj, []).append(g.gi)
        self.extra.setdefault(g.fi, []).append(g.gj)

    def _reaches(self, src: str, dst: str, tmp: Mapping[str, Sequence[str]]) -> bool:
        if src == dst:
            return True
        seen = {src}
        stack = [src]
        fanout, extra = self.fanout, self.extra
        while stack:
            node = stack.pop()
            for succ in (*fanout.get(node, ()), *extra.get(node, ()), *tmp.get(node, ())):
                if succ == dst:
                    return True
                if succ not in seen:
                    seen.add(succ)
                    stack.append(succ)
        return False

    def closes_cycle(self, g: Gene) -> bool:
        tmp: Dict[str, List[str]] = {}
        tmp.setdefault(g.fj, []).append(g.gi)
        tmp.setdefault(g.fi, []).append(g.gj)
        return self._reaches(g.gi, g.fj, tmp) or self._reaches(g.gj, g.fi, tmp)


def _gene_defect(n: Netlist, g: Gene) -> Optional[str]:
    for f, gate_name, pin in ((g.fi, g.gi, g.pini), (g.fj, g.gj, g.pinj)):
        gate = n.gates.get(gate_name)
        if gate is None:
            return f"unknown gate {gate_name!r}"
        if not 0 <= pin < len(gate.inputs):
            return f"pin {pin} out of range for {gate_name!r}"
        if gate.inputs[pin] != f:
            return f"{f!r} is not input {pin} of {gate_name!r}"
        if is_key_input(f):
            return f"driver {f!r} is a key input"
    if g.fi == g.fj:
        return "f_i equals f_j"
    if g.slot_i == g.slot_j:
        return "both multiplexers target the same slot"
    if g.k not in (0, 1):
        return f"key bit {g.k!r} is not 0 or 1"
    return None


class ValidityReport(NamedTuple):
    violations: List[Tuple[int, str]]

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def indices(self) -> List[int]:
        return [i for i, _ in self.violations]


def validate_genotype(n: Netlist, g: Genotype) -> ValidityReport:
    """Check genes in index order; a failing gene is reported and skipped."""
    violations: List[Tuple[int, str]] = []
    if len(g) < 1:
        violations.append((-1, "genotype is empty"))
    if n.is_locked:
        violations.append((-1, "netlist is already locked"))
    graph = _LockGraph(n)
    used: Set[Slot] = set()
    for i, gene in enumerate(g):
        reason = _gene_defect(n, gene)
        if reason is None and (gene.slot_i in used or gene.slot_j in used):
            reason = "slot conflict with an earlier gene"
        if reason is None and graph.closes_cycle(gene):
            reason = "cycle"
        if reason is not None:
            violations.append((i, reason))
            continue
        used.update((gene.slot_i, gene.slot_j))
        graph.add(gene)
    return ValidityReport(violations)


# ------------------------------------------------------------------ sampling

def sample_gene(n: Netlist, used_slots: Set[Slot], rng: random.Random,
                accepted: Sequence[Gene] = (), budget: int = RETRIES_PER_KEY_BIT,
                _graph: Optional[_LockGraph] = None) -> Gene:
    """Rejection-sample one gene on free slots that keeps the netlist acyclic."""
    free = [(name, pin) for name, gate in n.gates.items() for pin in range(len(gate.inputs))
            if (name, pin) not in used_slots and not is_key_input(gate.inputs[pin])]
    if len(free) < 2:
        raise ExhaustionError(f"{n.name}: fewer than two free slots left")
    graph = _graph if _graph is not None else _LockGraph(n, accepted)
    for _ in range(budget):
        gi, pini = free[rng.randrange(len(free))]
        gj, pinj = free[rng.randrange(len(free))]
        k = rng.randrange(2)
        fi, fj = n.gates[gi].inputs[pini], n.gates[gj].inputs[pinj]
        if (gi, pini) == (gj, pinj) or fi == fj:
            continue
        gene = Gene(fi, gi, pini, fj, gj, pinj, k)
        if not graph.closes_cycle(gene):
            return gene
    raise ExhaustionError(
        f"{n.name}: no acyclic gene found in {budget} attempts (circuit too small for the key?)")


def sample_random_genotype(n: Netlist, key_length: int, rng: random.Random) -> Genotype:
    if key_length < 1:
        raise LockingError("key length must be at least 1")
    if n.is_locked:
        raise LockingError("netlist is already locked")
    budget = RETRIES_PER_KEY_BIT * key_length
    graph = _LockGraph(n)
    used: Set[Slot] = set()
    genes: List[Gene] = []
    for _ in range(key_length):
        gene = sample_gene(n, used, rng, budget=budget, _graph=graph)
        genes.append(gene)
        used.update((gene.slot_i, gene.slot_j))
        graph.add(gene)
    return Genotype(tuple(genes))


def repair_genotype(n: Netlist, g: Genotype, rng: random.Random) -> Genotype:
    """Resample every invalid gene; valid genes are kept as they are."""
    report = validate_genotype(n, g)
    if report.ok:
        return g
    if len(g) < 1 or any(i < 0 for i in report.indices):
        raise LockingError("; ".join(reason for _, reason in report.violations))
    bad = sorted(set(report.indices))
    genes = list(g.genes)
    keep = [genes[i] for i in range(len(genes)) if i not in set(bad)]
    graph = _LockGraph(n, keep)
    used = {s for gene in keep for s in (gene.slot_i, gene.slot_j)}
    budget = RETRIES_PER_KEY_BIT * len(genes)
    for i in bad:
        gene = sample_gene(n, used, rng, budget=budget, _graph=graph)
        genes[i] = gene
        used.update((gene.slot_i, gene.slot_j))
        graph.add(gene)
    return Genotype(tuple(genes))


# ------------------------------------------------------------- materializing

def apply_genotype(n: Netlist, g: Genotype, validate: bool = True) -> LockedNetlist:
    if validate:
        report = validate_genotype(n, g)
        if not report.ok:
            raise LockingError("invalid genotype: " + "; ".join(
                f"gene {i}: {reason}" for i, reason in report.violations))
    gates = {name: [gate.kind, list(gate.inputs)] for name, gate in n.gates.items()}
    added: Dict[str, Gate] = {}
    keys = []
    for b, gene in enumerate(g):
        key = key_name(b)
        m0, m1 = mux_names(b)
        for name in (key, m0, m1):
            if name in n:
                raise LockingError(f"name {name!r} already used in {n.name}")
        if gene.k == 0:
            d_i, d_j = (gene.fi, gene.fj), (gene.fj, gene.fi)
        else:
            d_i, d_j = (gene.fj, gene.fi), (gene.fi, gene.fj)
        added[m0] = Gate(GateKind.MUX, (key, *d_i))
        added[m1] = Gate(GateKind.MUX, (key, *d_j))
        gates[gene.gi][1][gene.pini] = m0
        gates[gene.gj][1][gene.pinj] = m1
        keys.append(key)
    new_gates = {name: Gate(kind, tuple(ins)) for name, (kind, ins) in gates.items()}
    new_gates.update(added)
    locked = Netlist(f"{n.name}_locked", new_gates, n.primary_inputs, n.primary_outputs, tuple(keys))
    return LockedNetlist(locked, g, extract_key_bits(g), n.name)


def extract_key_bits(g: Genotype) -> Dict[str, int]:
    return {key_name(b): gene.k for b, gene in enumerate(g)}


def extract_key(ln: LockedNetlist) -> Dict[str, int]:
    return dict(ln.correct_key)


# ---------------------------------------------------- reading locked netlists

class KeyMux(NamedTuple):
    name: str
    consumer: str
    pin: int
    d0: str
    d1: str


class KeyMuxPair(NamedTuple):
    key: str
    bit: int
    a: KeyMux
    b: KeyMux


def find_key_mux_pairs(n: Netlist) -> List[KeyMuxPair]:
    """Attribute the key-controlled multiplexers of ``n`` to key bits.

    Each key input must select exactly two MUXes whose data inputs are the
    same two wires, and each MUX must feed exactly one gate pin.
    """
    from .netlist import KEY_INPUT_RE

    if not n.key_inputs:
        raise LockingError(f"{n.name} has no key inputs")
    fanout = n.fanout
    outputs = set(n.primary_outputs)
    pairs = []
    for key in n.key_inputs:
        muxes = []
        for user in fanout.get(key, ()):
            gate = n.gates[user]
            if gate.kind is not GateKind.MUX or gate.inputs[0] != key or key in gate.inputs[1:]:
                raise LockingError(f"{key} drives {user!r} other than as a MUX select")
            if user in (m.name for m in muxes):
                continue
            consumers = fanout.get(user, ())
            if len(consumers) != 1 or user in outputs:
                raise LockingError(f"key MUX {user!r} must feed exactly one gate pin")
            consumer = consumers[0]
            cgate = n.gates[consumer]
            if cgate.kind is GateKind.MUX and cgate.inputs[0] in n.key_inputs:
                raise LockingError(f"key MUX {user!r} feeds another key MUX")
            d0, d1 = gate.inputs[1], gate.inputs[2]
            for d in (d0, d1):
                if is_key_input(d) or (d in n.gates and n.gates[d].kind is GateKind.MUX
                                        and n.gates[d].inputs[0] in n.key_inputs):
                    raise LockingError(f"key MUX {user!r} has a key-controlled data input")
            muxes.append(KeyMux(user, consumer, cgate.inputs.index(user), d0, d1))
        if len(muxes) != 2:
            raise LockingError(f"{key} selects {len(muxes)} MUXes, expected a pair")
        a, b = sorted(muxes, key=lambda m: list(n.gates).index(m.name))
        if a.d0 == a.d1 or {a.d0, a.d1} != {b.d0, b.d1}:
            raise LockingError(f"MUX pair of {key} is not a symmetric D-MUX pair")
        bit = int(KEY_INPUT_RE.match(key).group(1))
        pairs.append(KeyMuxPair(key, bit, a, b))
    bits = sorted(p.bit for p in pairs)
    if bits != list(range(len(bits))):
        raise LockingError("key inputs must be numbered densely from keyinput0")
    return sorted(pairs, key=lambda p: p.bit)


def load_locked(n: Netlist, key: Mapping[str, int], origin_name: Optional[str] = None) -> Tuple[LockedNetlist, Netlist]:
    """Recover the genotype and the original netlist from a locked netlist and its key."""
    if set(key) != set(n.key_inputs):
        raise LockingError(
            f"key covers {len(key)} bits but the netlist has {len(n.key_inputs)} key inputs")
    pairs = find_key_mux_pairs(n)
    genes = []
    rewire: Dict[Slot, str] = {}
    drop = set(n.key_inputs)
    for p in pairs:
        k = int(key[p.key])
        if k not in (0, 1):
            raise LockingError(f"key bit {p.key} must be 0 or 1")
        fi = p.a.d1 if k else p.a.d0
        fj = p.b.d1 if k else p.b.d0
        genes.append(Gene(fi, p.a.consumer, p.a.pin, fj, p.b.consumer, p.b.pin, k))
        rewire[(p.a.consumer, p.a.pin)] = fi
        rewire[(p.b.consumer, p.b.pin)] = fj
        drop.update((p.a.name, p.b.name))
    gates = {}
    for name, gate in n.gates.items():
        if name in drop:
            continue
        ins = tuple(rewire.get((name, pin), src) for pin, src in enumerate(gate.inputs))
        gates[name] = Gate(gate.kind, ins)
    if origin_name is None:
        origin_name = n.name[:-len("_locked")] if n.name.endswith("_locked") else n.name
    original = Netlist(origin_name, gates, n.primary_inputs, n.primary_outputs)
    try:
        original.validate()
    except NetlistError as exc:
        raise LockingError(f"unlocked netlist is malformed: {exc}") from None
    genotype = Genotype(tuple(genes))
    ln = LockedNetlist(n, genotype, {p.key: int(key[p.key]) for p in pairs}, origin_name)
    return ln, original


# ------------------------------------------------------------------ key files

def format_key(key: Mapping[str, int]) -> str:
    from .netlist import KEY_INPUT_RE

    items = sorted(key.items(), key=lambda kv: int(KEY_INPUT_RE.match(kv[0]).group(1)))
    return "".join(f"{name}={int(v)}\n" for name, v in items)


def parse_key(text: str) -> Dict[str, int]:
    key: Dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        name, value = name.strip(), value.strip()
        if not sep or not is_key_input(name) or value not in ("0", "1"):
            raise LockingError(f"key file line {lineno}: expected keyinput<i>=<0|1>, got {line!r}")
        if name in key:
            raise LockingError(f"key file line {lineno}: duplicate {name}")
        key[name] = int(value)
    return key
