"""Combinational gate-level netlists in the ``.bench`` dialect.

The dialect is the ISCAS-85 one extended with a ``MUX(select, d0, d1)``
primitive.  Inputs whose name matches ``keyinput<digits>`` are key inputs.
"""
from __future__ import annotations

import enum
import heapq
import os
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple


class GateKind(enum.Enum):
    INPUT = "INPUT"
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"
    BUFF = "BUFF"
    MUX = "MUX"

    @property
    def index(self) -> int:
        return _KIND_INDEX[self]


_KIND_INDEX = {kind: i for i, kind in enumerate(GateKind)}
KIND_ALIASES = {"BUF": GateKind.BUFF}

KEY_INPUT_RE = re.compile(r"keyinput(\d+)\Z")


class NetlistError(ValueError):
    """Base class for malformed netlists."""


class BenchSyntaxError(NetlistError):
    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class CycleError(NetlistError):
    def __init__(self, node: str):
        self.node = node
        super().__init__(f"combinational cycle through {node!r}")


class Gate(NamedTuple):
    kind: GateKind
    inputs: Tuple[str, ...]


def is_key_input(name: str) -> bool:
    return KEY_INPUT_RE.match(name) is not None


def check_arity(kind: GateKind, n_inputs: int) -> None:
    if kind in (GateKind.NOT, GateKind.BUFF):
        ok = n_inputs == 1
        want = "exactly 1 input"
    elif kind is GateKind.MUX:
        ok = n_inputs == 3
        want = "exactly 3 inputs (select, d0, d1)"
    elif kind is GateKind.INPUT:
        ok = n_inputs == 0
        want = "no inputs"
    else:
        ok = n_inputs >= 2
        want = "at least 2 inputs"
    if not ok:
        raise NetlistError(f"{kind.value} takes {want}, got {n_inputs}")


@dataclass(frozen=True, eq=False)
class Netlist:
    """A combinational netlist.

    ``gates`` maps each gate name to its :class:`Gate` in file order.  The
    object is treated as immutable; derived views are cached on first use.
    """

    name: str
    gates: Dict[str, Gate]
    primary_inputs: Tuple[str, ...]
    primary_outputs: Tuple[str, ...]
    key_inputs: Tuple[str, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, Netlist):
            return NotImplemented
        return (
            list(self.gates.items()) == list(other.gates.items())
            and self.primary_inputs == other.primary_inputs
            and self.primary_outputs == other.primary_outputs
            and self.key_inputs == other.key_inputs
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def inputs(self) -> Tuple[str, ...]:
        return self.primary_inputs + self.key_inputs

    @property
    def is_locked(self) -> bool:
        return bool(self.key_inputs)

    def __contains__(self, name: str) -> bool:
        return name in self.gates or name in self._input_set

    @cached_property
    def _input_set(self) -> frozenset:
        return frozenset(self.inputs)

    def kind(self, name: str) -> GateKind:
        if name in self.gates:
            return self.gates[name].kind
        if name in self._input_set:
            return GateKind.INPUT
        raise KeyError(name)

    @cached_property
    def fanout(self) -> Dict[str, List[str]]:
        """Successor lists, one entry per gate pin (duplicates kept)."""
        out: Dict[str, List[str]] = {name: [] for name in self.inputs}
        for name in self.gates:
            out.setdefault(name, [])
        for name, gate in self.gates.items():
            for src in gate.inputs:
                out.setdefault(src, []).append(name)
        return out

    def validate(self) -> None:
        """Raise :class:`NetlistError` unless every structural invariant holds."""
        seen: Set[str] = set()
        for name in self.primary_inputs + self.key_inputs:
            if name in seen:
                raise NetlistError(f"duplicate definition of {name!r}")
            seen.add(name)
        for name in self.key_inputs:
            if not is_key_input(name):
                raise NetlistError(f"key input {name!r} lacks the keyinput prefix")
        for name in self.primary_inputs:
            if is_key_input(name):
                raise NetlistError(f"primary input {name!r} uses the reserved keyinput prefix")
        for name, gate in self.gates.items():
            if name in seen:
                raise NetlistError(f"duplicate definition of {name!r}")
            seen.add(name)
            check_arity(gate.kind, len(gate.inputs))
        for name, gate in self.gates.items():
            for src in gate.inputs:
                if src not in seen:
                    raise NetlistError(f"undefined signal {src!r} used by {name!r}")
        if len(set(self.primary_outputs)) != len(self.primary_outputs):
            raise NetlistError("duplicate OUTPUT declaration")
        for po in self.primary_outputs:
            if po not in seen:
                raise NetlistError(f"output {po!r} is not driven")
        topo_order(self)


_NAME = r"[A-Za-z0-9_][A-Za-z0-9_.\[\]]*"
_IO_RE = re.compile(rf"(INPUT|OUTPUT)\s*\(\s*({_NAME})\s*\)\Z", re.IGNORECASE)
_GATE_RE = re.compile(rf"({_NAME})\s*=\s*([A-Za-z]+)\s*\((.*)\)\Z")
_NAME_RE = re.compile(rf"{_NAME}\Z")


def parse_bench(text: str, name: str = "netlist") -> Netlist:
    """Parse ``.bench`` text into a validated :class:`Netlist`."""
    pis: List[str] = []
    keys: List[str] = []
    pos: List[str] = []
    gates: Dict[str, Gate] = {}
    defined: Dict[str, int] = {}

    def define(sig: str, lineno: int) -> None:
        if sig in defined:
            raise BenchSyntaxError(
                f"duplicate definition of {sig!r} (first at line {defined[sig]})", lineno)
        defined[sig] = lineno

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _IO_RE.match(line)
        if m:
            which, sig = m.group(1).upper(), m.group(2)
            if which == "INPUT":
                define(sig, lineno)
                (keys if is_key_input(sig) else pis).append(sig)
            else:
                if sig in pos:
                    raise BenchSyntaxError(f"duplicate OUTPUT({sig})", lineno)
                pos.append(sig)
            continue
        m = _GATE_RE.match(line)
        if not m:
            raise BenchSyntaxError(f"cannot parse {line!r}", lineno)
        out, kind_s, args_s = m.group(1), m.group(2).upper(), m.group(3)
        if kind_s == "DFF":
            raise BenchSyntaxError("sequential element DFF is not supported", lineno)
        kind = KIND_ALIASES.get(kind_s)
        if kind is None:
            try:
                kind = GateKind(kind_s)
            except ValueError:
                raise BenchSyntaxError(f"unknown gate kind {m.group(2)!r}", lineno) from None
        if kind is GateKind.INPUT:
            raise BenchSyntaxError("INPUT is not a gate kind", lineno)
        args = [a.strip() for a in args_s.split(",")] if args_s.strip() else []
        for a in args:
            if not _NAME_RE.match(a):
                raise BenchSyntaxError(f"bad signal name {a!r}", lineno)
        if is_key_input(out):
            raise BenchSyntaxError(f"gate output {out!r} uses the reserved keyinput prefix", lineno)
        try:
            check_arity(kind, len(args))
        except NetlistError as exc:
            raise BenchSyntaxError(str(exc), lineno) from None
        define(out, lineno)
        gates[out] = Gate(kind, tuple(args))

    netlist = Netlist(name, gates, tuple(pis), tuple(pos), tuple(keys))
    netlist.validate()
    return netlist


def write_bench(n: Netlist) -> str:
    """Canonical ``.bench`` text; ``parse_bench`` of the result equals ``n``."""
    lines = [f"INPUT({pi})" for pi in n.primary_inputs]
    lines += [f"INPUT({k})" for k in n.key_inputs]
    lines += [f"OUTPUT({po})" for po in n.primary_outputs]
    for name, gate in n.gates.items():
        lines.append(f"{name} = {gate.kind.value}({', '.join(gate.inputs)})")
    return "\n".join(lines) + "\n"


def topo_order(n: Netlist) -> List[str]:
    """Inputs in declaration order, then gates in Kahn order.

    Ready gates are released smallest name first so the order is unique.
    """
    pending = {}
    for name, gate in n.gates.items():
        pending[name] = sum(1 for src in gate.inputs if src in n.gates)
    heap = [name for name, cnt in pending.items() if cnt == 0]
    heapq.heapify(heap)
    fanout = n.fanout
    order = list(n.inputs)
    while heap:
        name = heapq.heappop(heap)
        order.append(name)
        for succ in fanout.get(name, ()):
            pending[succ] -= 1
            if pending[succ] == 0:
                heapq.heappush(heap, succ)
    if len(order) != len(n.inputs) + len(n.gates):
        raise CycleError(_node_on_cycle(n, {g for g, c in pending.items() if c > 0}))
    return order


def _node_on_cycle(n: Netlist, stuck: Set[str]) -> str:
    # every stuck gate has a stuck predecessor; walking back must revisit a node
    node = min(stuck)
    visited: Set[str] = set()
    while node not in visited:
        visited.add(node)
        node = next(src for src in n.gates[node].inputs if src in stuck)
    return node


def reachable(n: Netlist, start: str) -> Set[str]:
    """Transitive fanout of ``start`` (excluding itself)."""
    if start not in n:
        raise KeyError(f"unknown node {start!r}")
    fanout = n.fanout
    seen: Set[str] = set()
    stack = list(fanout.get(start, ()))
    while stack:
        node = stack.pop()
        if node not in seen:
            seen.add(node)
            stack.extend(fanout.get(node, ()))
    return seen


def _eval_gate(kind: GateKind, vals: Sequence[int], mask: int) -> int:
    if kind is GateKind.AND or kind is GateKind.NAND:
        acc = mask
        for v in vals:
            acc &= v
        return acc if kind is GateKind.AND else acc ^ mask
    if kind is GateKind.OR or kind is GateKind.NOR:
        acc = 0
        for v in vals:
            acc |= v
        return acc if kind is GateKind.OR else acc ^ mask
    if kind is GateKind.XOR or kind is GateKind.XNOR:
        acc = 0
        for v in vals:
            acc ^= v
        return acc if kind is GateKind.XOR else acc ^ mask
    if kind is GateKind.NOT:
        return vals[0] ^ mask
    if kind is GateKind.BUFF:
        return vals[0]
    if kind is GateKind.MUX:
        s, d0, d1 = vals
        return ((s ^ mask) & d0) | (s & d1)
    raise NetlistError(f"cannot evaluate {kind}")


def simulate_words(n: Netlist, values: Mapping[str, int], width: int) -> Dict[str, int]:
    """Bit-parallel simulation.

    ``values`` maps every input (primary and key) to an integer whose bit
    ``j`` is that input's value in vector ``j``; ``width`` vectors are
    evaluated at once.  Returns the same encoding for every primary output.
    """
    mask = (1 << width) - 1
    missing = set(n.inputs) - set(values)
    extra = set(values) - set(n.inputs)
    if missing or extra:
        raise NetlistError(
            f"input assignment mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
    env = {name: values[name] & mask for name in n.inputs}
    for name in _gate_schedule(n):
        gate = n.gates[name]
        env[name] = _eval_gate(gate.kind, [env[s] for s in gate.inputs], mask)
    return {po: env[po] for po in n.primary_outputs}


def _gate_schedule(n: Netlist) -> List[str]:
    cached = n.__dict__.get("_schedule")
    if cached is None:
        cached = [name for name in topo_order(n) if name in n.gates]
        n.__dict__["_schedule"] = cached
    return cached


def simulate(n: Netlist, pi: Mapping[str, int], key: Optional[Mapping[str, int]] = None) -> Dict[str, int]:
    """Evaluate one input vector; ``key`` must cover exactly the key inputs."""
    key = dict(key or {})
    if set(pi) != set(n.primary_inputs):
        raise NetlistError("primary input assignment does not cover the declared inputs exactly")
    if set(key) != set(n.key_inputs):
        raise NetlistError("key assignment does not cover the declared key inputs exactly")
    values = {name: int(bool(v)) for name, v in pi.items()}
    values.update({name: int(bool(v)) for name, v in key.items()})
    return simulate_words(n, values, 1)


def exhaustive_patterns(names: Sequence[str]) -> Tuple[Dict[str, int], int]:
    """Word encoding of all ``2**len(names)`` assignments; vector ``j`` sets input ``i`` to bit ``i`` of ``j``."""
    width = 1 << len(names)
    out = {}
    for i, name in enumerate(names):
        block = (1 << (1 << i)) - 1          # 2**i ones
        period = block << (1 << i)            # ones in the upper half of each 2**(i+1) block
        word = 0
        step = 1 << (i + 1)
        for start in range(0, width, step):
            word |= period << start
        out[name] = word
    return out, width


def rename(n: Netlist, mapping: Mapping[str, str], name: Optional[str] = None) -> Netlist:
    """Consistently rename nodes (order preserved); unmapped names are kept."""
    m = lambda s: mapping.get(s, s)  # noqa: E731
    gates = {m(g): Gate(gate.kind, tuple(m(s) for s in gate.inputs)) for g, gate in n.gates.items()}
    return Netlist(name or n.name, gates, tuple(map(m, n.primary_inputs)),
                   tuple(map(m, n.primary_outputs)), tuple(map(m, n.key_inputs)))


def gate_slots(n: Netlist) -> List[Tuple[str, int]]:
    """Every (gate, pin) pair in stored order."""
    return [(name, pin) for name, gate in n.gates.items() for pin in range(len(gate.inputs))]


def read_bench(path, name: Optional[str] = None) -> Netlist:
    with open(path) as fh:
        text = fh.read()
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_bench(text, name=name)


__all__ = [
    "GateKind", "Gate", "Netlist", "NetlistError", "BenchSyntaxError", "CycleError",
    "parse_bench", "write_bench", "read_bench", "topo_order", "reachable", "simulate",
    "simulate_words", "exhaustive_patterns", "rename", "gate_slots", "is_key_input",
]
