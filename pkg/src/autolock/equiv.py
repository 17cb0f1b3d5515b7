"""Simulation-based check of the locking contract.

Vectors are packed into Python integers (one bit per vector), so an
exhaustive check over 16 inputs is a single pass over the gates.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .lock import LockedNetlist
from .netlist import Netlist, exhaustive_patterns, simulate_words
from .seeding import derive_rng

EXHAUSTIVE_LIMIT = 16
SAMPLED_VECTORS = 1000
DEFAULT_WRONG_KEYS = 10


class InterfaceMismatch(ValueError):
    pass


@dataclass
class EquivReport:
    mode: str
    vectors: int
    mismatches: int
    equivalent: bool
    corruption: List[float] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def _check_interface(orig: Netlist, locked: Netlist) -> None:
    if orig.primary_inputs != locked.primary_inputs or orig.primary_outputs != locked.primary_outputs:
        raise InterfaceMismatch(
            f"{orig.name} and {locked.name} differ in primary inputs or outputs")


def _resolve_mode(orig: Netlist, mode: str) -> str:
    if mode == "auto":
        return "exhaustive" if len(orig.primary_inputs) <= EXHAUSTIVE_LIMIT else "sampled"
    if mode not in ("exhaustive", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


def input_vectors(orig: Netlist, mode: str, seed: int = 0) -> Tuple[Dict[str, int], int]:
    if mode == "exhaustive":
        return exhaustive_patterns(orig.primary_inputs)
    rng = derive_rng(seed, "vectors", orig.name)
    return {pi: rng.getrandbits(SAMPLED_VECTORS) for pi in orig.primary_inputs}, SAMPLED_VECTORS


def _differing_vectors(ref: Mapping[str, int], got: Mapping[str, int]) -> int:
    diff = 0
    for po, word in ref.items():
        diff |= word ^ got[po]
    return diff


def _key_words(key: Mapping[str, int], width: int) -> Dict[str, int]:
    ones = (1 << width) - 1
    return {name: ones if bit else 0 for name, bit in key.items()}


def check_equivalence(orig: Netlist, ln: LockedNetlist, mode: str = "auto", seed: int = 0) -> EquivReport:
    """Compare the locked netlist under its correct key with the original.

    ``mode="auto"`` picks exhaustive simulation up to 16 primary inputs.
    """
    _check_interface(orig, ln.netlist)
    mode = _resolve_mode(orig, mode)
    pis, width = input_vectors(orig, mode, seed)
    ref = simulate_words(orig, pis, width)
    got = simulate_words(ln.netlist, {**pis, **_key_words(ln.correct_key, width)}, width)
    mismatches = bin(_differing_vectors(ref, got)).count("1")
    return EquivReport(mode, width, mismatches, mismatches == 0)


def corruption_rate(orig: Netlist, ln: LockedNetlist, wrong_keys: Optional[int] = None,
                    rng: Optional[random.Random] = None, mode: str = "auto", seed: int = 0) -> EquivReport:
    """Fraction of vectors with at least one wrong output, per sampled wrong key.

    A wrong key may be functionally harmless; zero corruption is reported,
    never treated as an error.
    """
    _check_interface(orig, ln.netlist)
    k = len(ln.correct_key)
    if k < 1:
        raise ValueError("netlist has no key")
    available = (1 << k) - 1
    if wrong_keys is None:
        wrong_keys = min(DEFAULT_WRONG_KEYS, available)
    if wrong_keys > available:
        raise ValueError(f"only {available} wrong keys exist for K={k}, {wrong_keys} requested")
    rng = rng or derive_rng(seed, "wrong-keys")
    names = list(ln.correct_key)
    correct = sum(bit << i for i, bit in enumerate(ln.correct_key[n] for n in names))
    chosen: List[int] = []
    seen = {correct}
    while len(chosen) < wrong_keys:
        cand = rng.getrandbits(k)
        if cand not in seen:
            seen.add(cand)
            chosen.append(cand)

    report = check_equivalence(orig, ln, mode, seed)
    pis, width = input_vectors(orig, report.mode, seed)
    ref = simulate_words(orig, pis, width)
    for key_int in chosen:
        key = {name: (key_int >> i) & 1 for i, name in enumerate(names)}
        got = simulate_words(ln.netlist, {**pis, **_key_words(key, width)}, width)
        report.corruption.append(bin(_differing_vectors(ref, got)).count("1") / width)
    return report
