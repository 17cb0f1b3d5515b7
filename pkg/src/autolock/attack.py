"""Link-prediction key-recovery attack on D-MUX locked netlists.

The attack strips every key-controlled MUX, leaving each locked consumer pin
open, and trains a logistic link classifier on the circuit's remaining
wires (self-supervised: existing wires are positives, absent ones
negatives).  For each key bit it compares the two ways the MUX pair could be
resolved and picks the pairing whose links look more plausible.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .lock import LockedNetlist, LockingError, find_key_mux_pairs
from .netlist import GateKind, Netlist

FEATURE_NAMES = (
    ["log_out_degree_u", "log_in_degree_v", "log_common_neighbors", "path_length", "pin"]
    + [f"u_is_{k.value}" for k in GateKind]
    + [f"v_is_{k.value}" for k in GateKind]
    + ["log_fanout_overlap"]
)
N_FEATURES = len(FEATURE_NAMES)

MAX_POSITIVES = 2000
DEFAULT_THETA = 0.05
L2 = 1e-4
LEARNING_RATE = 0.1
EPOCHS = 200

Link = Tuple[int, int, int]  # (driver, consumer, pin) as node indices


class AttackError(ValueError):
    pass


class LabeledLink(NamedTuple):
    u: int
    v: int
    pin: int
    label: int


class BitCandidates(NamedTuple):
    """Both resolutions of one key bit.

    ``pairings[k]`` holds the two links the MUX pair realizes when the key
    bit is ``k``.
    """
    bit: int
    key: str
    pairings: Tuple[Tuple[Link, Link], Tuple[Link, Link]]

    @property
    def links(self) -> List[Link]:
        return [*self.pairings[0], *self.pairings[1]]


@dataclass(eq=False)
class AttackGraph:
    names: List[str]
    kinds: np.ndarray
    arity: List[int]
    edges: List[Link]
    candidates: List[BitCandidates]

    @cached_property
    def index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    @cached_property
    def edge_set(self) -> set:
        return set(self.edges)

    @cached_property
    def csr(self):
        n = len(self.names)
        u = np.array([e[0] for e in self.edges], dtype=np.intc)
        v = np.array([e[1] for e in self.edges], dtype=np.intc)

        def build(src, dst):
            order = np.lexsort((dst, src))
            ptr = np.zeros(n + 1, dtype=np.intc)
            np.add.at(ptr, src + 1, 1)
            return np.cumsum(ptr, dtype=np.intc), np.ascontiguousarray(dst[order], dtype=np.intc)

        out_ptr, out_idx = build(u, v)
        in_ptr, in_idx = build(v, u)
        und_ptr, und_idx = build(np.concatenate([u, v]), np.concatenate([v, u]))
        return out_ptr, out_idx, in_ptr, in_idx, und_ptr, und_idx

    @property
    def key_length(self) -> int:
        return len(self.candidates)

    def features(self, links: Sequence[Link]) -> np.ndarray:
        """Feature rows for ``links``; existing edges are scored with themselves removed."""
        if len(links) == 0:
            return np.zeros((0, N_FEATURES))
        arr = np.asarray(links, dtype=np.intc).reshape(-1, 3)
        edge_set = self.edge_set
        remove = np.fromiter((tuple(l) in edge_set for l in map(tuple, arr.tolist())),
                             dtype=np.intc, count=len(arr))
        return kernels.link_features(*self.csr, self.kinds, arr[:, 0], arr[:, 1], arr[:, 2], remove)


def build_attack_graph(locked: Union[LockedNetlist, Netlist]) -> AttackGraph:
    """Strip key MUXes and key inputs; enumerate the candidate links per key bit."""
    n = locked.netlist if isinstance(locked, LockedNetlist) else locked
    if not n.key_inputs:
        raise AttackError(f"{n.name} is not locked: nothing to attack")
    try:
        pairs = find_key_mux_pairs(n)
    except LockingError as exc:
        raise AttackError(f"malformed locked netlist: {exc}") from None
    key_muxes = {m.name for p in pairs for m in (p.a, p.b)}
    names = list(n.primary_inputs) + [g for g in n.gates if g not in key_muxes]
    index = {name: i for i, name in enumerate(names)}
    kinds = np.array([GateKind.INPUT.index] * len(n.primary_inputs)
                     + [n.gates[g].kind.index for g in names[len(n.primary_inputs):]], dtype=np.intc)
    arity = [0] * len(n.primary_inputs) + [len(n.gates[g].inputs) for g in names[len(n.primary_inputs):]]
    edges = []
    for v_name in names[len(n.primary_inputs):]:
        v = index[v_name]
        for pin, src in enumerate(n.gates[v_name].inputs):
            if src in key_muxes:
                continue
            edges.append((index[src], v, pin))
    candidates = []
    for p in pairs:
        slot_a = (index[p.a.consumer], p.a.pin)
        slot_b = (index[p.b.consumer], p.b.pin)
        pairing = tuple(
            ((index[(p.a.d0, p.a.d1)[k]], *slot_a), (index[(p.b.d0, p.b.d1)[k]], *slot_b))
            for k in (0, 1))
        candidates.append(BitCandidates(p.bit, p.key, pairing))
    return AttackGraph(names, kinds, arity, edges, candidates)


def sample_training_links(g: AttackGraph, rng: random.Random,
                          max_positives: int = MAX_POSITIVES) -> List[LabeledLink]:
    """Balanced positives (existing wires) and negatives (absent driver/gate pairs).

    No driver/consumer pair of a candidate link appears in either class.
    """
    if not g.edges:
        raise AttackError("attack graph has no edges to learn from")
    cand_pairs = {(u, v) for c in g.candidates for u, v, _ in c.links}
    eligible = [e for e in g.edges if (e[0], e[1]) not in cand_pairs]
    if not eligible:
        raise AttackError("attack graph has no edges to learn from")
    positives = rng.sample(eligible, min(max_positives, len(eligible)))
    forbidden = {(u, v) for u, v, _ in g.edges} | cand_pairs
    drivers = range(len(g.names))
    gates = [i for i, a in enumerate(g.arity) if a > 0]
    want = len(positives)

    total = len(drivers) * len(gates)
    if total <= 20 * want + 10000:
        pool = [(u, v) for v in gates for u in drivers if u != v and (u, v) not in forbidden]
        pairs = rng.sample(pool, min(want, len(pool)))
    else:
        chosen = set()
        pairs = []
        attempts = 0
        while len(pairs) < want and attempts < 50 * want:
            attempts += 1
            u = rng.randrange(len(g.names))
            v = gates[rng.randrange(len(gates))]
            if u == v or (u, v) in forbidden or (u, v) in chosen:
                continue
            chosen.add((u, v))
            pairs.append((u, v))
    if not pairs:
        raise AttackError("degenerate attack graph: no valid negative links")
    positives = positives[:len(pairs)]
    data = [LabeledLink(u, v, pin, 1) for u, v, pin in positives]
    data += [LabeledLink(u, v, rng.randrange(g.arity[v]), 0) for u, v in pairs]
    return data


def extract_features(g: AttackGraph, u: str, v: str, pin: int) -> np.ndarray:
    try:
        link = (g.index[u], g.index[v], pin)
    except KeyError as exc:
        raise AttackError(f"unknown node {exc.args[0]!r}") from None
    return g.features([link])[0]


# ---------------------------------------------------------------- classifier

def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def loss_and_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float = L2):
    """Mean cross-entropy plus ``l2/2 * |w|^2`` and its gradient."""
    z = X @ w + b
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * float(w @ w)
    r = _sigmoid(z) - y
    return loss, X.T @ r / len(y) + l2 * w, float(np.mean(r))


@dataclass
class LinkClassifier:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    epochs: int = EPOCHS
    learning_rate: float = LEARNING_RATE
    final_loss: float = float("nan")

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(((X - self.mean) / self.scale) @ self.weights + self.bias)

    def score_links(self, g: AttackGraph, links: Sequence[Link]) -> np.ndarray:
        return self.predict_proba(g.features(links))


def fit_logistic(X: np.ndarray, y: np.ndarray, epochs: int = EPOCHS,
                 learning_rate: float = LEARNING_RATE, l2: float = L2) -> LinkClassifier:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise AttackError("training data needs at least two examples of both classes")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Xs = (X - mean) / scale
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(epochs):
        _, gw, gb = loss_and_grad(w, b, Xs, y, l2)
        w -= learning_rate * gw
        b -= learning_rate * gb
    final, _, _ = loss_and_grad(w, b, Xs, y, l2)
    return LinkClassifier(w, b, mean, scale, epochs, learning_rate, float(final))


def train_classifier(data: Sequence[LabeledLink], g: AttackGraph, **kwargs) -> LinkClassifier:
    X = g.features([(d.u, d.v, d.pin) for d in data])
    y = np.array([d.label for d in data], dtype=float)
    return fit_logistic(X, y, **kwargs)


# ----------------------------------------------------------------- reporting

Scorer = Callable[[AttackGraph, Sequence[Link]], np.ndarray]


class BitPrediction(NamedTuple):
    bit: int
    pred: Optional[int]  # None = abstain
    margin: float


@dataclass
class AttackReport:
    bits: List[BitPrediction]
    accuracy: float
    precision: float
    decided: int

    @classmethod
    def from_bits(cls, bits: List[BitPrediction], correct_key: Sequence[int]) -> "AttackReport":
        decided = [b for b in bits if b.pred is not None]
        hits = sum(1 for b in decided if b.pred == correct_key[b.bit])
        abstained = len(bits) - len(decided)
        accuracy = (hits + 0.5 * abstained) / len(bits)
        precision = hits / len(decided) if decided else 1.0
        return cls(bits, accuracy, precision, len(decided))

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "decided": self.decided,
            "bits": [{"bit": b.bit, "pred": "abstain" if b.pred is None else b.pred,
                      "margin": round(b.margin, 9) + 0.0} for b in self.bits],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def predict_keys(g: AttackGraph, scorer: Union[LinkClassifier, Scorer], correct_key: Mapping[str, int],
                 theta: float = DEFAULT_THETA) -> AttackReport:
    """Score both pairings of every key bit and decide, abstaining within ``theta``.

    Reported margins are oriented so that positive means the true wiring
    scored higher.
    """
    score = scorer.score_links if isinstance(scorer, LinkClassifier) else scorer
    links = [l for c in g.candidates for l in c.links]
    s = np.asarray(score(g, links), dtype=float).reshape(-1, 4)
    raw = (s[:, 0] + s[:, 1]) - (s[:, 2] + s[:, 3])
    truth = [int(correct_key[c.key]) for c in g.candidates]
    bits = []
    for c, r, k in zip(g.candidates, raw.tolist(), truth):
        pred = 0 if r > theta else 1 if r < -theta else None
        bits.append(BitPrediction(c.bit, pred, r if k == 0 else -r))
    return AttackReport.from_bits(bits, truth)


def run_attack(locked: Union[LockedNetlist, Netlist], seed: int, theta: float = DEFAULT_THETA,
               correct_key: Optional[Mapping[str, int]] = None) -> AttackReport:
    if isinstance(locked, LockedNetlist):
        correct_key = locked.correct_key if correct_key is None else correct_key
    if correct_key is None:
        raise AttackError("scoring the attack needs the correct key")
    g = build_attack_graph(locked)
    data = sample_training_links(g, random.Random(seed))
    clf = train_classifier(data, g)
    return predict_keys(g, clf, correct_key, theta)


def attack_accuracy(ln: LockedNetlist, seed: int, theta: float = DEFAULT_THETA) -> float:
    return run_attack(ln, seed, theta).accuracy
