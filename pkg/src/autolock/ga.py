"""Generational genetic algorithm over D-MUX genotypes.

Fitness is ``1 - attack accuracy``: the GA searches for lockings the link
attack cannot resolve.  Every random draw comes from a stream derived from
the master seed, so a run is fully determined by (netlist, config) whatever
the number of worker processes.
"""
from __future__ import annotations

import io
import json
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .attack import DEFAULT_THETA, run_attack
from .lock import (Genotype, LockedNetlist, apply_genotype, repair_genotype,
                   sample_gene, sample_random_genotype)
from .netlist import Netlist
from .seeding import derive_rng, derive_seed

log = logging.getLogger(__name__)

FITNESS_METRICS = ("accuracy", "precision")


class GAError(RuntimeError):
    pass


@dataclass(frozen=True)
class GAConfig:
    key_length: int
    population: int = 20
    generations: int = 30
    tournament: int = 2
    crossover_prob: float = 0.9
    mutation_prob: Optional[float] = None  # None means 1/K
    elite: int = 2
    target_fitness: float = 1.0
    seed: int = 0
    attack_seeds: int = 1
    theta: float = DEFAULT_THETA
    fitness_metric: str = "accuracy"

    def __post_init__(self):
        if self.key_length < 1:
            raise ValueError("key_length must be >= 1")
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0 <= self.elite < self.population:
            raise ValueError("elite count must satisfy 0 <= E < N")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.tournament < 1:
            raise ValueError("tournament size must be >= 1")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must lie in [0, 1]")
        if not 0.0 <= self.target_fitness <= 1.0:
            raise ValueError("target_fitness must lie in [0, 1]")
        if self.attack_seeds < 1:
            raise ValueError("attack_seeds must be >= 1")
        if self.fitness_metric not in FITNESS_METRICS:
            raise ValueError(f"fitness_metric must be one of {FITNESS_METRICS}")

    @property
    def p_m(self) -> float:
        return 1.0 / self.key_length if self.mutation_prob is None else self.mutation_prob

    def attack_seed_list(self) -> List[int]:
        return [derive_seed(self.seed, "attack", s) for s in range(self.attack_seeds)]


@dataclass(frozen=True)
class Individual:
    genotype: Genotype
    fitness: Optional[float] = None
    attack_accuracy: Optional[float] = None

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_accuracy: float


@dataclass
class GARun:
    config: GAConfig
    origin: str
    history: List[GenerationStats]
    best: Individual
    termination: str
    evaluations: int = 0

    def history_csv(self) -> str:
        buf = io.StringIO()
        buf.write("generation,best_fitness,mean_fitness,best_accuracy\n")
        for h in self.history:
            buf.write(f"{h.generation},{h.best_fitness:.6f},{h.mean_fitness:.6f},{h.best_accuracy:.6f}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["mutation_prob"] = self.config.p_m
        return {
            "origin": self.origin,
            "termination": self.termination,
            "generations_run": len(self.history),
            "evaluations": self.evaluations,
            "best_fitness": self.best.fitness,
            "best_accuracy": self.best.attack_accuracy,
            "initial_mean_accuracy": 1.0 - self.history[0].mean_fitness if self.config.fitness_metric == "accuracy" else None,
            "best_genotype": self.best.genotype.to_dict(self.origin),
            "config": cfg,
            "history": [asdict(h) for h in self.history],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------- evaluation

def genotype_accuracy(n: Netlist, genotype: Genotype, seeds: Sequence[int],
                      theta: float = DEFAULT_THETA, metric: str = "accuracy") -> float:
    """Mean attack score of ``genotype`` over the given attack seeds."""
    ln = apply_genotype(n, genotype, validate=False)
    total = 0.0
    for s in seeds:
        report = run_attack(ln, s, theta)
        total += report.accuracy if metric == "accuracy" else report.precision
    return total / len(seeds)


def evaluate(ind: Individual, n: Netlist, cfg: GAConfig) -> Individual:
    acc = genotype_accuracy(n, ind.genotype, cfg.attack_seed_list(), cfg.theta, cfg.fitness_metric)
    return replace(ind, fitness=1.0 - acc, attack_accuracy=acc)


def _evaluate_job(args):
    n, genotype, seeds, theta, metric = args
    return genotype_accuracy(n, genotype, seeds, theta, metric)


class _Evaluator:
    """Caches accuracy per genotype and optionally fans out to worker processes."""

    def __init__(self, n: Netlist, cfg: GAConfig, jobs: int = 1):
        self.n = n
        self.cfg = cfg
        self.seeds = cfg.attack_seed_list()
        self.cache: Dict[Genotype, float] = {}
        self.pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
        self.count = 0

    def __call__(self, pop: List[Individual], generation: int) -> List[Individual]:
        todo = []
        for ind in pop:
            if not ind.evaluated and ind.genotype not in self.cache and ind.genotype not in todo:
                todo.append(ind.genotype)
        args = [(self.n, g, self.seeds, self.cfg.theta, self.cfg.fitness_metric) for g in todo]
        try:
            if self.pool is not None:
                results = list(self.pool.map(_evaluate_job, args))
            else:
                results = [_evaluate_job(a) for a in args]
        except Exception as exc:
            raise GAError(f"generation {generation}: fitness evaluation failed: {exc}") from exc
        self.count += len(todo)
        self.cache.update(zip(todo, results))
        out = []
        for ind in pop:
            if not ind.evaluated:
                acc = self.cache[ind.genotype]
                ind = replace(ind, fitness=1.0 - acc, attack_accuracy=acc)
            out.append(ind)
        return out

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


# ----------------------------------------------------------------- operators

def init_population(n: Netlist, cfg: GAConfig) -> List[Individual]:
    return [Individual(sample_random_genotype(n, cfg.key_length, derive_rng(cfg.seed, "init", i)))
            for i in range(cfg.population)]


def tournament_select(pop: Sequence[Individual], t: int, rng: random.Random) -> Individual:
    if not pop:
        raise GAError("cannot select from an empty population")
    drawn = [rng.randrange(len(pop)) for _ in range(t)]
    best = min(drawn, key=lambda i: (-pop[i].fitness, i))
    return pop[best]


def crossover(a: Genotype, b: Genotype, n: Netlist, p_c: float,
              rng: random.Random) -> Tuple[Genotype, Genotype]:
    """One-point crossover followed by repair of both children."""
    if len(a) != len(b):
        raise GAError(f"parents differ in length ({len(a)} vs {len(b)})")
    if len(a) > 1 and rng.random() < p_c:
        cut = rng.randint(1, len(a) - 1)
        c1 = Genotype(a.genes[:cut] + b.genes[cut:])
        c2 = Genotype(b.genes[:cut] + a.genes[cut:])
    else:
        c1, c2 = a, b
    return repair_genotype(n, c1, rng), repair_genotype(n, c2, rng)


def mutate(g: Genotype, n: Netlist, p_m: float, rng: random.Random) -> Genotype:
    """Per gene with probability ``p_m``: flip its key bit or move it to a fresh locality."""
    genes = list(g.genes)
    for i in range(len(genes)):
        if rng.random() >= p_m:
            continue
        if rng.random() < 0.5:
            genes[i] = genes[i].flipped()
        else:
            others = genes[:i] + genes[i + 1:]
            used = {s for o in others for s in (o.slot_i, o.slot_j)}
            genes[i] = sample_gene(n, used, rng, accepted=others, budget=100 * len(genes))
    return repair_genotype(n, Genotype(tuple(genes)), rng)


def _ranked(pop: Sequence[Individual]) -> List[int]:
    return sorted(range(len(pop)), key=lambda i: (-pop[i].fitness, i))


# ---------------------------------------------------------------------- loop

def evolve(n: Netlist, cfg: GAConfig, jobs: int = 1,
           on_generation: Optional[Callable[[int, List[Individual]], None]] = None
           ) -> Tuple[GARun, LockedNetlist]:
    """Run the GA; returns the run record and the best locking found."""
    pop = init_population(n, cfg)
    evaluator = _Evaluator(n, cfg, jobs)
    history: List[GenerationStats] = []
    best: Optional[Individual] = None
    termination = "generations-exhausted"
    try:
        for gen in range(1, cfg.generations + 1):
            pop = evaluator(pop, gen)
            order = _ranked(pop)
            top = pop[order[0]]
            if best is None or top.fitness > best.fitness:
                best = top
            history.append(GenerationStats(
                gen, top.fitness, sum(i.fitness for i in pop) / len(pop), top.attack_accuracy))
            log.info("generation %d: best fitness %.4f, mean %.4f", gen,
                     history[-1].best_fitness, history[-1].mean_fitness)
            if on_generation is not None:
                on_generation(gen, pop)
            if top.fitness >= cfg.target_fitness:
                termination = "target-reached"
                break
            if gen == cfg.generations:
                break
            pop = _breed(n, cfg, pop, order, gen)
    finally:
        evaluator.close()
    run = GARun(cfg, n.name, history, best, termination, evaluator.count)
    return run, apply_genotype(n, best.genotype)


def _breed(n: Netlist, cfg: GAConfig, pop: List[Individual], order: List[int],
           gen: int) -> List[Individual]:
    rng = derive_rng(cfg.seed, "breed", gen)
    nxt = [pop[i] for i in order[:cfg.elite]]
    child = 0
    while len(nxt) < cfg.population:
        try:
            p1 = tournament_select(pop, cfg.tournament, rng)
            p2 = tournament_select(pop, cfg.tournament, rng)
            c1, c2 = crossover(p1.genotype, p2.genotype, n, cfg.crossover_prob, rng)
            for c in (c1, c2):
                if len(nxt) < cfg.population:
                    nxt.append(Individual(mutate(c, n, cfg.p_m, rng)))
        except GAError:
            raise
        except Exception as exc:
            raise GAError(f"generation {gen}, offspring {child}: {exc}") from exc
        child += 2
    return nxt
