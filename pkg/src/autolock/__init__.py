"""GA-driven design of D-MUX logic locking against link-prediction attacks."""

__version__ = "0.1.0"

from .netlist import (BenchSyntaxError, CycleError, Gate, GateKind, Netlist, NetlistError,
                      parse_bench, reachable, read_bench, simulate, topo_order, write_bench)
from .lock import (Gene, Genotype, LockedNetlist, apply_genotype, extract_key, repair_genotype,
                   sample_gene, sample_random_genotype, validate_genotype)
from .attack import AttackReport, attack_accuracy, build_attack_graph, run_attack
from .ga import GAConfig, GARun, evolve
from .equiv import EquivReport, check_equivalence, corruption_rate

__all__ = [
    "BenchSyntaxError",
    "CycleError",
    "Gate",
    "GateKind",
    "Netlist",
    "NetlistError",
    "parse_bench",
    "reachable",
    "read_bench",
    "simulate",
    "topo_order",
    "write_bench",
    "Gene",
    "Genotype",
    "LockedNetlist",
    "apply_genotype",
    "extract_key",
    "repair_genotype",
    "sample_gene",
    "sample_random_genotype",
    "validate_genotype",
    "AttackReport",
    "attack_accuracy",
    "build_attack_graph",
    "run_attack",
    "GAConfig",
    "GARun",
    "evolve",
    "EquivReport",
    "check_equivalence",
    "corruption_rate",
]
