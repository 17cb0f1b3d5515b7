"""``autolock`` command line: lock, attack, evolve, verify.

Exit codes: 0 success, 1 contract failure (non-equivalence), 2 usage or I/O
error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .attack import DEFAULT_THETA, AttackError, run_attack
from .equiv import InterfaceMismatch, check_equivalence, corruption_rate
from .ga import GAConfig, GAError, evolve
from .lock import (Genotype, LockedNetlist, LockingError, apply_genotype, format_key,
                   load_locked, parse_key, sample_random_genotype)
from .netlist import NetlistError, read_bench, write_bench
from .seeding import derive_rng

EXIT_OK, EXIT_CONTRACT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _unit(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _write(path: Path, text: str, written: Optional[List[Path]] = None) -> None:
    path.write_text(text)
    if written is not None:
        written.append(path)


def _read_key(path: str):
    with open(path) as fh:
        return parse_key(fh.read())


def _emit_locked(out: Path, ln: LockedNetlist, written: List[Path]) -> None:
    name = ln.origin_name
    _write(out / f"{name}_locked.bench", write_bench(ln.netlist), written)
    _write(out / f"{name}.key", format_key(ln.correct_key), written)
    _write(out / f"{name}.genotype.json", ln.genotype.to_json(name), written)


def cmd_lock(args) -> int:
    n = read_bench(args.netlist)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    genotype = sample_random_genotype(n, args.key_length, derive_rng(args.seed, "lock"))
    ln = apply_genotype(n, genotype)
    _emit_locked(out, ln, [])
    print(f"{n.name}: {len(n.gates)} gates -> {len(ln.netlist.gates)} gates, "
          f"{len(ln.netlist.key_inputs)} key inputs")
    return EXIT_OK


def cmd_attack(args) -> int:
    n = read_bench(args.locked)
    key = _read_key(args.key)
    if set(key) != set(n.key_inputs):
        raise UsageError(f"key file has {len(key)} bits but {n.name} has "
                         f"{len(n.key_inputs)} key inputs")
    ln, _ = load_locked(n, key)
    report = run_attack(ln, args.seed, args.theta)
    text = report.to_json()
    summary = f"accuracy={report.accuracy:.4f} precision={report.precision:.4f} decided={report.decided}/{len(report.bits)}"
    if args.out:
        Path(args.out).write_text(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_evolve(args) -> int:
    n = read_bench(args.netlist)
    cfg = GAConfig(
        key_length=args.key_length, population=args.population, generations=args.generations,
        tournament=args.tournament, crossover_prob=args.crossover_prob,
        mutation_prob=args.mutation_prob, elite=args.elite, target_fitness=args.target_fitness,
        seed=args.seed, attack_seeds=args.attack_seeds, theta=args.theta,
        fitness_metric=args.fitness_metric)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    try:
        run, ln = evolve(n, cfg, jobs=args.jobs)
        eq = check_equivalence(n, ln, args.mode, args.seed)
        if not eq.equivalent:
            print(f"refusing to emit: best locking is not equivalent "
                  f"({eq.mismatches}/{eq.vectors} vectors differ)", file=sys.stderr)
            return EXIT_CONTRACT
        _emit_locked(out, ln, written)
        _write(out / "history.csv", run.history_csv(), written)
        _write(out / "run.json", run.to_json(), written)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    first = run.history[0]
    print(f"{n.name}: {len(run.history)} generations ({run.termination}); "
          f"attack accuracy {1 - first.mean_fitness:.4f} (initial mean) -> {run.best.attack_accuracy:.4f} (best); "
          f"equivalence {eq.mode} ok")
    return EXIT_OK


def cmd_verify(args) -> int:
    orig = read_bench(args.original)
    locked = read_bench(args.locked)
    key = _read_key(args.key)
    if set(key) != set(locked.key_inputs):
        raise UsageError(f"key file has {len(key)} bits but {locked.name} has "
                         f"{len(locked.key_inputs)} key inputs")
    try:
        ln, _ = load_locked(locked, key, orig.name)
    except LockingError:
        # not D-MUX shaped; equivalence only needs the netlist and the key
        ln = LockedNetlist(locked, Genotype(()), dict(key), orig.name)
    if args.wrong_keys and key:
        report = corruption_rate(orig, ln, min(args.wrong_keys, (1 << len(key)) - 1),
                                 mode=args.mode, seed=args.seed)
    else:
        report = check_equivalence(orig, ln, args.mode, args.seed)
    if args.out:
        Path(args.out).write_text(report.to_json())
    else:
        sys.stdout.write(report.to_json())
    if report.equivalent:
        print(f"equivalent ({report.mode}, {report.vectors} vectors)", file=sys.stderr)
        return EXIT_OK
    print(f"NOT equivalent: {report.mismatches} of {report.vectors} vectors differ", file=sys.stderr)
    return EXIT_CONTRACT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autolock", description="GA-designed D-MUX logic locking")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    lock = sub.add_parser("lock", help="lock a netlist with a random D-MUX genotype")
    lock.add_argument("netlist")
    lock.add_argument("--key-length", type=_positive, required=True)
    lock.add_argument("--seed", type=int, required=True)
    lock.add_argument("--out", default=".")
    lock.set_defaults(func=cmd_lock)

    attack = sub.add_parser("attack", help="run the link-prediction attack on a locked netlist")
    attack.add_argument("locked")
    attack.add_argument("key")
    attack.add_argument("--seed", type=int, required=True)
    attack.add_argument("--theta", type=float, default=DEFAULT_THETA)
    attack.add_argument("--out")
    attack.set_defaults(func=cmd_attack)

    ev = sub.add_parser("evolve", help="evolve a locking against the attack")
    ev.add_argument("netlist")
    ev.add_argument("--key-length", type=_positive, required=True)
    ev.add_argument("--population", type=int, default=20)
    ev.add_argument("--generations", type=_positive, default=30)
    ev.add_argument("--tournament", type=_positive, default=2)
    ev.add_argument("--crossover-prob", type=_unit, default=0.9)
    ev.add_argument("--mutation-prob", type=_unit, default=None, help="default 1/K")
    ev.add_argument("--elite", type=_nonneg, default=2)
    ev.add_argument("--target-fitness", type=_unit, default=1.0)
    ev.add_argument("--attack-seeds", type=_positive, default=1)
    ev.add_argument("--fitness-metric", choices=["accuracy", "precision"], default="accuracy")
    ev.add_argument("--theta", type=float, default=DEFAULT_THETA)
    ev.add_argument("--jobs", type=_positive, default=1)
    ev.add_argument("--mode", choices=["auto", "exhaustive", "sampled"], default="auto")
    ev.add_argument("--seed", type=int, required=True)
    ev.add_argument("--out", default=".")
    ev.set_defaults(func=cmd_evolve)

    ver = sub.add_parser("verify", help="check correct-key equivalence")
    ver.add_argument("original")
    ver.add_argument("locked")
    ver.add_argument("key")
    ver.add_argument("--mode", choices=["auto", "exhaustive", "sampled"], default="auto")
    ver.add_argument("--seed", type=int, default=0, help="vector sampling seed (sampled mode)")
    ver.add_argument("--wrong-keys", type=_nonneg, default=0,
                     help="also report corruption for this many wrong keys")
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, NetlistError, LockingError, AttackError, InterfaceMismatch,
            GAError, ValueError, OSError) as exc:
        print(f"autolock {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
