"""``mmsgraph`` command line.

Reports go to stdout as JSON lines (``"schema": 1``, rationals as ``"p/q"``);
diagnostics go to stderr.  Exit codes: 0 ok, 1 guarantee missed, 2 bad input
or structurally invalid allocation, 3 unsupported graph class, 4 solver
inconsistency, 5 enumeration budget exceeded.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import lpcert
from .core import (
    CHORES,
    CYCLE,
    GOODS,
    ChoreGraph,
    Instance,
    InstanceError,
    UnsupportedGraph,
    format_rational,
    mms_value,
    parse_instance,
    parse_rational,
)
from .cyclealloc import allocate_cycle3, allocate_cycle_threehalves
from .oracle import BudgetExceeded, StructuralError, oracle_best_alpha, oracle_mms, verify_allocation
from .treealloc import AllocationError, allocate_depth3, allocate_path, allocate_spider, depth3_root, is_spider, is_star

SCHEMA = 1
DEFAULT_MAX_PARTITIONS = 2_000_000
EXIT_MISSED, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_SOLVER, EXIT_BUDGET = 1, 2, 3, 4, 5
CLASSES = ("path", "star", "depth3", "spider", "cycle")


def digest(instance: Instance) -> str:
    return hashlib.sha256(instance.dumps().encode()).hexdigest()[:16]


def emit(record: dict) -> None:
    print(json.dumps({"schema": SCHEMA, **record}, separators=(",", ":")))


def _fmt(q):
    return None if q is None else format_rational(q)


def load(path: str) -> Instance:
    try:
        raw = Path(path).read_bytes() if path != "-" else sys.stdin.buffer.read()
    except OSError as e:
        raise InstanceError(f"cannot read {path}: {e.strerror}") from e
    return parse_instance(raw)


def detect_class(instance: Instance) -> str:
    """First matching class in the order path, star, depth3, spider, cycle."""
    g = instance.graph
    if g.kind == CYCLE:
        return "cycle"
    if g.is_path():
        return "path"
    if is_star(instance):
        return "star"
    if depth3_root(instance) is not None:
        return "depth3"
    if is_spider(instance):
        return "spider"
    raise UnsupportedGraph(
        "this tree is neither a path, a star, a depth-3 tree nor a spider; "
        "MMS allocations for general trees are an open problem"
    )


def run_allocator(instance: Instance, target: str):
    """(allocation, alpha it is guaranteed to meet, name of the allocator)."""
    if target == "auto":
        cls = detect_class(instance)
        if cls == "cycle":
            target = "cycle3" if instance.n == 3 else "cycle32"
        elif cls == "star":
            target = "depth3"
        else:
            target = cls
    if target in ("path", "depth3", "spider", "star"):
        if instance.graph.kind == CYCLE:
            raise UnsupportedGraph(f"--target {target} needs a tree")
        if instance.kind != CHORES:
            raise UnsupportedGraph("tree allocators handle chores only")
        fn = {"path": allocate_path, "depth3": allocate_depth3, "star": allocate_depth3, "spider": allocate_spider}[target]
        return fn(instance), Fraction(1), target
    if target == "cycle32":
        if instance.kind != CHORES:
            raise UnsupportedGraph("the 3/2 cycle allocator handles chores only")
        return allocate_cycle_threehalves(instance), Fraction(3, 2), target
    if target == "cycle3":
        res = allocate_cycle3(instance)
        return res.allocation, res.target, f"cycle3:{res.route}"
    raise InstanceError(f"unknown target {target!r}")


# --- commands ------------------------------------------------------------------


def cmd_mms(args) -> int:
    inst = load(args.instance)
    k = args.k if args.k is not None else inst.n
    agents = [args.agent] if args.agent is not None else range(inst.n)
    for a in agents:
        if not 0 <= a < inst.n:
            raise InstanceError(f"agent {a} outside 0..{inst.n - 1}")
        emit({"command": "mms", "instance": digest(inst), "agent": a, "k": k, "mms": _fmt(mms_value(inst, a, k))})
    return 0


def cmd_allocate(args) -> int:
    inst = load(args.instance)
    t0 = time.perf_counter()
    alloc, alpha, used = run_allocator(inst, args.target)
    mms = [mms_value(inst, a) for a in range(inst.n)]
    rep = verify_allocation(inst, alloc, alpha, mms)
    emit(
        {
            "command": "allocate",
            "target": used,
            "instance": digest(inst),
            "allocation": [sorted(alloc[a]) for a in range(inst.n)],
            **rep.to_json(),
            "achieved_alpha": _fmt(rep.aggregate),
            "wall_time_s": round(time.perf_counter() - t0, 4),
        }
    )
    if not rep.passed:
        print(f"guarantee {format_rational(alpha)} not met", file=sys.stderr)
        return EXIT_MISSED
    return 0


def cmd_lp(args) -> int:
    t0 = time.perf_counter()
    models = lpcert.build_lp_models(args.kind)
    solutions = [lpcert.solve_lp_max_alpha(m) for m in models]
    for m, s in zip(models, solutions):
        emit(
            {
                "command": "lp",
                "kind": args.kind,
                "case": list(m.case),
                "orbit": [list(c) for c in m.orbit],
                "status": s.status,
                "alpha": _fmt(s.alpha),
                "objective": m.objective,
                "tight_constraints": len(s.tight),
            }
        )
    report = lpcert.symmetry_report(args.kind)
    if not report.consistent:
        raise lpcert.SolverInconsistency("cases in one symmetry class have different optima")
    summary = {
        "command": "lp",
        "kind": args.kind,
        "models": len(models),
        "published_models": report.published_count,
        "threshold": _fmt(lpcert.threshold(args.kind, solutions)),
        "wall_time_s": round(time.perf_counter() - t0, 4),
    }
    if not report.matches_published:
        print(f"computed {report.count} symmetry classes, published count is {report.published_count}", file=sys.stderr)
    if args.emit_models:
        out = Path(args.emit_models)
        out.mkdir(parents=True, exist_ok=True)
        for m in models:
            (out / f"{args.kind}_{''.join(map(str, m.case))}.lp").write_text(m.to_lp_text())
        summary["emitted"] = str(out)
    if args.extract_tight:
        pick = lpcert.threshold(args.kind, solutions)
        m, s = next((m, s) for m, s in zip(models, solutions) if s.alpha == pick)
        inst = lpcert.extract_tight_instance(m, s)
        Path(args.extract_tight).write_text(inst.dumps() + "\n")
        summary["tight_instance"] = args.extract_tight
        summary["tight_best_alpha"] = _fmt(s.alpha)
    emit(summary)
    return 0


def _load_allocation(path: str, n: int) -> dict[int, frozenset[int]]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InstanceError(f"cannot read allocation {path}: {e}") from e
    if isinstance(data, dict):
        data = data.get("allocation")
    if not isinstance(data, list) or not all(isinstance(b, list) for b in data):
        raise InstanceError("allocation must be a list of bundles (one list of chore ids per agent)")
    if len(data) != n:
        raise StructuralError(f"allocation has {len(data)} bundles for {n} agents")
    try:
        return {a: frozenset(int(v) for v in b) for a, b in enumerate(data)}
    except (TypeError, ValueError) as e:
        raise InstanceError(f"bad chore id in allocation: {e}") from e


def cmd_oracle(args) -> int:
    inst = load(args.instance)
    budget = args.max_partitions
    base = {"command": "oracle", "instance": digest(inst)}
    t0 = time.perf_counter()
    if args.mms:
        for a in range(inst.n):
            emit({**base, "agent": a, "mms": _fmt(oracle_mms(inst, a, max_partitions=budget))})
        return 0
    mms = [oracle_mms(inst, a, max_partitions=budget) for a in range(inst.n)]
    if args.best_alpha:
        best, witness = oracle_best_alpha(inst, mms, max_partitions=budget)
        emit(
            {
                **base,
                "mms": [_fmt(q) for q in mms],
                "best_alpha": _fmt(best),
                "allocation": [sorted(witness[a]) for a in range(inst.n)],
                "wall_time_s": round(time.perf_counter() - t0, 4),
            }
        )
        return 0
    alloc = _load_allocation(args.verify, inst.n)
    rep = verify_allocation(inst, alloc, parse_rational(args.alpha), mms)
    emit({**base, "allocation": [sorted(alloc[a]) for a in range(inst.n)], **rep.to_json()})
    return 0 if rep.passed else EXIT_MISSED


# --- generators ------------------------------------------------------------------


def _relabelled(rng, m, edges):
    perm = list(range(m))
    rng.shuffle(perm)
    return ChoreGraph.tree(m, [(perm[u], perm[v]) for u, v in edges])


def random_graph(cls: str, m: int, rng: random.Random) -> ChoreGraph:
    if cls == "cycle":
        if m < 3:
            raise InstanceError("a cycle needs m >= 3")
        order = list(range(m))
        rng.shuffle(order)
        return ChoreGraph.cycle(order)
    if m < 1:
        raise InstanceError("need m >= 1")
    if cls == "path":
        return _relabelled(rng, m, [(i, i + 1) for i in range(m - 1)])
    if cls == "star":
        return _relabelled(rng, m, [(0, i) for i in range(1, m)])
    if cls == "depth3":
        edges, middle = [], []
        for v in range(1, m):
            if middle and rng.random() < 0.6:
                edges.append((rng.choice(middle), v))
            else:
                edges.append((0, v))
                middle.append(v)
        return _relabelled(rng, m, edges)
    if cls == "spider":
        if m < 4:
            raise InstanceError("a spider with a centre of degree >= 3 needs m >= 4")
        legs = rng.randint(3, m - 1)
        sizes = [1] * legs
        for _ in range(m - 1 - legs):
            sizes[rng.randrange(legs)] += 1
        edges, nxt = [], 1
        for size in sizes:
            prev = 0
            for _ in range(size):
                edges.append((prev, nxt))
                prev, nxt = nxt, nxt + 1
        return _relabelled(rng, m, edges)
    raise InstanceError(f"unknown class {cls!r}")


def random_instance(cls: str, m: int, n: int, seed: int, kind: str = CHORES) -> Instance:
    """Deterministic in its arguments; values are rationals with denominators at most 12."""
    if n < 1:
        raise InstanceError("need n >= 1")
    rng = random.Random(seed)
    graph = random_graph(cls, m, rng)
    sign = -1 if kind == CHORES else 1
    rows = [[sign * Fraction(rng.randint(0, 12), rng.randint(1, 12)) for _ in range(m)] for _ in range(n)]
    return Instance.build(graph, rows, kind)


def cmd_gen(args) -> int:
    print(random_instance(args.cls, args.m, args.n, args.seed, args.kind).dumps())
    return 0


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmsgraph", description="Maximin-share allocation on trees and cycles.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mms", help="exact maximin shares")
    s.add_argument("instance")
    s.add_argument("--agent", type=int)
    s.add_argument("--k", type=int, help="number of bundles (default: number of agents)")
    s.set_defaults(func=cmd_mms)

    s = sub.add_parser("allocate", help="run an allocator and verify the result")
    s.add_argument("instance")
    s.add_argument("--target", default="auto", choices=["auto", "path", "star", "depth3", "spider", "cycle32", "cycle3"])
    s.set_defaults(func=cmd_allocate)

    s = sub.add_parser("lp", help="solve the three-agent cycle LP models exactly")
    s.add_argument("--kind", choices=[CHORES, GOODS], default=CHORES)
    s.add_argument("--emit-models", metavar="DIR", help="write each model as LP text into DIR")
    s.add_argument("--extract-tight", metavar="PATH", help="write the oracle-checked tight instance to PATH")
    s.set_defaults(func=cmd_lp)

    s = sub.add_parser("oracle", help="brute-force shares, best ratio, or verification")
    s.add_argument("instance")
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--mms", action="store_true")
    mode.add_argument("--best-alpha", action="store_true")
    mode.add_argument("--verify", metavar="ALLOCATION")
    s.add_argument("--alpha", default="1", help="ratio for --verify, as p/q")
    s.add_argument("--max-partitions", type=int, default=DEFAULT_MAX_PARTITIONS)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("gen", help="random instance JSON on stdout")
    s.add_argument("--class", dest="cls", choices=CLASSES, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kind", choices=[CHORES, GOODS], default=CHORES)
    s.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedGraph as e:
        print(f"unsupported: {e}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except BudgetExceeded as e:
        print(f"over budget: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (lpcert.SolverInconsistency, lpcert.TightnessError) as e:
        print(f"solver: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except AllocationError as e:
        print(f"allocation failed: {e}", file=sys.stderr)
        return EXIT_MISSED
    except (InstanceError, StructuralError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
