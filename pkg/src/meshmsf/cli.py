"""``meshmsf`` command line: generate graphs, run and verify, benchmark steps.

Exit codes: 0 pass, 1 verification failure, 2 usage or parse error,
3 internal invariant violation (including a capacity overflow).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from . import __version__, graphio
from .errors import CapacityExceeded, ConfigurationError, ConsistencyError, ContractError, MeshError
from .mesh.core import MeshConfig
from .msf import run_msf
from .msf.driver import side_for
from .oracle import Graph, verify

REPORT_SCHEMA = 1
PHASES = ("coarsen", "label", "route", "components", "other")
EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("meshmsf")


class UsageError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("MESHMSF_LOG", "off").strip().lower() or "off"
    if level not in ("off", "phase", "step"):
        raise UsageError(f"MESHMSF_LOG must be off, phase or step, got {level!r}")
    root = logging.getLogger("meshmsf")
    root.handlers[:] = []
    if level == "off":
        root.setLevel(logging.WARNING)
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if level == "step" else logging.INFO)


def _sides(text: str) -> list[int]:
    try:
        sides = [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sides must be comma-separated integers, got {text!r}") from None
    if not sides:
        raise argparse.ArgumentTypeError("no sides given")
    for s in sides:
        if s < 2 or s & (s - 1):
            raise argparse.ArgumentTypeError(f"side {s} is not a power of 2 >= 2")
    if sides != sorted(set(sides)):
        raise argparse.ArgumentTypeError("sides must be strictly ascending")
    return sides


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meshmsf", description="Minimum spanning forests on a simulated mesh.")
    p.add_argument("--version", action="version", version=f"meshmsf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a seeded graph as an edge list")
    g.add_argument("kind", choices=["random-gnm", "grid", "tree", "disjoint-union"])
    g.add_argument("--vertices", "-V", type=int, required=True, help="vertex count (per part for disjoint-union)")
    g.add_argument("--edges", "-M", type=int, default=0, help="edge count for random-gnm (per part for disjoint-union)")
    g.add_argument("--parts", type=int, default=2, help="number of parts for disjoint-union")
    g.add_argument("--max-weight", type=int, default=graphio.DEFAULT_MAX_WEIGHT)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", "-o", default="-", help="output path, '-' for stdout")

    r = sub.add_parser("run", help="run the mesh pipeline on a graph file and verify it")
    r.add_argument("--graph", required=True, help="edge-list file, '-' for stdin")
    _common(r)
    r.add_argument("--format", choices=["json"], default="json")

    b = sub.add_parser("bench", help="step counts over growing full meshes")
    b.add_argument("--bench-sides", type=_sides, default=[16, 32, 64, 128, 256])
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--density", type=int, default=3, help="records per vertex in the generated graphs")
    _common(b)
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    return p


def _common(p) -> None:
    p.add_argument("--side", type=int, default=None, help="mesh side (default: smallest that fits)")
    p.add_argument("--rounds", type=int, default=6, help="coarsenings before recursing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verify", type=_on_off, default=True, metavar="{on,off}")


# ----------------------------------------------------------------------- gen
def cmd_gen(args) -> int:
    try:
        if args.kind == "random-gnm":
            g = graphio.random_gnm(args.vertices, args.edges, args.seed, args.max_weight)
        elif args.kind == "grid":
            g = graphio.grid(graphio.grid_side(args.vertices), args.seed, args.max_weight)
        elif args.kind == "tree":
            g = graphio.random_tree(args.vertices, args.seed, args.max_weight)
        else:
            g = graphio.random_union(args.parts, args.vertices, args.edges, args.seed, args.max_weight)
    except ValueError as e:
        raise UsageError(str(e)) from None
    text = graphio.format_graph(g)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)
    return EXIT_OK


# ----------------------------------------------------------------------- run
def run_report(g: Graph, side=None, rounds: int = 6, seed: int = 0, check: bool = True) -> dict:
    """Run the pipeline on ``g`` and summarise it as a JSON-ready report."""
    arr = g.as_array()
    records = int((arr[:, 0] != arr[:, 1]).sum()) + g.n_vertices if len(arr) else g.n_vertices
    if side is None:
        side = side_for(max(records, 4))
    config = MeshConfig(side)
    res = run_msf(g.n_vertices, arr, config=config, rounds=rounds)
    weight = int(sum(g.edges[i][2] for i in res.msf_origins))
    if check:
        v = verify(res, g)
        verdict = {"status": "pass" if v.ok else "fail", "failures": list(v.failures)}
    else:
        verdict = {"status": "skipped", "failures": []}
    steps = {k: int(res.steps.per_phase.get(k, 0)) for k in PHASES}
    for phase, count in sorted(res.steps.per_phase.items()):
        log.info("phase %s: %d steps", phase, count)
    return {
        "schema": REPORT_SCHEMA,
        "n": config.n,
        "records": records,
        "vertices": g.n_vertices,
        "msf_weight": weight,
        "components": res.n_components,
        "steps_total": int(res.steps.total_steps),
        "steps_by_phase": steps,
        "verdict": verdict,
        "config_echo": {
            "side": side,
            "rounds": rounds,
            "seed": seed,
            "word_capacity": config.word_capacity,
            "record_capacity": config.record_capacity,
            "sorter": "shearsort",
            "verify": "on" if check else "off",
        },
    }


def cmd_run(args) -> int:
    try:
        text = sys.stdin.read() if args.graph == "-" else open(args.graph).read()
    except OSError as e:
        raise UsageError(f"cannot read {args.graph}: {e.strerror}") from None
    try:
        g = graphio.parse_graph(text)
    except (graphio.GraphFormatError, ValueError) as e:
        raise UsageError(str(e)) from None
    if args.side is not None:
        try:
            MeshConfig(args.side)
        except ConfigurationError as e:
            raise UsageError(str(e)) from None
    if args.rounds < 1:
        raise UsageError("--rounds must be positive")
    try:
        report = run_report(g, args.side, args.rounds, args.seed, args.verify)
    except ConfigurationError as e:
        # the graph does not fit the requested mesh
        raise UsageError(str(e)) from None
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK if report["verdict"]["status"] != "fail" else EXIT_VERIFY


# --------------------------------------------------------------------- bench
def fitted_slope(ns, steps) -> float:
    """Least-squares slope of log(steps) against log(n)."""
    if len(ns) < 2:
        return float("nan")
    return float(np.polyfit(np.log(ns), np.log(steps), 1)[0])


def bench_rows(sides, trials: int = 1, seed: int = 0, rounds: int = 6, density: int = 3, check: bool = True):
    """One row per (side, trial). Graph seeds derive from ``seed`` alone."""
    seeds = np.random.SeedSequence(seed).spawn(len(sides) * trials)
    rows = []
    for i, side in enumerate(sides):
        for t in range(trials):
            g = graphio.filling(side, np.random.default_rng(seeds[i * trials + t]), density)
            rep = run_report(g, side, rounds, seed, check)
            if rep["verdict"]["status"] == "fail":
                raise ConsistencyError(f"side {side} trial {t} failed verification: {rep['verdict']['failures']}")
            rows.append({"side": side, "n": rep["n"], "trial": t, "total_steps": rep["steps_total"],
                         **{k: rep["steps_by_phase"][k] for k in PHASES}})
            log.info("side %d trial %d: %d steps", side, t, rep["steps_total"])
    return rows


def bench_slope(rows) -> float:
    ns = sorted({r["n"] for r in rows})
    mean = [np.mean([r["total_steps"] for r in rows if r["n"] == n]) for n in ns]
    return fitted_slope(ns, mean)


def format_bench_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["side", "n", "trial", "total_steps", *PHASES], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    buf.write(f"# slope={bench_slope(rows):.4f}\n")
    return buf.getvalue()


def cmd_bench(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    if args.density < 2:
        raise UsageError("--density must be at least 2")
    rows = bench_rows(args.bench_sides, args.trials, args.seed, args.rounds, args.density, args.verify)
    if args.format == "csv":
        sys.stdout.write(format_bench_csv(rows))
    else:
        json.dump({"schema": REPORT_SCHEMA, "rows": rows, "slope": bench_slope(rows)}, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        _setup_logging()
        return {"gen": cmd_gen, "run": cmd_run, "bench": cmd_bench}[args.command](args)
    except UsageError as e:
        print(f"meshmsf: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityExceeded, ConsistencyError, ContractError, MeshError) as e:
        print(f"meshmsf: internal invariant violated: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
