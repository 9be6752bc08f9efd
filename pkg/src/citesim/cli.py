"""Command line: ``citesim simulate | gen-seed | metrics | reproduce``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 a
``reproduce`` trend check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import (
    apply_sets,
    build_sim_config,
    config_hash,
    file_digest,
    fitness_law,
    load_config,
    parse_superstars,
)
from .distributions import OutDegreeDist, RecencyTable
from .engine import ConfigError, run_simulation
from .metrics import report as metrics_report
from .reproduce import TABLE_IDS, ReproduceError, Runner, Settings, reproduce
from .seedgen import ErSpec, gen_erdos_renyi_gnm
from .tsvio import DataError, load_seed, read_graph, read_node_list, write_graph

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ASSERT = 0, 1, 2, 3

log = logging.getLogger("citesim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- simulate ----------------------------------------------------------------


def _flag_overrides(args) -> dict:
    """Dedicated flags, which beat both the config file and ``--set``."""
    o = {}
    if args.seed is not None:
        o["engine.seed"] = args.seed
    if args.years is not None:
        o["engine.years"] = args.years
    if args.growth_rate is not None:
        o["engine.growth_rate"] = args.growth_rate
    if args.threads is not None:
        o["engine.threads"] = args.threads
    if args.background is not None:
        o["phenotype.background"] = args.background
    if args.alpha is not None:
        o["phenotype.alpha"] = args.alpha
    if args.superstars is not None:
        o["engine.superstars"] = parse_superstars(args.superstars)
    for key, val in (("inputs.edges", args.edges), ("inputs.nodes", args.nodes), ("inputs.recency", args.recency)):
        if val is not None:
            o[key] = str(Path(val).resolve())
    if args.out is not None:
        o["output.dir"] = str(Path(args.out).resolve())
    return o


def resolve_simulate_config(args) -> dict:
    if args.manifest is not None:
        try:
            cfg = json.loads(Path(args.manifest).read_text())["config"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{args.manifest}: not a run manifest ({exc})") from None
        base = load_config(None, ())
        unknown = set(cfg) - set(base)
        if unknown:
            raise ConfigError(f"{args.manifest}: unknown keys {sorted(unknown)}")
        base.update(cfg)
        cfg = base
        apply_sets(cfg, args.set or ())
    else:
        cfg = load_config(args.config, args.set or ())
    cfg.update(_flag_overrides(args))
    return cfg


def cmd_simulate(args) -> int:
    cfg = resolve_simulate_config(args)
    sim = build_sim_config(cfg)
    for key in ("inputs.edges", "inputs.nodes"):
        if cfg[key] is None:
            raise ConfigError(f"missing required config key {key!r}")
    if cfg["output.dir"] is None:
        raise ConfigError("missing output directory (--out or config key 'output.dir')")
    seed = load_seed(cfg["inputs.edges"], cfg["inputs.nodes"], sim.fitness_law, sim.master_seed)
    t0 = time.perf_counter()
    out = run_simulation(sim, seed)
    wall = time.perf_counter() - t0
    outdir = Path(cfg["output.dir"])
    paths = write_graph(out.graph, outdir)
    paths["events"] = outdir / "events.jsonl"
    paths["events"].write_text("".join(json.dumps(e, sort_keys=True) + "\n" for e in out.events))
    inputs = {k: cfg[k] for k in ("inputs.edges", "inputs.nodes", "inputs.recency")}
    manifest = {
        "tool": "citesim",
        "version": __version__,
        "config_hash": config_hash(cfg),
        "master_seed": sim.master_seed,
        "inputs": {k: {"path": v, "sha256": file_digest(v)} for k, v in inputs.items()},
        "outputs": {k: {"path": str(p), "sha256": file_digest(p)} for k, p in paths.items()},
        "wall_time_s": round(wall, 3),
        "config": cfg,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"{out.graph.node_count()} nodes, {out.graph.edge_count()} edges -> {outdir}")
    return EXIT_OK


# --- gen-seed ----------------------------------------------------------------


def cmd_gen_seed(args) -> int:
    years = None
    if args.years_from is not None:
        _, years, _ = read_node_list(args.years_from)
    law = fitness_law(load_config(None, ()))
    try:
        spec = ErSpec(args.n, args.m, directed=not args.undirected, years=years, year_range=tuple(args.year_range))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    g = gen_erdos_renyi_gnm(spec, args.seed, law)
    paths = write_graph(g, args.out)
    paths["agents"].unlink()
    print(f"{g.node_count()} nodes, {g.edge_count()} edges -> {args.out}")
    return EXIT_OK


# --- metrics -----------------------------------------------------------------


def _kv_lines(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _kv_lines(v, key + ".")
        else:
            yield f"{key}\t{v}"


def cmd_metrics(args) -> int:
    d = Path(args.dir) if args.dir else None
    edges = args.edges or (d / "edges.tsv")
    nodes = args.nodes or (d / "nodes.tsv")
    agents = args.agents or (d / "agents.tsv" if d else None)
    g = read_graph(edges, nodes, agents)
    rep = metrics_report(g, args.k_min)
    print("\n".join(_kv_lines(rep)))
    if args.json:
        Path(args.json).write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# --- reproduce ---------------------------------------------------------------


def cmd_reproduce(args) -> int:
    recency = RecencyTable.from_tsv(args.recency) if args.recency else None
    od = OutDegreeDist.from_table(args.out_degree_table) if args.out_degree_table else None
    try:
        settings = Settings(
            scale=args.scale,
            years=args.years,
            replicates=args.replicates,
            seed=args.seed,
            threads=args.threads,
            recency=recency,
            out_degree=od,
            sj_edges=args.sj_edges,
            sj_nodes=args.sj_nodes,
            ikc_k_min=args.k_min,
        )
    except ReproduceError as exc:
        raise UsageError(str(exc)) from None
    runner = Runner(settings)
    ok = True
    outdir = Path(args.out) if args.out else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
    for tid in args.tables:
        rep = reproduce(tid, settings, runner)
        print(rep.render())
        print()
        ok &= rep.passed
        if outdir:
            (outdir / f"{tid}.tsv").write_text(rep.to_tsv())
            (outdir / f"{tid}.checks.txt").write_text("".join(c.line() + "\n" for c in rep.checks))
    return EXIT_OK if ok else EXIT_ASSERT


# --- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="citesim", description="Citation-network growth simulator")
    p.add_argument("--version", action="version", version=f"citesim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="grow a seed graph")
    s.add_argument("--config", help="TOML config file")
    s.add_argument("--manifest", help="rerun from a previous run's manifest.json")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    s.add_argument("--seed", type=int)
    s.add_argument("--years", type=int)
    s.add_argument("--growth-rate", type=float)
    s.add_argument("--threads", type=int)
    s.add_argument("--background", choices=("static", "random", "hybrid"))
    s.add_argument("--alpha", type=float)
    s.add_argument("--superstars", help='"YEAR:FITNESS,..." or "none"')
    s.add_argument("--edges", help="seed edge list TSV")
    s.add_argument("--nodes", help="seed node list TSV")
    s.add_argument("--recency", help="recency table TSV")
    s.add_argument("--out", help="output directory")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gen-seed", help="write an Erdős–Rényi G(n, m) seed graph")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--undirected", action="store_true", help="sample unordered pairs, orient each at random")
    g.add_argument("--year-range", type=int, nargs=2, default=(1950, 1982), metavar=("LO", "HI"))
    g.add_argument("--years-from", help="node list whose year column is permuted onto the new nodes")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_seed)

    m = sub.add_parser("metrics", help="report statistics of a graph")
    m.add_argument("dir", nargs="?", help="directory holding edges.tsv / nodes.tsv / agents.tsv")
    m.add_argument("--edges")
    m.add_argument("--nodes")
    m.add_argument("--agents")
    m.add_argument("--k-min", type=int, default=10, help="smallest k kept by IKC")
    m.add_argument("--json", help="also write the report as JSON")
    m.set_defaults(func=cmd_metrics)

    r = sub.add_parser("reproduce", help="rerun a standard experiment table at desk scale")
    r.add_argument("tables", nargs="+", choices=TABLE_IDS, metavar="TABLE", help=f"one of {', '.join(TABLE_IDS)}")
    r.add_argument("--scale", type=float, default=0.01, help="seed size as a fraction of full scale")
    r.add_argument("--years", type=int, default=30)
    r.add_argument("--replicates", type=int, default=3)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--recency", help="recency table TSV (default: synthetic)")
    r.add_argument("--out-degree-table", help="empirical out-degree TSV (default: k^-2 stand-in)")
    r.add_argument("--sj-edges")
    r.add_argument("--sj-nodes")
    r.add_argument("--k-min", type=int, default=10)
    r.add_argument("--out", help="directory for TSV tables")
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "metrics" and not (args.dir or (args.edges and args.nodes)):
        parser.exit(EXIT_USAGE, "citesim metrics: error: give a run directory or --edges and --nodes\n")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"citesim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"citesim: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"citesim: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
