"""Desk-scale reruns of the standard experiment grids.

Each table id maps to a grid of simulations on scaled Erdős–Rényi seeds
(optionally also on a user-supplied real seed graph), a text table laid out
like the full-scale one, and a list of trend checks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .distributions import (
    FitnessLaw,
    OutDegreeDist,
    Phenotype,
    PhenotypeMode,
    RecencyTable,
    sample_fitness,
    synthetic_recency_table,
)
from .engine import DEFAULT_SUPERSTARS, ConfigError, RunOutput, SimConfig, agents_for_year, run_simulation
from .graph import NodeKind, TemporalDiGraph
from .metrics import (
    FITNESS_GROUPS,
    avg_local_clustering_coefficient,
    global_clustering_coefficient,
    group_shares,
    ikc_cluster,
    in_degree_stats,
    outdegree_indegree_spearman,
    percentiles_by_outdegree,
)
from .seedgen import ErSpec, gen_erdos_renyi_gnm
from .tsvio import load_seed

log = logging.getLogger(__name__)

TABLE_IDS = ("T1", "T2", "T3", "T4", "T5", "F1", "F3", "F4")
FULL_SEED_NODES = 491_532
FULL_SEED_EDGES = 899_050
MIN_FIRST_BATCH = 10
ALPHAS = (0.0, 0.5, 1.0)
BACKGROUNDS = ("ra", "sa")
OUT_DEGREE_FAMILIES = ("normal", "powerlaw", "uniform")
OUT_DEGREE_BINS = (5, 10, 15, 20, 30, 50, 100, 250)


class ReproduceError(ValueError):
    pass


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


@dataclass
class Report:
    table_id: str
    header: list
    rows: list
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        cells = [[str(h) for h in self.header]] + [[_fmt(v) for v in r] for r in self.rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(self.header))]
        lines = [f"== {self.table_id} =="]
        for j, r in enumerate(cells):
            lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
            if j == 0:
                lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
        lines += [f"note: {n}" for n in self.notes]
        lines += [c.line() for c in self.checks]
        return "\n".join(lines)

    def to_tsv(self) -> str:
        return "\t".join(map(str, self.header)) + "\n" + "".join("\t".join(_fmt(v) for v in r) + "\n" for r in self.rows)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{v:.6f}" if abs(v) < 1 else f"{v:.2f}"
    return str(v)


@dataclass
class Settings:
    scale: float = 0.01
    years: int = 30
    replicates: int = 3
    seed: int = 0
    threads: int = 1
    recency: RecencyTable | None = None
    out_degree: OutDegreeDist | None = None
    sj_edges: str | None = None
    sj_nodes: str | None = None
    ikc_k_min: int = 10

    def __post_init__(self):
        if not 0 < self.scale <= 1:
            raise ReproduceError(f"scale must lie in (0, 1], got {self.scale}")
        if self.replicates < 1:
            raise ReproduceError("need at least one replicate")
        if self.years < 1:
            raise ReproduceError("need at least one simulated year")
        first = agents_for_year(self.seed_nodes, 0.03)
        if first < MIN_FIRST_BATCH:
            raise ReproduceError(
                f"scale {self.scale} gives a {self.seed_nodes}-node seed whose first yearly batch "
                f"has {first} agents (< {MIN_FIRST_BATCH}); increase --scale"
            )
        if self.recency is None:
            self.recency = synthetic_recency_table(max_age=max(80, self.years))
        if self.years > self.recency.max_age:
            raise ReproduceError(f"recency table covers {self.recency.max_age} years, need {self.years}")
        if self.out_degree is None:
            self.out_degree = OutDegreeDist.decaying()

    @property
    def seed_nodes(self) -> int:
        return max(2, round(FULL_SEED_NODES * self.scale))

    @property
    def seed_edges(self) -> int:
        return round(FULL_SEED_EDGES * self.scale)

    @property
    def has_sj(self) -> bool:
        return self.sj_edges is not None and self.sj_nodes is not None


def _replicate_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence([master, *key]).generate_state(1, dtype=np.uint64)[0] >> 1)


def background(bg: str, alpha: float | None = None) -> PhenotypeMode:
    """``ra`` randomises phenotypes, ``sa`` shares one; ``alpha`` pins locality."""
    if bg == "ra":
        return PhenotypeMode.random() if alpha is None else PhenotypeMode.hybrid(alpha=alpha)
    if bg == "sa":
        return PhenotypeMode.static(Phenotype() if alpha is None else Phenotype(alpha=alpha))
    raise ValueError(f"unknown background {bg!r}")


class Runner:
    """Runs and caches simulations keyed by their experimental condition."""

    def __init__(self, settings: Settings):
        self.s = settings
        self._seeds: dict = {}
        self._runs: dict = {}

    def seed_graph(self, source: str, rep: int) -> TemporalDiGraph:
        key = (source, rep)
        if key not in self._seeds:
            if source == "er":
                spec = ErSpec(self.s.seed_nodes, self.s.seed_edges)
                self._seeds[key] = gen_erdos_renyi_gnm(spec, _replicate_seed(self.s.seed, 1, rep), FitnessLaw())
            else:
                self._seeds[key] = load_seed(
                    self.s.sj_edges, self.s.sj_nodes, FitnessLaw(), _replicate_seed(self.s.seed, 2, rep)
                )
        return self._seeds[key]

    def run(self, source="er", rep=0, bg="sa", alpha=None, ss=False, out_degree=None) -> RunOutput:
        od = out_degree or self.s.out_degree
        key = (source, rep, bg, alpha, ss, od)
        if key not in self._runs:
            cfg = SimConfig(
                recency_table=self.s.recency,
                years=self.s.years,
                background=background(bg, alpha),
                out_degree=od,
                superstars=DEFAULT_SUPERSTARS if ss else (),
                master_seed=_replicate_seed(self.s.seed, 3, rep),
                threads=self.s.threads,
            )
            log.info("run %s", key[:5])
            self._runs[key] = run_simulation(cfg, self.seed_graph(source, rep))
        return self._runs[key]


def _ss_label(ss: bool) -> str:
    return "ss" if ss else "no_ss"


def _alpha_grid():
    for a in ALPHAS:
        for bg in BACKGROUNDS:
            for ss in (False, True):
                yield a, bg, ss


def _monotone(values, strict=True) -> bool:
    d = np.diff(np.asarray(values, dtype=np.float64))
    return bool(np.all(d > 0) if strict else np.all(d >= 0) and d.sum() > 0)


# --- tables ------------------------------------------------------------------


def table_t1(r: Runner) -> Report:
    """Median gcc/lcc per seed source and background."""
    rows, checks, notes = [], [], []
    for source in ("er", "sj"):
        for bg in BACKGROUNDS:
            if source == "sj" and not r.s.has_sj:
                rows.append([f"{source}_{bg}", "unavailable", "unavailable"])
                continue
            runs = [r.run(source, k, bg) for k in range(r.s.replicates)]
            gcc = np.median([global_clustering_coefficient(o.graph) for o in runs])
            lcc = np.median([avg_local_clustering_coefficient(o.graph) for o in runs])
            rows.append([f"{source}_{bg}", float(gcc), float(lcc)])
            ok = 0 <= gcc <= 1 and 0 <= lcc <= 1
            checks.append(Check(f"T1 {source}_{bg} coefficients in [0, 1]", ok, f"gcc={gcc:.6f} lcc={lcc:.6f}"))
    if not r.s.has_sj:
        notes.append("sj rows need --sj-edges/--sj-nodes")
    return Report("T1", ["tag", "gcc", "lcc"], rows, checks, notes)


def table_t2(r: Runner) -> Report:
    """In-degree positional statistics (zero in-degree excluded) per run."""
    rows, checks, notes = [], [], []
    for source in ("er", "sj"):
        for k in range(r.s.replicates):
            for bg in BACKGROUNDS:
                tag = f"er{k + 1}_{bg}" if source == "er" else f"sj_rep{k}_{bg}"
                if source == "sj" and not r.s.has_sj:
                    rows.append([tag] + ["unavailable"] * 5)
                    continue
                out = r.run(source, k, bg)
                st = in_degree_stats(out.graph, "exclude_zero")
                rows.append([tag, st.min, st.median, st.q90, st.q99, st.max])
                ok = st.min >= 1 and st.min <= st.median <= st.q90 <= st.q99 <= st.max
                checks.append(Check(f"T2 {tag} quantiles ordered", ok))
    if not r.s.has_sj:
        notes.append("sj rows need --sj-edges/--sj-nodes")
    return Report("T2", ["tag", "min", "med", "q0.9", "q0.99", "max"], rows, checks, notes)


def table_t3(r: Runner) -> Report:
    rows, res = [], {}
    for a, bg, ss in _alpha_grid():
        runs = [r.run("er", k, bg, a, ss) for k in range(r.s.replicates)]
        gcc = float(np.median([global_clustering_coefficient(o.graph) for o in runs]))
        lcc = float(np.median([avg_local_clustering_coefficient(o.graph) for o in runs]))
        res[(a, bg, ss)] = (gcc, lcc)
        rows.append([f"alpha_{a:.1f}", bg, _ss_label(ss), gcc, lcc])
    checks = []
    for bg in BACKGROUNDS:
        for ss in (False, True):
            for j, name in enumerate(("gcc", "lcc")):
                seq = [res[(a, bg, ss)][j] for a in ALPHAS]
                checks.append(
                    Check(
                        f"T3 {name} increases with alpha ({bg}, {_ss_label(ss)})",
                        _monotone(seq),
                        " < ".join(f"{v:.6f}" for v in seq),
                    )
                )
    return Report("T3", ["alpha", "bg", "ss", "gcc", "lcc"], rows, checks)


def table_t4(r: Runner) -> Report:
    rows, checks = [], []
    for a, bg, ss in _alpha_grid():
        summ = []
        for k in range(r.s.replicates):
            ikc = ikc_cluster(r.run("er", k, bg, a, ss).graph, r.s.ikc_k_min)
            summ.append(ikc.summary())
            members = [m for m, _ in ikc.clusters]
            flat = np.concatenate(members) if members else np.empty(0, dtype=np.int64)
            checks.append(Check(f"T4 clusters disjoint ({a}, {bg}, {_ss_label(ss)}, rep {k})", flat.size == np.unique(flat).size))
        med = {key: float(np.median([s[key] for s in summ])) for key in ("nc", "cc", "cs", "k")}
        rows.append([a, bg, _ss_label(ss), med["nc"], med["cc"], med["cs"], med["k"]])
    header = ["alpha", "bg", "ss", "median(nc)", "median(cc)", "median(cs)", "median(k)"]
    return Report("T4", header, rows, checks, [f"IKC k_min = {r.s.ikc_k_min}"])


def table_t5(r: Runner) -> Report:
    rows, res = [], {}
    for a, bg, ss in _alpha_grid():
        stats_ = [in_degree_stats(r.run("er", k, bg, a, ss).graph, "agents") for k in range(r.s.replicates)]
        med = {f: float(np.median([getattr(s, f) for s in stats_])) for f in ("min", "median", "q75", "q90", "q99", "max")}
        res[(a, bg, ss)] = med
        rows.append([f"alpha_{a:g}", bg, _ss_label(ss)] + [med[f] for f in ("min", "median", "q75", "q90", "q99", "max")])
    checks = []
    for bg in BACKGROUNDS:
        for ss in (False, True):
            for f, label in (("q90", "q0.90"), ("q99", "q0.99")):
                seq = [res[(a, bg, ss)][f] for a in ALPHAS]
                checks.append(
                    Check(
                        f"T5 {label} rises with alpha ({bg}, {_ss_label(ss)})",
                        _monotone(seq, strict=False),
                        " -> ".join(f"{v:g}" for v in seq),
                    )
                )
    header = ["alpha", "bg", "ss", "min", "median", "q0.75", "q0.90", "q0.99", "max"]
    return Report("T5", header, rows, checks)


def table_f1(r: Runner) -> Report:
    """Fitness-group shares: a large direct sample plus every simulated node."""
    sample = sample_fitness(np.random.default_rng(_replicate_seed(r.s.seed, 4)), FitnessLaw(), size=1_000_000)
    rows = [["sampler_1e6"] + [float(100 * x) for x in group_shares(sample)]]
    for bg in BACKGROUNDS:
        out = r.run("er", 0, bg)
        rows.append([f"er1_{bg}"] + [float(100 * x) for x in group_shares(out.graph.fitness)])
    target = (85.0, 12.0, 3.0)
    shares = rows[0][1:4]
    checks = [
        Check(f"F1 {g} share within 1pp of {t:g}%", abs(s - t) <= 1.0, f"{s:.2f}%")
        for g, s, t in zip(FITNESS_GROUPS, shares, target)
    ]
    return Report("F1", ["source"] + [f"{g} %" for g in FITNESS_GROUPS], rows, checks)


def _spearman_pooled(runs) -> tuple[float, float]:
    """Spearman over agents pooled across replicates."""
    outs, ins = [], []
    for o in runs:
        ag = o.graph.kind == NodeKind.AGENT
        outs.append(o.graph.out_degrees()[ag])
        ins.append(o.graph.in_degrees[ag])
    if len(runs) == 1:
        return outdegree_indegree_spearman(runs[0].graph)
    res = stats.spearmanr(np.concatenate(outs), np.concatenate(ins))
    return float(res.statistic), float(res.pvalue)


def _pctl_rows(runs, label) -> list:
    outs = np.concatenate([o.graph.out_degrees()[o.graph.kind == NodeKind.AGENT] for o in runs])
    ins = np.concatenate([o.graph.in_degrees[o.graph.kind == NodeKind.AGENT] for o in runs])
    return [
        list(label) + [f"{p['out_lo']}-{p['out_hi']}", p["n"], p["median"], p["q0.75"], p["q0.90"], p["q0.99"]]
        for p in percentiles_by_outdegree(outs, ins, OUT_DEGREE_BINS)
    ]


def table_f3(r: Runner) -> Report:
    rows, checks = [], []
    for fam in OUT_DEGREE_FAMILIES:
        od = OutDegreeDist(kind=fam)
        for bg in BACKGROUNDS:
            runs = [r.run("er", k, bg, None, False, od) for k in range(r.s.replicates)]
            rho, p = _spearman_pooled(runs)
            rows += _pctl_rows(runs, (fam, bg))
            checks.append(Check(f"F3 {fam}/{bg} out-degree vs in-degree positive", rho > 0 and p < 0.01, f"rho={rho:.3f} p={p:.2g}"))
    header = ["out_degree", "bg", "out_bin", "n", "median", "q0.75", "q0.90", "q0.99"]
    return Report("F3", header, rows, checks)


def table_f4(r: Runner) -> Report:
    rows, checks = [], []
    for a in ALPHAS:
        for bg in BACKGROUNDS:
            runs = [r.run("er", k, bg, a, False) for k in range(r.s.replicates)]
            rho, p = _spearman_pooled(runs)
            rows += _pctl_rows(runs, (f"{a:g}", bg))
            if a == 0:
                checks.append(Check(f"F4 alpha=0 {bg} no correlation", abs(rho) < 0.05, f"rho={rho:.3f}"))
            else:
                checks.append(Check(f"F4 alpha={a:g} {bg} positive correlation", rho > 0 and p < 0.01, f"rho={rho:.3f} p={p:.2g}"))
    header = ["alpha", "bg", "out_bin", "n", "median", "q0.75", "q0.90", "q0.99"]
    return Report("F4", header, rows, checks)


TABLES = {
    "T1": table_t1,
    "T2": table_t2,
    "T3": table_t3,
    "T4": table_t4,
    "T5": table_t5,
    "F1": table_f1,
    "F3": table_f3,
    "F4": table_f4,
}


def reproduce(table_id: str, settings: Settings, runner: Runner | None = None) -> Report:
    if table_id not in TABLES:
        raise ReproduceError(f"unknown table id {table_id!r}; expected one of {TABLE_IDS}")
    try:
        return TABLES[table_id](runner or Runner(settings))
    except ConfigError as exc:
        raise ReproduceError(str(exc)) from None
