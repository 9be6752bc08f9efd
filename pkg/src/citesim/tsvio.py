"""Tab-separated edge, node, agent and table files."""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .distributions import SEED_FITNESS, FitnessLaw, RngStream, sample_fitness
from .graph import NodeKind, TemporalDiGraph


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def _data_lines(path):
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.strip() and not line.startswith("#"):
            yield lineno, line


def _int_table(path, ncols: tuple[int, ...], what: str) -> np.ndarray:
    """Integer TSV with one of the allowed column counts; errors name the line."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            arr = np.loadtxt(path, dtype=np.int64, delimiter="\t", comments="#", ndmin=2)
    except ValueError:
        arr = None
    if arr is not None and (arr.size == 0 or arr.shape[1] in ncols):
        return arr.reshape(-1, arr.shape[1] if arr.size else max(ncols))
    width = None
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) not in ncols or (width is not None and len(parts) != width):
            raise DataError(f"{path}:{lineno}: expected {what}, got {line!r}")
        width = len(parts)
        try:
            [int(p) for p in parts]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-integer field in {line!r}") from None
    raise DataError(f"{path}: could not parse as {what}")


def _line_of_row(path, row: int) -> int:
    for i, (lineno, _) in enumerate(_data_lines(path)):
        if i == row:
            return lineno
    return -1


def read_node_list(path):
    """``node_id<TAB>year[<TAB>fitness]`` -> (ids, years, fitness or None)."""
    arr = _int_table(path, (2, 3), "'node_id<TAB>year[<TAB>fitness]'")
    ids, years = arr[:, 0], arr[:, 1]
    uniq, first, counts = np.unique(ids, return_index=True, return_counts=True)
    if uniq.size != ids.size:
        dup = int(uniq[counts > 1][0])
        rows = np.flatnonzero(ids == dup)
        raise DataError(f"{path}:{_line_of_row(path, int(rows[1]))}: duplicate node id {dup}")
    fitness = arr[:, 2] if arr.shape[1] == 3 else None
    if fitness is not None and np.any(fitness < 1):
        row = int(np.flatnonzero(fitness < 1)[0])
        raise DataError(f"{path}:{_line_of_row(path, row)}: fitness must be >= 1")
    return ids, years, fitness


def read_edge_list(path):
    """``source<TAB>target[<TAB>year]`` -> (src, dst, year or None)."""
    arr = _int_table(path, (2, 3), "'source<TAB>target[<TAB>year]'")
    return arr[:, 0], arr[:, 1], (arr[:, 2] if arr.shape[1] == 3 else None)


def _map_ids(ext_sorted, order, values, path):
    pos = np.searchsorted(ext_sorted, values)
    pos_c = np.minimum(pos, ext_sorted.size - 1)
    bad = (pos >= ext_sorted.size) | (ext_sorted[pos_c] != values)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise DataError(f"{path}:{_line_of_row(path, row)}: edge endpoint {int(values[row])} not in node list")
    return order[pos_c]


def load_seed(edge_path, node_path, law: FitnessLaw | None = None, master_seed: int = 0) -> TemporalDiGraph:
    """Seed graph from an edge list and a node list.

    Missing fitness values are drawn from ``law`` on a stream keyed by the
    master seed, so loading is deterministic.
    """
    ids, years, fitness = read_node_list(node_path)
    if fitness is None:
        g = RngStream(master_seed).child(SEED_FITNESS).generator()
        fitness = sample_fitness(g, law or FitnessLaw(), size=ids.size)
    src, dst, _ = read_edge_list(edge_path)
    order = np.argsort(ids, kind="stable")
    ext_sorted = ids[order]
    graph = TemporalDiGraph()
    graph.add_seed_nodes(years, fitness, ext_ids=ids)
    if src.size:
        s = _map_ids(ext_sorted, order, src, edge_path)
        d = _map_ids(ext_sorted, order, dst, edge_path)
        try:
            graph.add_seed_edges(s, d)
        except ValueError as exc:
            raise DataError(f"{edge_path}: {exc}") from None
    return graph


def _fmt_rows(cols) -> str:
    return "".join("\t".join(row) + "\n" for row in zip(*cols))


def write_edges(graph: TemporalDiGraph, path) -> None:
    ext = graph.ext_id
    Path(path).write_text(
        _fmt_rows([ext[graph.src].astype(str), ext[graph.dst].astype(str), graph.edge_year.astype(str)])
    )


def write_nodes(graph: TemporalDiGraph, path) -> None:
    Path(path).write_text(_fmt_rows([graph.ext_id.astype(str), graph.pub_year.astype(str), graph.fitness.astype(str)]))


def write_agents(graph: TemporalDiGraph, path) -> None:
    """``node_id out_quota pw rw fw alpha`` for every agent."""
    agents = np.flatnonzero(graph.kind == NodeKind.AGENT)
    ph = graph.phenotypes[agents]
    cols = [graph.ext_id[agents].astype(str), graph.out_quota[agents].astype(str)]
    cols += [[repr(float(x)) for x in ph[:, j]] for j in range(4)]
    Path(path).write_text("# node_id\tout_quota\tpw\trw\tfw\talpha\n" + _fmt_rows(cols))


def write_graph(graph: TemporalDiGraph, outdir, prefix: str = "") -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": outdir / f"{prefix}edges.tsv",
        "nodes": outdir / f"{prefix}nodes.tsv",
        "agents": outdir / f"{prefix}agents.tsv",
    }
    write_edges(graph, paths["edges"])
    write_nodes(graph, paths["nodes"])
    write_agents(graph, paths["agents"])
    return paths


def read_graph(edge_path, node_path, agent_path=None) -> TemporalDiGraph:
    """Inverse of :func:`write_graph` (edge years and agent attributes kept)."""
    ids, years, fitness = read_node_list(node_path)
    if fitness is None:
        raise DataError(f"{node_path}: fitness column required to restore a graph")
    n = ids.size
    kind = np.zeros(n, dtype=np.int8)
    quota = np.zeros(n, dtype=np.int64)
    ph = np.full((n, 4), np.nan)
    order = np.argsort(ids, kind="stable")
    ext_sorted = ids[order]
    if agent_path is not None and Path(agent_path).exists():
        rows = [line.split("\t") for _, line in _data_lines(agent_path)]
        if rows:
            aid = np.array([int(r[0]) for r in rows], dtype=np.int64)
            dense = _map_ids(ext_sorted, order, aid, agent_path)
            kind[dense] = NodeKind.AGENT
            quota[dense] = [int(r[1]) for r in rows]
            ph[dense] = [[float(x) for x in r[2:6]] for r in rows]
    graph = TemporalDiGraph()
    graph._append_nodes(years, fitness, kind, quota, ph, ids)
    src, dst, eyear = read_edge_list(edge_path)
    if src.size:
        s = _map_ids(ext_sorted, order, src, edge_path)
        d = _map_ids(ext_sorted, order, dst, edge_path)
        try:
            graph._append_edges(s, d, -1 if eyear is None else eyear)
        except ValueError as exc:
            raise DataError(f"{edge_path}: {exc}") from None
    return graph
