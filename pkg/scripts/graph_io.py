#!/usr/bin/env python3
"""
Graph file formats for the attachment lab.
Text format: header `n m alpha model seed`, then one `u v multiplicity` line per
edge sorted by (u, v). Also JSON and Graphviz DOT (rendered from a jinja2
template) plus a small converter between them.

Only JSON keeps the attachment history of a grown graph (`targets`). A graph
read back from text orders each vertex's older neighbours ascending, so
`degree(g, v, upto=(w, i))` on it is exact for i = 1 and for whole rounds but
not inside the round of w.
"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from multigraph import GraphMeta, Multigraph

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / 'templates'
DOT_TEMPLATE = 'multigraph.dot.j2'
DOT_MAX_VERTICES = 1000


class GraphFormatError(ValueError):
    """Malformed graph file"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def graph_to_text(g: Multigraph) -> str:
    seed = 'none' if g.meta.seed is None else str(g.meta.seed)
    lines = [f"{g.n} {g.m} {float(g.meta.alpha)!r} {g.meta.model} {seed}"]
    lines.extend(f"{u} {v} {mult}" for u, v, mult in g.edge_items())
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> Multigraph:
    lines = text.splitlines()
    if not lines:
        raise GraphFormatError("empty graph file")

    header = lines[0].split()
    if len(header) != 5:
        raise GraphFormatError(f"expected header 'n m alpha model seed', got {lines[0]!r}", 1)
    try:
        n, m = int(header[0]), int(header[1])
        alpha = float(header[2])
        seed = None if header[4] == 'none' else int(header[4])
    except ValueError as e:
        raise GraphFormatError(f"bad header value: {e}", 1)
    meta = GraphMeta(model=header[3], alpha=alpha, seed=seed)

    edges: Dict[tuple, int] = {}
    previous = None
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphFormatError(f"expected 'u v multiplicity', got {line!r}", number)
        try:
            u, v, mult = (int(p) for p in parts)
        except ValueError:
            raise GraphFormatError(f"non-integer edge field in {line!r}", number)
        if not 1 <= u < v <= n:
            raise GraphFormatError(f"edge {u} {v} must satisfy 1 <= u < v <= {n}", number)
        if mult < 1:
            raise GraphFormatError(f"multiplicity must be >= 1, got {mult}", number)
        if previous is not None and (u, v) <= previous:
            raise GraphFormatError("edges must be sorted by (u, v) without repeats", number)
        previous = (u, v)
        edges[(u, v)] = mult

    return Multigraph(n, edges, m=m, meta=meta)


def write_graph_file(g: Multigraph, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(graph_to_text(g))
    return path


def read_graph_file(path) -> Multigraph:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Graph file not found: {path}")
    if path.suffix == '.json':
        with open(path, 'r', encoding='utf-8') as f:
            return graph_from_json(json.load(f))
    with open(path, 'r', encoding='utf-8') as f:
        return graph_from_text(f.read())


def graph_to_json(g: Multigraph) -> Dict[str, Any]:
    data = {
        'n': g.n,
        'm': g.m,
        'alpha': float(g.meta.alpha),
        'model': g.meta.model,
        'seed': g.meta.seed,
        'edges': [list(edge) for edge in g.edge_items()],
    }
    if g.has_history:
        data['targets'] = [list(g.targets(v)) for v in range(2, g.n + 1)]
    return data


def graph_from_json(data: Dict[str, Any]) -> Multigraph:
    try:
        meta = GraphMeta(model=data.get('model', 'custom'),
                         alpha=float(data.get('alpha', 0.0)),
                         seed=data.get('seed'))
        edges = {(int(u), int(v)): int(mult) for u, v, mult in data['edges']}
        n, m = int(data['n']), int(data.get('m', 1))
        if 'targets' not in data:
            return Multigraph(n, edges, m=m, meta=meta)
        targets = [(), ()] + [tuple(int(t) for t in row) for row in data['targets']]
        if len(targets) != n + 1:
            raise GraphFormatError(f"targets lists {len(targets) - 2} vertices, expected {max(n - 1, 0)}")
        g = Multigraph.from_targets(targets, m, meta)
    except (KeyError, TypeError, ValueError) as e:
        raise GraphFormatError(f"bad graph JSON: {e}")
    if g.edges != edges:
        raise GraphFormatError("targets do not reproduce the edge list")
    return g


def graph_to_dot(g: Multigraph, name: str = 'G', max_vertices: int = DOT_MAX_VERTICES) -> str:
    """Render the graph through the DOT template; refuses graphs above max_vertices"""
    if g.n > max_vertices:
        raise ValueError(f"DOT export is limited to {max_vertices} vertices, graph has {g.n}")
    env = Environment(loader=FileSystemLoader(str(TEMPLATE_DIR)),
                      undefined=StrictUndefined, keep_trailing_newline=True)
    template = env.get_template(DOT_TEMPLATE)
    return template.render(
        name=name,
        n=g.n,
        m=g.m,
        alpha=g.meta.alpha,
        model=g.meta.model,
        seed=g.meta.seed,
        vertices=list(g.vertices()),
        edges=g.edge_items(),
    )


def write_dot(g: Multigraph, path, name: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(graph_to_dot(g, name=name or path.stem))
    return path


def convert_graph_file(source, target) -> bool:
    """Convert between .txt/.graph, .json and .dot by file suffix"""
    source, target = Path(source), Path(target)
    try:
        g = read_graph_file(source)
        if target.suffix == '.dot':
            write_dot(g, target)
        elif target.suffix == '.json':
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, 'w', encoding='utf-8') as f:
                json.dump(graph_to_json(g), f, indent=2)
        else:
            write_graph_file(g, target)
    except (OSError, ValueError) as e:
        print(f"❌ Conversion error: {e}", file=sys.stderr)
        return False

    print(f"✅ Converted {source} → {target} ({g.n} vertices, {g.edge_count} edges)", file=sys.stderr)
    return True
