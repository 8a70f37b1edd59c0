"""Graphs, datasets, and the plain-text dataset file format.

Everything downstream (moment estimation, inference, sampling) works on
the two containers defined here: an undirected ``Graph`` over nodes
``0..n-1`` and a ``Dataset`` of points confined to a box ``[low, high]^n``.
Both are immutable after construction and safe to share.
"""

import numpy as np


class Graph:
    """Undirected graph on nodes ``0..n-1`` with no self-loops.

    Edges are stored once, as ``(min, max)`` tuples, sorted.  ``neighbors[i]``
    is the sorted tuple of nodes adjacent to ``i``.
    """

    def __init__(self, n, edges, shape=None):
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        canon = set()
        for (u, v) in edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            canon.add((min(u, v), max(u, v)))
        self.n = int(n)
        self.edges = tuple(sorted(canon))
        nbrs = [[] for _ in range(n)]
        for (u, v) in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self.neighbors = tuple(tuple(sorted(b)) for b in nbrs)
        self.shape = shape  # ("chain", n) / ("grid", r, c) when built by a helper

    @property
    def edge_count(self):
        return len(self.edges)

    def degree(self, i):
        return len(self.neighbors[i])

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self._edge_set

    @property
    def _edge_set(self):
        # cached on first use; Graph is immutable afterwards
        es = getattr(self, "_edge_set_cache", None)
        if es is None:
            es = frozenset(self.edges)
            object.__setattr__(self, "_edge_set_cache", es)
        return es

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count})"


def build_chain(n):
    """1D chain ``0-1-...-(n-1)``; requires ``n >= 2``."""
    if n < 2:
        raise ValueError(f"chain needs n >= 2, got {n}")
    return Graph(n, [(i, i + 1) for i in range(n - 1)], shape=("chain", n))


def build_grid(rows, cols):
    """4-neighbor grid with ``rows*cols`` nodes in row-major order."""
    if rows < 2 or cols < 2:
        raise ValueError(f"grid needs rows, cols >= 2, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return Graph(rows * cols, edges, shape=("grid", rows, cols))


class Dataset:
    """N points in ``[low, high]^n``, stored as an (N, n) float array."""

    def __init__(self, values, interval):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        low, high = float(interval[0]), float(interval[1])
        if low >= high:
            raise ValueError(f"empty interval [{low}, {high}]")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("dataset needs N >= 1 points and n >= 1 variables")
        bad = np.nonzero((values < low) | (values > high))
        if bad[0].size:
            r, c = int(bad[0][0]), int(bad[1][0])
            raise ValueError(
                f"value {values[r, c]!r} at row {r}, column {c} "
                f"outside [{low}, {high}]"
            )
        self.values = values
        self.values.setflags(write=False)
        self.interval = (low, high)

    @property
    def N(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]

    def __repr__(self):
        return f"Dataset(N={self.N}, n={self.n}, interval={self.interval})"


def save_dataset(dataset, path):
    """Write one comma-separated point per line, at float round-trip precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in dataset.values:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_dataset(path, interval):
    """Read a dataset file written by :func:`save_dataset`.

    Lines starting with ``#`` and blank lines are skipped.  Raises
    ``ValueError`` naming the offending line for malformed rows, rows of
    inconsistent width, or values outside ``interval``.
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split(",")
            try:
                row = [float(f) for f in fields]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed row {text!r}")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} values, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows (N >= 1 violated)")
    return Dataset(np.array(rows), interval)
