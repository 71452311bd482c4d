"""Uncompressed graph representation, ingestion and synthetic generation.

Graphs are directed, with nodes 0..n-1 and each adjacency list stored as a
strictly increasing sequence of target ids (CSR layout).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError

MAX_NODE_ID = (1 << 48) - 1
CSR_MAGIC = b"ZKCSR01\0"


@dataclass
class Graph:
    n: int
    offsets: np.ndarray  # int64, length n + 1
    targets: np.ndarray  # int64, length m

    @property
    def m(self) -> int:
        return int(self.offsets[-1])

    def degree(self, u: int) -> int:
        return int(self.offsets[u + 1] - self.offsets[u])

    def neighbors(self, u: int) -> np.ndarray:
        return self.targets[int(self.offsets[u]) : int(self.offsets[u + 1])]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.targets, other.targets)
        )

    @classmethod
    def from_lists(cls, lists: list[list[int]]) -> "Graph":
        offsets = np.zeros(len(lists) + 1, dtype=np.int64)
        for u, lst in enumerate(lists):
            offsets[u + 1] = offsets[u] + len(lst)
        targets = np.array(
            [x for lst in lists for x in lst], dtype=np.int64
        )
        return cls(len(lists), offsets, targets)

    def to_lists(self) -> list[list[int]]:
        return [self.neighbors(u).tolist() for u in range(self.n)]


def validate(g: Graph) -> None:
    """Assert all Graph invariants; raises ValidationError naming the node."""
    if g.n < 0 or len(g.offsets) != g.n + 1 or g.offsets[0] != 0:
        raise ValidationError("malformed offsets array")
    if np.any(np.diff(g.offsets) < 0):
        raise ValidationError("offsets are not nondecreasing")
    if int(g.offsets[-1]) != len(g.targets):
        raise ValidationError("offsets do not cover the targets array")
    if g.m:
        if int(g.targets.min()) < 0 or int(g.targets.max()) >= g.n:
            bad = int(np.argmax((g.targets < 0) | (g.targets >= g.n)))
            node = int(np.searchsorted(g.offsets, bad, side="right")) - 1
            raise ValidationError(f"target out of range in list of node {node}")
        gaps = np.diff(g.targets)
        inner = np.ones(len(gaps), dtype=bool)
        # gap index offsets[u] - 1 spans two adjacent lists and is exempt
        boundary = g.offsets[1:-1] - 1
        inner[boundary[(boundary >= 0) & (boundary < len(gaps))]] = False
        bad_mask = inner & (gaps <= 0)
        if np.any(bad_mask):
            bad = int(np.flatnonzero(bad_mask)[0])
            node = int(np.searchsorted(g.offsets, bad + 1, side="right")) - 1
            kind = "duplicate" if gaps[bad] == 0 else "unsorted"
            raise ValidationError(f"{kind} target in list of node {node}")


def load_edge_list(text: str) -> Graph:
    """Parse "src dst" lines into a validated Graph.

    Lines starting with '#' and blank lines are ignored; edges are grouped
    by source, sorted and deduplicated, so the result is independent of the
    input order.
    """
    srcs = []
    dsts = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'src dst', got {line!r}")
        try:
            s, d = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer node id in {line!r}") from None
        if s < 0 or d < 0:
            raise FormatError(f"line {lineno}: negative node id")
        if s > MAX_NODE_ID or d > MAX_NODE_ID:
            raise FormatError(f"line {lineno}: node id exceeds 2**48 - 1")
        srcs.append(s)
        dsts.append(d)
    if not srcs:
        return Graph(0, np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))
    src = np.array(srcs, dtype=np.int64)
    dst = np.array(dsts, dtype=np.int64)
    n = int(max(src.max(), dst.max())) + 1
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    keep = np.ones(len(src), dtype=bool)
    keep[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
    src, dst = src[keep], dst[keep]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.add.at(offsets, src + 1, 1)
    offsets = np.cumsum(offsets)
    return Graph(n, offsets, dst)


def write_edge_list(g: Graph, fileobj) -> None:
    """Inverse of load_edge_list for validated graphs."""
    for u in range(g.n):
        for v in g.neighbors(u).tolist():
            fileobj.write(f"{u} {v}\n")


def save_csr(g: Graph, fileobj) -> None:
    """Binary CSR cache: magic, n, m, offsets and targets as little-endian u64."""
    fileobj.write(CSR_MAGIC)
    fileobj.write(np.array([g.n, g.m], dtype="<u8").tobytes())
    fileobj.write(g.offsets.astype("<u8").tobytes())
    fileobj.write(g.targets.astype("<u8").tobytes())


def load_csr(fileobj) -> Graph:
    magic = fileobj.read(len(CSR_MAGIC))
    if magic != CSR_MAGIC:
        raise FormatError("not a CSR cache (bad magic)")
    head_raw = fileobj.read(16)
    if len(head_raw) != 16:
        raise FormatError("truncated CSR header")
    n, m = (int(x) for x in np.frombuffer(head_raw, dtype="<u8"))
    body = fileobj.read(8 * (n + 1 + m))
    if len(body) != 8 * (n + 1 + m):
        raise FormatError("truncated CSR body")
    arr = np.frombuffer(body, dtype="<u8").astype(np.int64)
    offsets, targets = arr[: n + 1], arr[n + 1 :]
    g = Graph(n, offsets, targets)
    validate(g)
    return g


def generate_copying_graph(n: int, seed: int = 0, avg_degree: float = 8.0) -> Graph:
    """Deterministic synthetic graph with web-like locality and similarity.

    Each new node usually copies most of a recent node's list (trimmed by
    a little at each end) and adds residual edges with geometric gaps
    around its own id.  The strong copying makes consecutive lists highly
    similar, so reference chains run deep when left unbounded — the same
    structure the block-copy coder and chain-bounded reference selection
    are designed around.  ``avg_degree`` is a rough target, calibrated at
    the default value.
    """
    if n < 1:
        raise ValueError("need at least one node")
    rng = random.Random(seed ^ 0xC0FFEE)
    lists: list[list[int]] = []
    mean_extra = max(avg_degree * 0.18, 1.0)
    for u in range(n):
        if rng.random() < 0.03:
            lists.append([])
            continue
        adj: list[int] = []
        if u > 0 and rng.random() < 0.85:
            v = u - 1 - min(int(rng.expovariate(1.2)), min(u - 1, 15))
            src = lists[v]
            if src:
                ln = len(src)
                lo = min(int(rng.expovariate(2.0)), ln - 1)
                hi = ln - min(int(rng.expovariate(2.0)), ln - 1 - lo)
                adj = src[lo:hi]
        extra = 1 + int(rng.expovariate(1.0 / mean_extra))
        pos = u
        for _ in range(extra):
            gap = 1 + int(rng.expovariate(1.0 / 6.0))
            pos = pos + gap if rng.random() < 0.7 else pos - gap
            if 0 <= pos < n:
                adj.append(pos)
            else:
                pos = min(max(pos, 0), n - 1)
        lists.append(sorted(set(adj)))
    return Graph.from_lists(lists)
