"""Sparse node-aligned multiplex networks.

A multiplex with ``n`` nodes and ``L`` layers is stored as one binary,
symmetric, loop-free CSR matrix per layer, plus the concatenated list of
undirected edges ``(u < v, layer)`` that the solver sweeps over.
"""

import csv
import logging
import math
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .rng import NOISE_STREAM, SBM_STREAM, make_rng

log = logging.getLogger(__name__)


class EdgeListError(ValueError):
    """Raised for unreadable or malformed edge-list files."""


def _freeze(a):
    a.setflags(write=False)
    return a


def _canonical_pairs(n, u, v):
    """Drop loops, orient each pair as (min, max), remove duplicates."""
    u = np.asarray(u, dtype=np.int64).ravel()
    v = np.asarray(v, dtype=np.int64).ravel()
    keep = u != v
    u, v = u[keep], v[keep]
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    keys = np.unique(lo * n + hi)
    return keys // n, keys % n


class MultiplexAdjacency:
    """Immutable binary multiplex adjacency tensor.

    Build it through :meth:`from_edges` (or the loaders/generators below);
    whatever pairs are passed in get symmetrised, deduplicated and stripped of
    self-loops, so the invariants hold on every construction path.

    Attributes:
        num_nodes: number of nodes ``n``.
        num_layers: number of layers ``L``.
        layers: tuple of ``L`` CSR matrices with unit entries.
        degrees: ``(L, n)`` integer array of per-layer degrees.
        n1: ordered nonzero pairs per layer (twice the undirected edge count).
        n2: ``n**2 - n1`` per layer.
        node_labels: original node id per internal index (or ``None``).
        layer_labels: original layer id per internal index (or ``None``).
    """

    def __init__(self, num_nodes, layer_pairs, node_labels=None, layer_labels=None):
        n = int(num_nodes)
        if n < 1:
            raise ValueError("a multiplex needs at least one node")
        if len(layer_pairs) < 1:
            raise ValueError("a multiplex needs at least one layer")
        self.num_nodes = n
        self.num_layers = len(layer_pairs)

        us, vs = [], []
        for k, (u, v) in enumerate(layer_pairs):
            u = np.asarray(u, dtype=np.int64).ravel()
            v = np.asarray(v, dtype=np.int64).ravel()
            if u.shape != v.shape:
                raise ValueError(f"layer {k}: endpoint arrays differ in length")
            if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
                raise ValueError(f"layer {k}: node index out of range [0, {n})")
            lo, hi = _canonical_pairs(n, u, v)
            us.append(_freeze(lo))
            vs.append(_freeze(hi))
        self._upper = tuple(zip(us, vs))

        layers = []
        for lo, hi in self._upper:
            rows = np.concatenate([lo, hi])
            cols = np.concatenate([hi, lo])
            data = np.ones(rows.size, dtype=np.float64)
            m = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
            m.sort_indices()
            for arr in (m.data, m.indices, m.indptr):
                arr.setflags(write=False)
            layers.append(m)
        self.layers = tuple(layers)

        self.degrees = _freeze(np.vstack([np.diff(m.indptr) for m in layers]).astype(np.int64))
        self.n1 = _freeze(np.array([m.nnz for m in layers], dtype=np.int64))
        self.n2 = _freeze(n * n - self.n1)

        self.node_labels = None if node_labels is None else _freeze(np.asarray(node_labels))
        self.layer_labels = None if layer_labels is None else _freeze(np.asarray(layer_labels))
        if self.node_labels is not None and len(self.node_labels) != n:
            raise ValueError("node_labels must have one entry per node")
        if self.layer_labels is not None and len(self.layer_labels) != self.num_layers:
            raise ValueError("layer_labels must have one entry per layer")
        self.check_invariants()

    @classmethod
    def from_edges(cls, num_nodes, layer_edges, **labels):
        """Build from per-layer iterables of ``(u, v)`` pairs."""
        pairs = []
        for edges in layer_edges:
            e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                           dtype=np.int64).reshape(-1, 2)
            pairs.append((e[:, 0], e[:, 1]))
        return cls(num_nodes, pairs, **labels)

    @classmethod
    def from_sparse(cls, matrices, **labels):
        """Build from square sparse/dense matrices; any nonzero becomes an edge."""
        mats = [sp.coo_matrix(m) for m in matrices]
        if not mats:
            raise ValueError("need at least one layer")
        n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n):
                raise ValueError("all layers must be square with the same size")
            if m.data.size and m.data.min() < 0:
                raise ValueError("negative edge weights are not allowed")
        return cls(n, [(m.row[m.data != 0], m.col[m.data != 0]) for m in mats], **labels)

    def check_invariants(self):
        n = self.num_nodes
        for k, m in enumerate(self.layers):
            if (m != m.T).nnz:
                raise AssertionError(f"layer {k} is not symmetric")
            if m.diagonal().any():
                raise AssertionError(f"layer {k} has diagonal entries")
            if m.nnz and not np.all(m.data == 1.0):
                raise AssertionError(f"layer {k} is not binary")
            if self.n1[k] != self.degrees[k].sum() or self.n1[k] + self.n2[k] != n * n:
                raise AssertionError(f"layer {k} edge statistics are inconsistent")

    def upper_edges(self, k):
        """Return the ``(u, v)`` arrays (``u < v``) of layer ``k``."""
        return self._upper[k]

    def num_edges(self, k=None):
        """Undirected edge count of layer ``k``, or a per-layer array."""
        counts = self.n1 // 2
        return counts if k is None else int(counts[k])

    @cached_property
    def n_missing(self):
        """Missing ordered off-diagonal pairs per layer, ``n(n-1) - n1``."""
        n = self.num_nodes
        return _freeze(n * (n - 1) - self.n1)

    @cached_property
    def edge_arrays(self):
        """Concatenated undirected edges over all layers: ``(u, v, layer)``."""
        u = np.concatenate([lo for lo, _ in self._upper])
        v = np.concatenate([hi for _, hi in self._upper])
        layer = np.repeat(np.arange(self.num_layers), [lo.size for lo, _ in self._upper])
        return _freeze(u), _freeze(v), _freeze(layer)

    def subgraph(self, nodes):
        """Induced sub-multiplex on ``nodes`` (kept in the given order)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.num_nodes, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        pairs = []
        for lo, hi in self._upper:
            keep = (remap[lo] >= 0) & (remap[hi] >= 0)
            pairs.append((remap[lo[keep]], remap[hi[keep]]))
        labels = None if self.node_labels is None else self.node_labels[nodes]
        return MultiplexAdjacency(nodes.size, pairs, node_labels=labels,
                                  layer_labels=self.layer_labels), remap

    def permuted(self, perm):
        """Relabel nodes so that old node ``perm[i]`` becomes node ``i``."""
        perm = np.asarray(perm, dtype=np.int64)
        if np.sort(perm).tolist() != list(range(self.num_nodes)):
            raise ValueError("perm must be a permutation of range(n)")
        return self.subgraph(perm)[0]

    def with_layer(self, u, v, label=None):
        """Return a copy with one extra layer appended."""
        pairs = list(self._upper) + [(np.asarray(u), np.asarray(v))]
        labels = None
        if self.layer_labels is not None:
            labels = list(self.layer_labels) + [label if label is not None else len(pairs) - 1]
        return MultiplexAdjacency(self.num_nodes, pairs, node_labels=self.node_labels,
                                  layer_labels=labels)

    def __repr__(self):
        edges = ", ".join(str(e) for e in self.num_edges())
        return f"MultiplexAdjacency(n={self.num_nodes}, L={self.num_layers}, edges=[{edges}])"


def _parse_id(tok, what, lineno, id_base):
    try:
        val = int(tok)
    except ValueError:
        raise EdgeListError(f"line {lineno}: {what} id {tok!r} is not an integer") from None
    if val < id_base:
        raise EdgeListError(f"line {lineno}: {what} id {val} is below id base {id_base}")
    return val


def load_edge_list(path, delimiter=None, id_base=1, has_weight_column=None):
    """Read a ``layer u v [w]`` edge list into a :class:`MultiplexAdjacency`.

    Lines starting with ``#`` and blank lines are skipped.  Node and layer ids
    are remapped to dense 0-based indices in ascending id order; the original
    ids are kept in ``node_labels``/``layer_labels``.  Edges with weight 0 are
    dropped, other positive weights binarise to 1.

    Args:
        path: file to read.
        delimiter: column separator; ``None`` splits on any whitespace.
        id_base: smallest admissible id (0 or 1).
        has_weight_column: ``True``/``False`` to force, ``None`` to accept an
            optional fourth column.
    """
    layers, us, vs = [], [], []
    seen_nodes = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split(delimiter)
            cols = [c for c in cols if c != ""]
            ncols = len(cols)
            want = {True: (4,), False: (3,), None: (3, 4)}[has_weight_column]
            if ncols not in want:
                raise EdgeListError(
                    f"line {lineno}: expected {' or '.join(map(str, want))} columns, got {ncols}")
            lay = _parse_id(cols[0], "layer", lineno, id_base)
            u = _parse_id(cols[1], "node", lineno, id_base)
            v = _parse_id(cols[2], "node", lineno, id_base)
            seen_nodes.update((u, v))
            if ncols == 4:
                try:
                    w = float(cols[3])
                except ValueError:
                    raise EdgeListError(f"line {lineno}: weight {cols[3]!r} is not a number") from None
                if not math.isfinite(w) or w < 0:
                    raise EdgeListError(f"line {lineno}: weight must be finite and non-negative")
                if w == 0:
                    layers.append(lay)
                    us.append(-1)
                    vs.append(-1)
                    continue
            layers.append(lay)
            us.append(u)
            vs.append(v)
    if not layers:
        raise EdgeListError(f"{path}: no edges found")

    node_ids = np.array(sorted(seen_nodes), dtype=np.int64)
    layer_ids = np.unique(np.array(layers, dtype=np.int64))
    lay = np.searchsorted(layer_ids, np.array(layers, dtype=np.int64))
    u = np.array(us, dtype=np.int64)
    v = np.array(vs, dtype=np.int64)
    real = u >= 0
    ui = np.full(u.shape, -1, dtype=np.int64)
    vi = np.full(v.shape, -1, dtype=np.int64)
    ui[real] = np.searchsorted(node_ids, u[real])
    vi[real] = np.searchsorted(node_ids, v[real])
    pairs = []
    for k in range(layer_ids.size):
        sel = (lay == k) & real
        pairs.append((ui[sel], vi[sel]))
    return MultiplexAdjacency(node_ids.size, pairs, node_labels=node_ids, layer_labels=layer_ids)


def save_edge_list(A, path, use_labels=True):
    """Write ``A`` as a ``layer u v`` edge list, one line per undirected edge."""
    nodes = A.node_labels if (use_labels and A.node_labels is not None) else np.arange(A.num_nodes)
    lays = A.layer_labels if (use_labels and A.layer_labels is not None) else np.arange(A.num_layers)
    with open(path, "w") as fh:
        fh.write(f"# multiplex n={A.num_nodes} L={A.num_layers}\n")
        for k in range(A.num_layers):
            lo, hi = A.upper_edges(k)
            for a, b in zip(nodes[lo].tolist(), nodes[hi].tolist()):
                fh.write(f"{lays[k]} {a} {b}\n")


def write_index_map(A, path):
    """Write the ``original,internal`` node index map as CSV."""
    labels = A.node_labels if A.node_labels is not None else np.arange(A.num_nodes)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["original", "internal"])
        for i, lab in enumerate(labels.tolist()):
            w.writerow([lab, i])


def largest_connected_component(A, mode="aggregated", layer=None):
    """Restrict ``A`` to the largest connected component of a chosen graph.

    ``mode="aggregated"`` uses the union of all layers, ``mode="single_layer"``
    uses layer ``layer`` only.  Ties go to the component holding the smallest
    node index.  Returns ``(sub_multiplex, old_to_new)`` where ``old_to_new``
    holds ``-1`` for dropped nodes.
    """
    if mode == "aggregated":
        g = A.layers[0]
        for m in A.layers[1:]:
            g = g + m
    elif mode == "single_layer":
        if layer is None or not 0 <= layer < A.num_layers:
            raise ValueError(f"single_layer mode needs a layer index in [0, {A.num_layers})")
        g = A.layers[layer]
    else:
        raise ValueError(f"unknown LCC mode {mode!r}")
    _, labels = connected_components(g, directed=False)
    sizes = np.bincount(labels)
    # labels are assigned in order of first appearance, so the first label
    # attaining the maximum contains the smallest node index
    best = int(np.flatnonzero(sizes == sizes.max())[0])
    nodes = np.flatnonzero(labels == best)
    return A.subgraph(nodes)


def _decode_pair_index(t, n):
    """Map linear indices over the strict upper triangle to ``(u, v)``, row-major."""
    t = np.asarray(t, dtype=np.int64)
    total = n * (n - 1) // 2
    # count from the end: the last k rows hold k*(k+1)/2 pairs
    r = total - 1 - t
    k = np.floor((np.sqrt(8.0 * r + 1) - 1) / 2).astype(np.int64)
    # guard float rounding
    k = np.where((k + 1) * (k + 2) // 2 <= r, k + 1, k)
    k = np.where(k * (k + 1) // 2 > r, k - 1, k)
    u = n - 2 - k
    start = u * (2 * n - u - 1) // 2
    v = t - start + u + 1
    return u, v


def _sample_pairs(rng, count, pool_size):
    if count > pool_size:
        raise ValueError(f"cannot draw {count} distinct pairs from {pool_size}")
    if count == 0:
        return np.empty(0, dtype=np.int64)
    return np.asarray(rng.choice(pool_size, size=count, replace=False), dtype=np.int64)


def add_noise_layer(A, noise_level, seed):
    """Append a layer of uniformly random edges to a single-layer multiplex.

    The new layer holds ``round(noise_level * m)`` distinct non-loop edges,
    ``m`` being the informative layer's undirected edge count.  Collisions
    with the informative layer are allowed.
    """
    if A.num_layers != 1:
        raise ValueError("add_noise_layer expects exactly one (informative) layer")
    if noise_level < 0:
        raise ValueError("noise_level must be non-negative")
    n = A.num_nodes
    count = int(math.floor(noise_level * A.num_edges(0) + 0.5))
    pool = n * (n - 1) // 2
    if count > pool:
        raise ValueError(f"{count} noise edges requested but only {pool} node pairs exist")
    rng = make_rng(seed, NOISE_STREAM)
    u, v = _decode_pair_index(_sample_pairs(rng, count, pool), n)
    return A.with_layer(u, v, label="noise")


def generate_sbm_multiplex(n, num_layers, core_sizes, probs, seed, permute_core=False):
    """Sample a multiplex whose layers are independent core-periphery SBMs.

    Args:
        n: number of nodes.
        num_layers: number of layers.
        core_sizes: per-layer core size (an int applies to every layer).
        probs: per-layer ``(p_cc, p_cp, p_pp)`` (a single triple applies to
            every layer).
        seed: integer seed.
        permute_core: if true, each layer's core is a random node subset
            instead of the first ``core_sizes[k]`` nodes.
    """
    if np.isscalar(core_sizes):
        core_sizes = [int(core_sizes)] * num_layers
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        probs = np.tile(probs, (num_layers, 1))
    if len(core_sizes) != num_layers or probs.shape != (num_layers, 3):
        raise ValueError("core_sizes and probs need one entry per layer")
    if not np.all((probs >= 0) & (probs <= 1)):
        raise ValueError("SBM probabilities must lie in [0, 1]")
    rng = make_rng(seed, SBM_STREAM)
    pairs = []
    for k in range(num_layers):
        s = int(core_sizes[k])
        if not 0 <= s <= n:
            raise ValueError(f"layer {k}: core size {s} outside [0, {n}]")
        p_cc, p_cp, p_pp = probs[k]
        us, vs = [], []
        # core-core block
        pool = s * (s - 1) // 2
        idx = _sample_pairs(rng, rng.binomial(pool, p_cc), pool)
        a, b = _decode_pair_index(idx, s) if s > 1 else (idx, idx)
        us.append(a)
        vs.append(b)
        # core-periphery block
        pool = s * (n - s)
        idx = _sample_pairs(rng, rng.binomial(pool, p_cp), pool)
        us.append(idx // max(n - s, 1))
        vs.append(s + idx % max(n - s, 1))
        # periphery-periphery block
        pool = (n - s) * (n - s - 1) // 2
        idx = _sample_pairs(rng, rng.binomial(pool, p_pp), pool)
        a, b = _decode_pair_index(idx, n - s) if n - s > 1 else (idx, idx)
        us.append(s + a)
        vs.append(s + b)
        u, v = np.concatenate(us), np.concatenate(vs)
        if permute_core:
            perm = rng.permutation(n)
            u, v = perm[u], perm[v]
        pairs.append((u, v))
    return MultiplexAdjacency(n, pairs)


def ideal_lshape_multiplex(n, core_sizes):
    """Multiplex of exact L-shapes: core nodes ``0..s-1`` link to everyone."""
    if np.isscalar(core_sizes):
        core_sizes = [int(core_sizes)]
    pairs = []
    for s in core_sizes:
        u, v = np.triu_indices(n, k=1)
        keep = u < s
        pairs.append((u[keep], v[keep]))
    return MultiplexAdjacency(n, pairs)


def aggregate(A, c):
    """Weighted aggregate ``sum_k c[k] * A^(k)`` as a CSR matrix."""
    c = np.asarray(c, dtype=np.float64).ravel()
    if c.size != A.num_layers:
        raise ValueError(f"need {A.num_layers} layer weights, got {c.size}")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ValueError("layer weights must be finite and non-negative")
    out = sp.csr_matrix((A.num_nodes, A.num_nodes), dtype=np.float64)
    for w, m in zip(c, A.layers):
        if w != 0:
            out = out + w * m
    out.sort_indices()
    return out
