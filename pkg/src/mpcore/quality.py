"""Core-periphery quality measures: multiplex QUBO score and persistence profiles.

QUBO score of a binary core indicator ``xb`` with core set ``S`` (size ``s``)
on layer ``k``:

    value_k(S) = E_k(S) / n1_k - (P(S) - E_k(S)) / nm_k

where ``E_k(S)`` counts ordered adjacent pairs with an endpoint in ``S``,
``P(S) = 2ns - s^2 - s`` counts all ordered off-diagonal pairs with an endpoint
in ``S``, ``n1_k`` is the number of ordered adjacent pairs and ``nm_k`` the
number of ordered non-adjacent off-diagonal pairs.  The multiplex score
averages the layer values with weights ``c / ||c||_1``.  It equals
``xb^T Q^(k) xb`` for

    Q^(k) = 2a D - 2(n-1)/nm I - a A + (11^T - I)/nm,   a = 1/n1 + 1/nm

which is never formed: everything runs on edge lists and prefix sums.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator

log = logging.getLogger(__name__)


class DegenerateLayerError(ValueError):
    """A layer is empty or complete, so its QUBO normalisation is undefined."""

    def __init__(self, layer, n1, n_missing):
        kind = "has no edges" if n1 == 0 else "is complete"
        super().__init__(f"layer {layer} {kind} (n1={n1}, missing={n_missing}); "
                         "pass exclude_degenerate=True to skip it")
        self.layer = layer


@dataclass(frozen=True)
class BinaryPartition:
    core_flags: np.ndarray

    @property
    def core_size(self):
        return int(np.count_nonzero(self.core_flags))

    @classmethod
    def from_core(cls, num_nodes, core):
        flags = np.zeros(num_nodes, dtype=bool)
        flags[np.asarray(core, dtype=np.int64)] = True
        return cls(flags)


@dataclass
class QuboSweepResult:
    scores: np.ndarray  # scores[s-1] for core size s
    s_star: int
    max_score: float
    ordering: np.ndarray

    @property
    def partition(self):
        flags = np.zeros(self.ordering.size, dtype=bool)
        flags[self.ordering[: self.s_star]] = True
        return BinaryPartition(flags)


@dataclass
class ProfileCurve:
    values: np.ndarray  # values[k, m-1] = P^(k)(S_m)
    ordering: np.ndarray


def descending_order(x):
    """Node order by descending score, ties by ascending index."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("coreness vector must be finite")
    return np.lexsort((np.arange(x.size), -x))


def ascending_order(x):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("coreness vector must be finite")
    return np.lexsort((np.arange(x.size), x))


def usable_layers(A, c, exclude_degenerate=False):
    """Layers entering the score and their raw (unnormalised) weights."""
    c = np.asarray(c, dtype=np.float64).ravel()
    if c.size != A.num_layers:
        raise ValueError(f"need {A.num_layers} layer weights, got {c.size}")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ValueError("layer weights must be finite and non-negative")
    keep = []
    for k in range(A.num_layers):
        if A.n1[k] == 0 or A.n_missing[k] == 0:
            if not exclude_degenerate:
                raise DegenerateLayerError(k, int(A.n1[k]), int(A.n_missing[k]))
            log.warning("excluding degenerate layer %d from the QUBO score", k)
            continue
        keep.append(k)
    if not keep or c[keep].sum() <= 0:
        raise ValueError("no layer with positive weight is left for the QUBO score")
    return keep, c[keep]


def _combine(weights, per_layer):
    # same accumulation order for numerator and normaliser, so identical
    # layer values give back exactly that value
    num = 0.0
    tot = 0.0
    for w, val in zip(weights, per_layer):
        num = num + w * val
        tot = tot + w
    return num / tot


def _layer_value(edges_touching, pairs_touching, n1, nm):
    return edges_touching / n1 - (pairs_touching - edges_touching) / nm


def qubo_value(A, c, part, exclude_degenerate=False):
    """Multiplex QUBO score of a binary partition."""
    flags = np.asarray(part.core_flags if isinstance(part, BinaryPartition) else part, dtype=bool)
    if flags.size != A.num_nodes:
        raise ValueError("partition length does not match the number of nodes")
    layers, w = usable_layers(A, c, exclude_degenerate)
    n, s = A.num_nodes, int(flags.sum())
    pairs = 2 * n * s - s * s - s
    vals = []
    for k in layers:
        lo, hi = A.upper_edges(k)
        e = 2 * int(np.count_nonzero(flags[lo] | flags[hi]))
        vals.append(_layer_value(e, pairs, A.n1[k], A.n_missing[k]))
    return float(_combine(w, vals))


def sweep(A, c, x, exclude_degenerate=False):
    """QUBO scores of the nested cores formed by the top-``s`` nodes of ``x``.

    Adding the node at rank ``s`` raises ``E_k`` by twice its number of
    neighbours outside the current core, i.e. every edge enters when its
    better-ranked endpoint does.  Prefix sums over those entry ranks give all
    ``n`` scores in O(nnz + n L).
    """
    layers, w = usable_layers(A, c, exclude_degenerate)
    n = A.num_nodes
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != n:
        raise ValueError("coreness vector length does not match the number of nodes")
    order = descending_order(x)
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    s = np.arange(1, n + 1, dtype=np.int64)
    pairs = 2 * n * s - s * s - s
    vals = []
    for k in layers:
        lo, hi = A.upper_edges(k)
        enter = np.minimum(rank[lo], rank[hi])
        e = 2 * np.cumsum(np.bincount(enter, minlength=n))
        vals.append(_layer_value(e, pairs, A.n1[k], A.n_missing[k]))
    scores = _combine(w, vals)
    best = int(np.argmax(scores))
    return QuboSweepResult(scores, best + 1, float(scores[best]), order)


def persistence_profile(A, x):
    """Random-walk persistence of the ``m`` most peripheral nodes, ``m = 1..n``.

    ``values[k, m-1]`` is the fraction of layer-``k`` walk steps started in
    ``S_m`` that stay in ``S_m``; it is 0 where ``S_m`` has no incident edges.
    """
    n = A.num_nodes
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != n:
        raise ValueError("coreness vector length does not match the number of nodes")
    order = ascending_order(x)
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    out = np.zeros((A.num_layers, n))
    for k in range(A.num_layers):
        lo, hi = A.upper_edges(k)
        inside = 2 * np.cumsum(np.bincount(np.maximum(rank[lo], rank[hi]), minlength=n))
        volume = np.cumsum(A.degrees[k][order])
        np.divide(inside, volume, out=out[k], where=volume > 0)
    return ProfileCurve(out, order)


def qubo_operator(A, c, exclude_degenerate=False):
    """Matrix-free ``sum_k (c_k/||c||_1) Q^(k)`` plus an absolute row-sum bound.

    Returns ``(op, bound)`` where ``op`` is a symmetric ``LinearOperator`` and
    ``bound`` majorises ``max_i sum_j |Q_ij|`` of the weighted matrix.
    """
    layers, w = usable_layers(A, c, exclude_degenerate)
    w = w / w.sum()
    n = A.num_nodes
    terms = []
    bound = np.zeros(n)
    for wk, k in zip(w, layers):
        n1, nm = float(A.n1[k]), float(A.n_missing[k])
        a = 1.0 / n1 + 1.0 / nm
        d = A.degrees[k].astype(np.float64)
        diag = 2.0 * a * d - 2.0 * (n - 1) / nm
        terms.append((wk, diag, a, A.layers[k], nm))
        # off-diagonal magnitudes: 1/n1 on edges, 1/nm elsewhere
        bound += wk * (np.abs(diag) + d / n1 + (n - 1 - d) / nm)

    def matvec(y):
        y = np.asarray(y, dtype=np.float64).ravel()
        total = y.sum()
        out = np.zeros(n)
        for wk, diag, a, adj, nm in terms:
            out += wk * (diag * y - a * (adj @ y) + (total - y) / nm)
        return out

    op = LinearOperator((n, n), matvec=matvec, rmatvec=matvec, dtype=np.float64)
    return op, float(bound.max())


def write_sweep_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "score"])
        for s, val in enumerate(result.scores.tolist(), 1):
            w.writerow([s, repr(float(val))])


def write_profile_csv(curve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "layer", "P"])
        L, n = curve.values.shape
        for k in range(L):
            for m, val in enumerate(curve.values[k].tolist(), 1):
                w.writerow([m, k, repr(float(val))])


def reordered_coordinates(A, order, layer):
    """Nonzero coordinates of layer ``layer`` after relabelling by ``order``.

    Node ``order[i]`` moves to position ``i``.  Returns ``(rows, cols)``
    covering both orientations of every edge, sorted row-major.
    """
    if not 0 <= layer < A.num_layers:
        raise ValueError(f"layer {layer} out of range [0, {A.num_layers})")
    order = np.asarray(order, dtype=np.int64)
    if order.size != A.num_nodes or np.unique(order).size != order.size:
        raise ValueError("order must be a permutation of the nodes")
    pos = np.empty(A.num_nodes, dtype=np.int64)
    pos[order] = np.arange(A.num_nodes)
    lo, hi = A.upper_edges(layer)
    rows = np.concatenate([pos[lo], pos[hi]])
    cols = np.concatenate([pos[hi], pos[lo]])
    idx = np.lexsort((cols, rows))
    return rows[idx], cols[idx]
